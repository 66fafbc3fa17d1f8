#include "brainnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace brainnet {

ExplanationSubgraph threshold_subgraph(const Tensor& w_masked, const Tensor& sigma_m,
                                       const SubgraphRule& rule) {
    require_same_shape(w_masked, sigma_m, "threshold_subgraph");
    if (w_masked.rows != w_masked.cols)
        throw DataError("threshold_subgraph: matrices must be square");
    const std::size_t n = w_masked.rows;
    std::vector<KeptEdge> candidates;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (w_masked(i, j) != 0.0)
                candidates.push_back({i, j, w_masked(i, j), sigma_m(i, j)});

    ExplanationSubgraph sub;
    sub.n = n;
    if (const auto* tk = std::get_if<TopKRule>(&rule)) {
        if (tk->k < 1) throw DataError("threshold_subgraph: top_k must be >= 1");
        std::sort(candidates.begin(), candidates.end(),
                  [](const KeptEdge& a, const KeptEdge& b) {
                      if (a.mask != b.mask) return a.mask > b.mask;
                      return std::tie(a.i, a.j) < std::tie(b.i, b.j);
                  });
        std::size_t k = std::min<std::size_t>(tk->k, candidates.size());
        sub.kept_edges.assign(candidates.begin(), candidates.begin() + k);
        std::sort(sub.kept_edges.begin(), sub.kept_edges.end(),
                  [](const KeptEdge& a, const KeptEdge& b) {
                      return std::tie(a.i, a.j) < std::tie(b.i, b.j);
                  });
    } else {
        const auto& th = std::get<ThresholdRule>(rule);
        for (const auto& e : candidates)
            if (e.mask > th.tau) sub.kept_edges.push_back(e);
    }
    return sub;
}

NodeMetrics node_metrics(const ExplanationSubgraph& sub) {
    const std::size_t n = sub.n;
    NodeMetrics m;
    m.degree.assign(n, 0.0);
    m.strength.assign(n, 0.0);
    m.clustering.assign(n, 0.0);
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : sub.kept_edges) {
        m.degree[e.i] += 1.0;
        m.degree[e.j] += 1.0;
        m.strength[e.i] += std::abs(e.weight);
        m.strength[e.j] += std::abs(e.weight);
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
    }
    std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
    for (const auto& e : sub.kept_edges) has[e.i][e.j] = has[e.j][e.i] = true;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = adj[i].size();
        if (k < 2) continue;
        std::size_t closed = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (has[adj[i][a]][adj[i][b]]) ++closed;
        m.clustering[i] = 2.0 * double(closed) / (double(k) * double(k - 1));
    }
    return m;
}

namespace {

std::vector<System> rank_one(const std::vector<double>& metric, const AtlasMap& atlas,
                             std::size_t top) {
    std::array<double, 8> sum{};
    std::array<std::size_t, 8> count{};
    for (std::size_t i = 0; i < atlas.n; ++i) {
        auto s = static_cast<std::size_t>(atlas.system_of[i]);
        sum[s] += metric[i];
        ++count[s];
    }
    std::vector<std::size_t> present;
    for (std::size_t s = 0; s < 8; ++s)
        if (count[s] > 0) present.push_back(s);
    std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
        return sum[a] / double(count[a]) > sum[b] / double(count[b]);
    });
    if (present.size() > top) present.resize(top);
    std::vector<System> out;
    for (std::size_t s : present) out.push_back(static_cast<System>(s));
    return out;
}

}  // namespace

SystemRanking rank_systems(const NodeMetrics& metrics, const AtlasMap& atlas,
                           std::size_t top) {
    if (metrics.degree.size() != atlas.n)
        throw DataError("rank_systems: metrics must cover all atlas nodes");
    SystemRanking r;
    r.by_degree = rank_one(metrics.degree, atlas, top);
    r.by_strength = rank_one(metrics.strength, atlas, top);
    r.by_clustering = rank_one(metrics.clustering, atlas, top);
    return r;
}

std::size_t Partition::num_communities() const {
    std::size_t mx = 0;
    for (std::size_t c : community_of) mx = std::max(mx, c + 1);
    return mx;
}

namespace {

Tensor clamp_nonnegative(const Tensor& w) {
    if (w.rows != w.cols) throw DataError("community detection: matrix must be square");
    Tensor a = w;
    for (std::size_t i = 0; i < a.rows; ++i) {
        a(i, i) = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j)
            if (a(i, j) < 0.0) a(i, j) = 0.0;
    }
    return a;
}

// Leading eigenpair of a symmetric matrix via shifted power iteration.
// Returns {eigenvalue, eigenvector}.
std::pair<double, std::vector<double>> leading_eig(
    const std::vector<std::vector<double>>& B) {
    const std::size_t n = B.size();
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(B[i][j]);
        shift = std::max(shift, row);
    }
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n), next(n);
    for (double& x : v) x = dist(rng);
    double lambda = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = shift * v[i];
            for (std::size_t j = 0; j < n; ++j) s += B[i][j] * v[j];
            next[i] = s;
        }
        double norm = std::sqrt(std::inner_product(next.begin(), next.end(),
                                                   next.begin(), 0.0));
        if (norm == 0.0) return {-shift, v};  // v in the kernel of B + shift*I
        for (double& x : next) x /= norm;
        double new_lambda = norm - shift;
        double drift = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            drift = std::max(drift, std::abs(next[i] - v[i]));
        v = next;
        if (drift < 1e-10) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    // Rayleigh quotient of the unshifted matrix
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) num += v[i] * B[i][j] * v[j];
    return {num, v};
}

void bisect(const Tensor& a, const std::vector<double>& k, double two_m,
            const std::vector<std::size_t>& group, std::vector<std::size_t>& comm,
            std::size_t& next_id) {
    const std::size_t g = group.size();
    if (g < 2) {
        for (std::size_t idx : group) comm[idx] = next_id;
        ++next_id;
        return;
    }
    // generalized modularity matrix restricted to the group
    std::vector<std::vector<double>> B(g, std::vector<double>(g, 0.0));
    for (std::size_t p = 0; p < g; ++p)
        for (std::size_t q = 0; q < g; ++q)
            B[p][q] = a(group[p], group[q]) - k[group[p]] * k[group[q]] / two_m;
    for (std::size_t p = 0; p < g; ++p) {
        double row = 0.0;
        for (std::size_t q = 0; q < g; ++q) row += B[p][q];
        B[p][p] -= row;
    }
    auto [lambda, v] = leading_eig(B);
    if (lambda <= 1e-9) {
        for (std::size_t idx : group) comm[idx] = next_id;
        ++next_id;
        return;
    }
    std::vector<double> s(g);
    for (std::size_t p = 0; p < g; ++p) s[p] = v[p] >= 0.0 ? 1.0 : -1.0;
    double dq = 0.0;
    for (std::size_t p = 0; p < g; ++p)
        for (std::size_t q = 0; q < g; ++q) dq += s[p] * B[p][q] * s[q];
    dq /= 2.0 * two_m;
    std::vector<std::size_t> left, right;
    for (std::size_t p = 0; p < g; ++p)
        (s[p] > 0.0 ? left : right).push_back(group[p]);
    if (dq <= 1e-9 || left.empty() || right.empty()) {
        for (std::size_t idx : group) comm[idx] = next_id;
        ++next_id;
        return;
    }
    bisect(a, k, two_m, left, comm, next_id);
    bisect(a, k, two_m, right, comm, next_id);
}

}  // namespace

Partition spectral_communities(const Tensor& w) {
    Tensor a = clamp_nonnegative(w);
    const std::size_t n = a.rows;
    Partition p;
    p.community_of.assign(n, 0);
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a(i, j);
        two_m += k[i];
    }
    if (two_m == 0.0) return p;  // edgeless: single community
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::size_t next_id = 0;
    bisect(a, k, two_m, all, p.community_of, next_id);
    return p;
}

double modularity(const Tensor& w, const Partition& p) {
    Tensor a = clamp_nonnegative(w);
    const std::size_t n = a.rows;
    if (p.community_of.size() != n)
        throw DataError("modularity: partition does not cover the node set");
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a(i, j);
        two_m += k[i];
    }
    if (two_m == 0.0) return 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (p.community_of[i] == p.community_of[j])
                q += a(i, j) - k[i] * k[j] / two_m;
    return q / two_m;
}

namespace {

double entropy(const std::vector<double>& counts, double total) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / total) * std::log(c / total);
    return h;
}

double comb2(double x) { return x < 2.0 ? 0.0 : x * (x - 1.0) / 2.0; }

}  // namespace

AgreementScores agreement_scores(const Partition& pred, const Partition& truth) {
    const std::size_t n = pred.community_of.size();
    if (truth.community_of.size() != n)
        throw DataError("agreement_scores: partitions cover different node sets");
    if (n == 0) throw DataError("agreement_scores: empty partitions");
    const std::size_t kt = truth.num_communities();
    const std::size_t kp = pred.num_communities();
    std::vector<double> cont(kt * kp, 0.0), a(kt, 0.0), b(kp, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        std::size_t t = truth.community_of[x];
        std::size_t p = pred.community_of[x];
        cont[t * kp + p] += 1.0;
        a[t] += 1.0;
        b[p] += 1.0;
    }
    const double N = double(n);
    double h_truth = entropy(a, N);
    double h_pred = entropy(b, N);
    // conditional entropies straight from the contingency table, so a
    // perfect match yields exactly zero (log 1) instead of h - mi residue
    double h_t_given_p = 0.0, h_p_given_t = 0.0;
    for (std::size_t t = 0; t < kt; ++t)
        for (std::size_t p = 0; p < kp; ++p) {
            double c = cont[t * kp + p];
            if (c == 0.0) continue;
            h_t_given_p -= (c / N) * std::log(c / b[p]);
            h_p_given_t -= (c / N) * std::log(c / a[t]);
        }
    double mi = h_truth - h_t_given_p;
    AgreementScores s{};
    s.homogeneity = h_truth == 0.0 ? 1.0 : 1.0 - h_t_given_p / h_truth;
    s.completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_p_given_t / h_pred;
    s.v_measure = (s.homogeneity + s.completeness) == 0.0
                      ? 0.0
                      : 2.0 * s.homogeneity * s.completeness /
                            (s.homogeneity + s.completeness);
    s.mutual_information = mi;
    double tp = 0.0;
    for (double c : cont) tp += comb2(c);
    double same_t = 0.0, same_p = 0.0;
    for (double c : a) same_t += comb2(c);
    for (double c : b) same_p += comb2(c);
    if (same_t == 0.0 || same_p == 0.0) {
        s.fowlkes_mallows = (same_t == 0.0 && same_p == 0.0) ? 1.0 : 0.0;
    } else {
        s.fowlkes_mallows = tp / std::sqrt(same_t * same_p);
    }
    return s;
}

double accuracy(const std::vector<std::size_t>& preds,
                const std::vector<std::size_t>& truth) {
    if (preds.size() != truth.size() || preds.empty())
        throw DataError("accuracy: prediction/label length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == truth[i]) ++hits;
    return double(hits) / double(preds.size());
}

double auc(const std::vector<double>& class1_scores,
           const std::vector<std::size_t>& truth) {
    if (class1_scores.size() != truth.size() || truth.empty())
        throw DataError("auc: score/label length mismatch");
    std::size_t pos = 0;
    for (std::size_t t : truth) pos += t == 1 ? 1 : 0;
    std::size_t neg = truth.size() - pos;
    if (pos == 0 || neg == 0)
        throw DataError("auc: both classes must be present");
    // average ranks with ties, then the Mann-Whitney U statistic
    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return class1_scores[x] < class1_scores[y];
    });
    std::vector<double> rank(truth.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               class1_scores[order[j + 1]] == class1_scores[order[i]])
            ++j;
        double avg = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t)
        if (truth[t] == 1) rank_sum_pos += rank[t];
    double u = rank_sum_pos - double(pos) * (double(pos) + 1.0) / 2.0;
    return u / (double(pos) * double(neg));
}

}  // namespace brainnet
