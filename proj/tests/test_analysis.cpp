#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "brainnet/analysis.hpp"

using namespace brainnet;

namespace {

Tensor symmetric_random(std::size_t n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < density) t(i, j) = t(j, i) = w(rng);
    return t;
}

Tensor clique_pair(std::size_t k) {
    // two k-cliques joined by a single edge (0 <-> k)
    Tensor t(2 * k, 2 * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            t(i, j) = t(j, i) = 1.0;
            t(k + i, k + j) = t(k + j, k + i) = 1.0;
        }
    t(0, k) = t(k, 0) = 1.0;
    return t;
}

// straight-line modularity, independent of the implementation under test
double naive_modularity(const Tensor& w, const std::vector<std::size_t>& comm) {
    std::size_t n = w.rows;
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double a = i == j ? 0.0 : std::max(w(i, j), 0.0);
            k[i] += a;
            two_m += a;
        }
    if (two_m == 0.0) return 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (comm[i] != comm[j]) continue;
            double a = i == j ? 0.0 : std::max(w(i, j), 0.0);
            q += a - k[i] * k[j] / two_m;
        }
    return q / two_m;
}

// brute-force pair-counting / contingency-table scores
AgreementScores naive_agreement(const std::vector<std::size_t>& pred,
                                const std::vector<std::size_t>& truth) {
    const double N = double(pred.size());
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> pa, pb;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        joint[{truth[i], pred[i]}] += 1.0;
        pa[truth[i]] += 1.0;
        pb[pred[i]] += 1.0;
    }
    double h_t = 0.0, h_p = 0.0, h_t_given_p = 0.0;
    for (auto& [k, v] : pa) h_t -= v / N * std::log(v / N);
    for (auto& [k, v] : pb) h_p -= v / N * std::log(v / N);
    for (auto& [k, v] : joint) h_t_given_p -= v / N * std::log(v / pb[k.second]);
    double mi = h_t - h_t_given_p;
    double h_p_given_t = h_p - mi;
    double hom = h_t == 0.0 ? 1.0 : 1.0 - h_t_given_p / h_t;
    double com = h_p == 0.0 ? 1.0 : 1.0 - h_p_given_t / h_p;
    double v = hom + com == 0.0 ? 0.0 : 2.0 * hom * com / (hom + com);
    double tp = 0.0, same_p = 0.0, same_t = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            bool sp = pred[i] == pred[j];
            bool st = truth[i] == truth[j];
            tp += sp && st ? 1.0 : 0.0;
            same_p += sp ? 1.0 : 0.0;
            same_t += st ? 1.0 : 0.0;
        }
    double fm;
    if (same_t == 0.0 || same_p == 0.0)
        fm = (same_t == 0.0 && same_p == 0.0) ? 1.0 : 0.0;
    else
        fm = tp / std::sqrt(same_t * same_p);
    return {com, hom, v, fm, mi};
}

std::vector<std::size_t> random_partition(std::size_t n, std::size_t max_k,
                                          std::mt19937_64& rng) {
    std::vector<std::size_t> p(n);
    std::size_t k = 1 + rng() % max_k;
    for (auto& c : p) c = rng() % k;
    // compact ids
    std::map<std::size_t, std::size_t> remap;
    for (auto& c : p) {
        auto [it, fresh] = remap.emplace(c, remap.size());
        c = it->second;
    }
    return p;
}

// exhaustive positive/negative pair enumeration
double naive_auc(const std::vector<double>& scores,
                 const std::vector<std::size_t>& labels) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[i] != 1 || labels[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    return wins / pairs;
}

}  // namespace

TEST_CASE("threshold subgraph rules") {
    std::mt19937_64 rng(3);
    Tensor w = symmetric_random(6, 0.8, rng);
    Tensor sig(6, 6);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j) sig(i, j) = sig(j, i) = u(rng);

    SUBCASE("threshold 0 keeps all nonzero edges") {
        auto sub = threshold_subgraph(w, sig, ThresholdRule{0.0});
        std::size_t nz = 0;
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = i + 1; j < 6; ++j)
                if (w(i, j) != 0.0) ++nz;
        CHECK(sub.kept_edges.size() == nz);
    }
    SUBCASE("top 1 is the argmax pair") {
        auto sub = threshold_subgraph(w, sig, TopKRule{1});
        REQUIRE(sub.kept_edges.size() == 1);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = i + 1; j < 6; ++j)
                if (w(i, j) != 0.0)
                    CHECK(sub.kept_edges[0].mask >= sig(i, j));
    }
    SUBCASE("top 5 matches a sorting oracle") {
        auto sub = threshold_subgraph(w, sig, TopKRule{5});
        std::vector<double> masks;
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = i + 1; j < 6; ++j)
                if (w(i, j) != 0.0) masks.push_back(sig(i, j));
        std::sort(masks.rbegin(), masks.rend());
        REQUIRE(sub.kept_edges.size() == std::min<std::size_t>(5, masks.size()));
        std::vector<double> kept;
        for (const auto& e : sub.kept_edges) kept.push_back(e.mask);
        std::sort(kept.rbegin(), kept.rend());
        for (std::size_t k = 0; k < kept.size(); ++k)
            CHECK(kept[k] == masks[k]);
    }
    SUBCASE("k beyond the edge count clamps") {
        auto sub = threshold_subgraph(w, sig, TopKRule{1000});
        auto all = threshold_subgraph(w, sig, ThresholdRule{0.0});
        CHECK(sub.kept_edges.size() == all.kept_edges.size());
    }
}

TEST_CASE("node metrics on canonical shapes") {
    SUBCASE("triangle: clustering 1 everywhere") {
        ExplanationSubgraph sub;
        sub.n = 3;
        sub.kept_edges = {{0, 1, 0.5, 0.9}, {0, 2, -0.5, 0.8}, {1, 2, 0.25, 0.7}};
        auto m = node_metrics(sub);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(m.degree[i] == 2.0);
            CHECK(m.clustering[i] == 1.0);
        }
        CHECK(m.strength[0] == doctest::Approx(1.0));  // |0.5| + |-0.5|
    }
    SUBCASE("path center has zero clustering") {
        ExplanationSubgraph sub;
        sub.n = 3;
        sub.kept_edges = {{0, 1, 1.0, 0.9}, {1, 2, 1.0, 0.8}};
        auto m = node_metrics(sub);
        CHECK(m.clustering[1] == 0.0);
        CHECK(m.degree[1] == 2.0);
    }
}

TEST_CASE("clustering coefficient matches exhaustive triangle count") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor w = symmetric_random(8, 0.5, rng);
        Tensor sig(8, 8, 0.9);
        auto sub = threshold_subgraph(w, sig, ThresholdRule{0.0});
        auto m = node_metrics(sub);
        for (std::size_t i = 0; i < 8; ++i) {
            std::vector<std::size_t> nb;
            for (std::size_t j = 0; j < 8; ++j)
                if (j != i && w(i, j) != 0.0) nb.push_back(j);
            double c = 0.0;
            if (nb.size() >= 2) {
                std::size_t closed = 0;
                for (std::size_t a = 0; a < nb.size(); ++a)
                    for (std::size_t b = a + 1; b < nb.size(); ++b)
                        if (w(nb[a], nb[b]) != 0.0) ++closed;
                c = 2.0 * double(closed) / (double(nb.size()) * double(nb.size() - 1));
            }
            CHECK(m.clustering[i] == doctest::Approx(c).epsilon(1e-12));
            CHECK(m.clustering[i] >= 0.0);
            CHECK(m.clustering[i] <= 1.0);
        }
    }
}

TEST_CASE("system ranking") {
    AtlasMap atlas = synthetic_atlas(16);  // systems cycle over the 8 tags
    NodeMetrics m;
    m.degree.assign(16, 0.0);
    m.strength.assign(16, 0.0);
    m.clustering.assign(16, 0.0);

    SUBCASE("all mass on one system dominates") {
        m.degree[0] = m.degree[8] = 5.0;  // both VN under the cyclic atlas
        m.strength[0] = m.strength[8] = 2.0;
        m.clustering[0] = 1.0;
        auto r = rank_systems(m, atlas, 3);
        CHECK(r.by_degree[0] == System::VN);
        CHECK(r.by_strength[0] == System::VN);
        CHECK(r.by_clustering[0] == System::VN);
    }
    SUBCASE("uniform metrics fall back to tag order") {
        m.degree.assign(16, 1.0);
        auto r = rank_systems(m, atlas, 8);
        REQUIRE(r.by_degree.size() == 8);
        for (std::size_t s = 0; s < 8; ++s)
            CHECK(r.by_degree[s] == static_cast<System>(s));
    }
    SUBCASE("two concentrated systems match a hand count") {
        // AN nodes average (4+2)/2 = 3, BLN nodes (8+0)/2 = 4
        m.degree[1] = 4.0;
        m.degree[9] = 2.0;
        m.degree[2] = 8.0;
        auto r = rank_systems(m, atlas, 2);
        REQUIRE(r.by_degree.size() == 2);
        CHECK(r.by_degree[0] == System::BLN);
        CHECK(r.by_degree[1] == System::AN);
    }
}

TEST_CASE("spectral communities split joined cliques") {
    Tensor w = clique_pair(4);
    Partition p = spectral_communities(w);
    CHECK(p.num_communities() == 2);
    for (std::size_t i = 1; i < 4; ++i)
        CHECK(p.community_of[i] == p.community_of[0]);
    for (std::size_t i = 5; i < 8; ++i)
        CHECK(p.community_of[i] == p.community_of[4]);
    CHECK(p.community_of[0] != p.community_of[4]);

    // brute force over all bipartitions confirms this is modularity-optimal
    double best_q = -1.0;
    std::vector<std::size_t> best(8);
    for (unsigned m = 0; m < 256; ++m) {
        std::vector<std::size_t> comm(8);
        for (std::size_t i = 0; i < 8; ++i) comm[i] = (m >> i) & 1u;
        double q = naive_modularity(w, comm);
        if (q > best_q) {
            best_q = q;
            best = comm;
        }
    }
    for (std::size_t i = 0; i < 8; ++i)
        CHECK((best[i] == best[0]) == (p.community_of[i] == p.community_of[0]));
}

TEST_CASE("complete graph stays one community") {
    Tensor w(5, 5, 1.0);
    for (std::size_t i = 0; i < 5; ++i) w(i, i) = 0.0;
    CHECK(spectral_communities(w).num_communities() == 1);
}

TEST_CASE("disconnected triangles separate") {
    Tensor w(6, 6);
    for (auto [i, j] : {std::pair<int, int>{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}})
        w(i, j) = w(j, i) = 1.0;
    Partition p = spectral_communities(w);
    CHECK(p.num_communities() == 2);
    CHECK(modularity(w, p) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("edgeless graph is a single community") {
    Tensor w(4, 4);
    Partition p = spectral_communities(w);
    CHECK(p.num_communities() == 1);
    CHECK(modularity(w, p) == 0.0);
}

TEST_CASE("modularity identities and oracle") {
    std::mt19937_64 rng(23);
    SUBCASE("single community has Q = 0") {
        Tensor w = symmetric_random(6, 0.6, rng);
        Partition p;
        p.community_of.assign(6, 0);
        CHECK(modularity(w, p) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("random graphs and partitions match the naive double loop") {
        for (int trial = 0; trial < 30; ++trial) {
            std::size_t n = 3 + rng() % 8;
            Tensor w = symmetric_random(n, 0.5, rng);
            Partition p;
            p.community_of = random_partition(n, 4, rng);
            CHECK(modularity(w, p) ==
                  doctest::Approx(naive_modularity(w, p.community_of)).epsilon(1e-12));
        }
    }
}

TEST_CASE("spectral splits never yield negative modularity") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 3 + rng() % 10;
        Tensor w = symmetric_random(n, 0.4, rng);
        Partition p = spectral_communities(w);
        CHECK(modularity(w, p) >= -1e-12);
    }
}

TEST_CASE("agreement scores against the contingency oracle") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 2 + rng() % 11;
        Partition pred, truth;
        pred.community_of = random_partition(n, 5, rng);
        truth.community_of = random_partition(n, 5, rng);
        auto got = agreement_scores(pred, truth);
        auto want = naive_agreement(pred.community_of, truth.community_of);
        CHECK(got.completeness == doctest::Approx(want.completeness).epsilon(1e-9));
        CHECK(got.homogeneity == doctest::Approx(want.homogeneity).epsilon(1e-9));
        CHECK(got.v_measure == doctest::Approx(want.v_measure).epsilon(1e-9));
        CHECK(got.fowlkes_mallows ==
              doctest::Approx(want.fowlkes_mallows).epsilon(1e-9));
        CHECK(got.mutual_information ==
              doctest::Approx(want.mutual_information).epsilon(1e-9));
    }
}

TEST_CASE("agreement score extremes") {
    Partition truth;
    truth.community_of = {0, 0, 1, 1, 2};
    SUBCASE("perfect match scores 1 everywhere") {
        auto s = agreement_scores(truth, truth);
        CHECK(s.completeness == 1.0);
        CHECK(s.homogeneity == 1.0);
        CHECK(s.v_measure == 1.0);
        CHECK(s.fowlkes_mallows == 1.0);
    }
    SUBCASE("one giant prediction: complete but not homogeneous") {
        Partition pred;
        pred.community_of = {0, 0, 0, 0, 0};
        auto s = agreement_scores(pred, truth);
        CHECK(s.completeness == 1.0);
        CHECK(s.homogeneity == 0.0);
    }
    SUBCASE("id relabeling is invisible") {
        Partition relabeled;
        relabeled.community_of = {2, 2, 0, 0, 1};
        auto a = agreement_scores(relabeled, truth);
        CHECK(a.completeness == doctest::Approx(1.0));
        CHECK(a.homogeneity == doctest::Approx(1.0));
    }
}

TEST_CASE("accuracy and auc") {
    CHECK(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.75));

    SUBCASE("perfect separation") {
        CHECK(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    }
    SUBCASE("all ties give one half") {
        CHECK(auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    }
    SUBCASE("hand-enumerated example") {
        CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75));
    }
    SUBCASE("single class is an error") {
        CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), DataError);
    }
    SUBCASE("monotone transform invariance") {
        std::mt19937_64 rng(9);
        std::vector<double> s(20);
        std::vector<std::size_t> y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            s[i] = std::uniform_real_distribution<double>(-2, 2)(rng);
            y[i] = rng() % 2;
        }
        y[0] = 0;
        y[1] = 1;
        std::vector<double> t = s;
        for (double& v : t) v = std::exp(3.0 * v) + 1.0;
        CHECK(auc(s, y) == doctest::Approx(auc(t, y)).epsilon(1e-12));
    }
}

TEST_CASE("auc matches exhaustive pair enumeration") {
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 2 + rng() % 49;
        std::vector<double> scores(n);
        std::vector<std::size_t> labels(n);
        std::uniform_int_distribution<int> quant(0, 8);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = quant(rng) / 8.0;  // ties likely
            labels[i] = rng() % 2;
        }
        labels[0] = 0;
        labels[n - 1] = 1;
        CHECK(auc(scores, labels) ==
              doctest::Approx(naive_auc(scores, labels)).epsilon(1e-12));
    }
}
