#include "brainnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace brainnet {

using nlohmann::json;

const char* system_name(System s) { return kSystemNames[static_cast<std::size_t>(s)]; }

System parse_system(const std::string& tag) {
    for (std::size_t i = 0; i < kSystemNames.size(); ++i)
        if (tag == kSystemNames[i]) return static_cast<System>(i);
    throw DataError("unknown neural system tag: '" + tag + "'");
}

void AtlasMap::validate() const {
    if (n == 0) throw DataError("atlas: empty node set");
    if (abbreviation.size() != n || system_of.size() != n)
        throw DataError("atlas: region/system lists must cover all " +
                        std::to_string(n) + " nodes");
}

void BrainGraph::validate(std::size_t expected_n, double tol) const {
    if (weights.rows != weights.cols)
        throw DataError("subject " + subject_id + ": adjacency is not square (" +
                        weights.shape_str() + ")");
    if (weights.rows != expected_n)
        throw DataError("subject " + subject_id + ": node count " +
                        std::to_string(weights.rows) + " does not match atlas count " +
                        std::to_string(expected_n));
    for (std::size_t i = 0; i < n(); ++i) {
        if (std::abs(weights(i, i)) > tol)
            throw DataError("subject " + subject_id + ": nonzero diagonal at node " +
                            std::to_string(i));
        for (std::size_t j = i + 1; j < n(); ++j) {
            if (std::abs(weights(i, j) - weights(j, i)) > tol)
                throw DataError("subject " + subject_id + ": asymmetric adjacency at (" +
                                std::to_string(i) + "," + std::to_string(j) + "): " +
                                std::to_string(weights(i, j)) + " vs " +
                                std::to_string(weights(j, i)));
        }
    }
}

void Dataset::validate() const {
    atlas.validate();
    if (num_classes < 1) throw DataError("dataset: num_classes must be >= 1");
    if (graphs.empty()) throw DataError("dataset: no subjects");
    std::vector<std::size_t> class_count(num_classes, 0);
    for (const auto& g : graphs) {
        g.validate(atlas.n);
        if (g.label >= num_classes)
            throw DataError("subject " + g.subject_id + ": label " +
                            std::to_string(g.label) + " out of range");
        ++class_count[g.label];
    }
    for (std::size_t c = 0; c < num_classes; ++c)
        if (class_count[c] == 0)
            throw DataError("dataset: class " + std::to_string(c) + " has no subjects");
}

void Split::validate(std::size_t total) const {
    if (train.empty() || val.empty() || test.empty())
        throw DataError("split: every part must be non-empty");
    std::vector<bool> seen(total, false);
    for (const auto* part : {&train, &val, &test}) {
        for (std::size_t idx : *part) {
            if (idx >= total || seen[idx])
                throw DataError("split: parts must partition 0.." + std::to_string(total - 1));
            seen[idx] = true;
        }
    }
    if (train.size() + val.size() + test.size() != total)
        throw DataError("split: parts do not cover the dataset");
}

AtlasMap load_atlas(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open atlas file: " + path);
    struct Row {
        std::size_t index;
        std::string abbr;
        System sys;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first) || first[0] == '#') continue;
        Row r;
        try {
            r.index = std::stoul(first);
        } catch (const std::exception&) {
            throw DataError("atlas " + path + ":" + std::to_string(lineno) +
                            ": bad node index '" + first + "'");
        }
        std::string sys_tag;
        if (!(ls >> r.abbr >> sys_tag))
            throw DataError("atlas " + path + ":" + std::to_string(lineno) +
                            ": expected 'index abbreviation system'");
        r.sys = parse_system(sys_tag);
        rows.push_back(std::move(r));
    }
    AtlasMap atlas;
    atlas.n = rows.size();
    atlas.abbreviation.resize(atlas.n);
    atlas.system_of.resize(atlas.n);
    std::vector<bool> seen(atlas.n, false);
    for (const auto& r : rows) {
        if (r.index >= atlas.n || seen[r.index])
            throw DataError("atlas " + path + ": node indices must be 0.." +
                            std::to_string(atlas.n - 1) + " with no duplicates");
        seen[r.index] = true;
        atlas.abbreviation[r.index] = r.abbr;
        atlas.system_of[r.index] = r.sys;
    }
    atlas.validate();
    return atlas;
}

void save_atlas(const AtlasMap& atlas, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write atlas file: " + path);
    out << "# index abbreviation system\n";
    for (std::size_t i = 0; i < atlas.n; ++i)
        out << i << " " << atlas.abbreviation[i] << " "
            << system_name(atlas.system_of[i]) << "\n";
}

Dataset load_dataset(const std::string& dataset_path, const std::string& atlas_path) {
    std::ifstream in(dataset_path);
    if (!in) throw DataError("cannot open dataset file: " + dataset_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("dataset " + dataset_path + ": parse failure: " + e.what());
    }
    Dataset d;
    d.atlas = load_atlas(atlas_path);
    try {
        d.atlas_name = doc.at("atlas_name").get<std::string>();
        d.num_classes = doc.at("num_classes").get<std::size_t>();
        const std::size_t n = doc.at("n_nodes").get<std::size_t>();
        if (n != d.atlas.n)
            throw DataError("dataset n_nodes " + std::to_string(n) +
                            " does not match atlas node count " + std::to_string(d.atlas.n));
        for (const auto& subj : doc.at("subjects")) {
            BrainGraph g;
            g.subject_id = subj.at("id").get<std::string>();
            g.label = subj.at("label").get<std::size_t>();
            const auto& adj = subj.at("adjacency");
            if (adj.size() != n)
                throw DataError("subject " + g.subject_id + ": adjacency has " +
                                std::to_string(adj.size()) + " rows, expected " +
                                std::to_string(n));
            g.weights = Tensor(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                if (adj[i].size() != n)
                    throw DataError("subject " + g.subject_id + ": adjacency row " +
                                    std::to_string(i) + " has " +
                                    std::to_string(adj[i].size()) + " entries, expected " +
                                    std::to_string(n));
                for (std::size_t j = 0; j < n; ++j)
                    g.weights(i, j) = adj[i][j].get<double>();
            }
            d.graphs.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw DataError("dataset " + dataset_path + ": schema error: " + e.what());
    }
    // symmetrize within tolerance, force exact zeros on the diagonal
    for (auto& g : d.graphs) {
        g.validate(d.atlas.n);
        for (std::size_t i = 0; i < g.n(); ++i) {
            g.weights(i, i) = 0.0;
            for (std::size_t j = i + 1; j < g.n(); ++j) {
                double avg = 0.5 * (g.weights(i, j) + g.weights(j, i));
                g.weights(i, j) = g.weights(j, i) = avg;
            }
        }
    }
    d.validate();
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    d.validate();
    json doc;
    doc["schema_version"] = 1;
    doc["atlas_name"] = d.atlas_name;
    doc["n_nodes"] = d.atlas.n;
    doc["num_classes"] = d.num_classes;
    json subjects = json::array();
    for (const auto& g : d.graphs) {
        json adj = json::array();
        for (std::size_t i = 0; i < g.n(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < g.n(); ++j) row.push_back(g.weights(i, j));
            adj.push_back(std::move(row));
        }
        subjects.push_back({{"id", g.subject_id}, {"label", g.label},
                            {"adjacency", std::move(adj)}});
    }
    doc["subjects"] = std::move(subjects);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path);
    out << doc.dump(1) << "\n";
}

Split split_dataset(const Dataset& d, std::array<double, 3> ratios, std::uint64_t seed) {
    const std::size_t N = d.graphs.size();
    double rsum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
        std::abs(rsum - 1.0) > 1e-9)
        throw DataError("split ratios must be positive and sum to 1");
    if (N < 3) throw DataError("need at least 3 graphs to populate train/val/test");

    // global part sizes: round val/test, remainder to train, all non-empty
    std::array<std::size_t, 3> size{};
    size[1] = std::max<std::size_t>(1, std::llround(ratios[1] * double(N)));
    size[2] = std::max<std::size_t>(1, std::llround(ratios[2] * double(N)));
    if (size[1] + size[2] >= N) {
        size[1] = size[2] = 1;
        if (N < 3) throw DataError("too few graphs to populate all parts");
    }
    size[0] = N - size[1] - size[2];

    std::vector<std::vector<std::size_t>> by_class(d.num_classes);
    for (std::size_t i = 0; i < N; ++i) by_class[d.graphs[i].label].push_back(i);
    std::mt19937_64 rng(seed);
    for (auto& cls : by_class) std::shuffle(cls.begin(), cls.end(), rng);

    // largest-remainder allocation per class, capped by remaining part capacity
    Split s;
    std::array<std::vector<std::size_t>*, 3> parts{&s.train, &s.val, &s.test};
    std::array<std::size_t, 3> cap = size;
    for (const auto& cls : by_class) {
        const std::size_t nc = cls.size();
        std::array<double, 3> quota;
        std::array<std::size_t, 3> take{};
        for (int p = 0; p < 3; ++p) {
            quota[p] = double(size[p]) * double(nc) / double(N);
            take[p] = std::min<std::size_t>(std::size_t(std::floor(quota[p])), cap[p]);
        }
        std::size_t assigned = take[0] + take[1] + take[2];
        while (assigned < nc) {
            int best = -1;
            double best_frac = -1.0;
            for (int p = 0; p < 3; ++p) {
                if (take[p] >= cap[p]) continue;
                double frac = quota[p] - double(take[p]);
                if (frac > best_frac + 1e-12) {
                    best_frac = frac;
                    best = p;
                }
            }
            if (best < 0) throw DataError("split allocation failed");
            ++take[best];
            ++assigned;
        }
        std::size_t off = 0;
        for (int p = 0; p < 3; ++p) {
            for (std::size_t k = 0; k < take[p]; ++k)
                parts[p]->push_back(cls[off + k]);
            off += take[p];
            cap[p] -= take[p];
        }
    }
    s.validate(N);
    return s;
}

AtlasMap synthetic_atlas(std::size_t n) {
    AtlasMap atlas;
    atlas.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        atlas.abbreviation.push_back("R" + std::to_string(i));
        atlas.system_of.push_back(static_cast<System>(i % 8));
    }
    return atlas;
}

std::vector<std::pair<std::size_t, std::size_t>> default_planted_edges(
    std::size_t n, std::size_t count) {
    // strides that are multiples of 8 keep both endpoints in one system
    // under the cyclic synthetic atlas; tiny graphs fall back to stride 1
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::size_t base = n > 8 ? 8 : 1;
    for (std::size_t stride = base; edges.size() < count && stride < n;
         stride += base)
        for (std::size_t i = 0; edges.size() < count && i + stride < n; ++i)
            edges.emplace_back(i, i + stride);
    if (edges.size() < count)
        throw DataError("cannot place " + std::to_string(count) +
                        " planted edges on " + std::to_string(n) + " nodes");
    return edges;
}

SyntheticCohort generate_synthetic_cohort(
    std::size_t n, std::size_t per_class,
    const std::vector<std::pair<std::size_t, std::size_t>>& planted_edges,
    double effect, double noise_sd, std::uint64_t seed) {
    if (n < 2) throw DataError("synthetic cohort: need at least 2 nodes");
    if (per_class < 1) throw DataError("synthetic cohort: per_class must be >= 1");
    if (effect < 0) throw DataError("synthetic cohort: effect must be non-negative");
    SyntheticCohort out;
    for (auto [i, j] : planted_edges) {
        if (i >= n || j >= n || i == j)
            throw DataError("synthetic cohort: planted edge (" + std::to_string(i) + "," +
                            std::to_string(j) + ") is not a valid off-diagonal pair");
        out.planted_edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(out.planted_edges.begin(), out.planted_edges.end());
    out.planted_edges.erase(
        std::unique(out.planted_edges.begin(), out.planted_edges.end()),
        out.planted_edges.end());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> base_dist(0.0, 0.5);
    std::normal_distribution<double> noise_dist(0.0, noise_sd);
    Tensor baseline(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            baseline(i, j) = baseline(j, i) = base_dist(rng);

    Dataset& d = out.dataset;
    d.atlas_name = "synthetic";
    d.atlas = synthetic_atlas(n);
    d.num_classes = 2;
    for (std::size_t label = 0; label < 2; ++label) {
        for (std::size_t s = 0; s < per_class; ++s) {
            BrainGraph g;
            g.subject_id = "c" + std::to_string(label) + "_s" + std::to_string(s);
            g.label = label;
            g.weights = Tensor(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    g.weights(i, j) = g.weights(j, i) = baseline(i, j) + noise_dist(rng);
            if (label == 1) {
                for (auto [i, j] : out.planted_edges) {
                    g.weights(i, j) += effect;
                    g.weights(j, i) += effect;
                }
            }
            d.graphs.push_back(std::move(g));
        }
    }
    d.validate();
    return out;
}

}  // namespace brainnet
