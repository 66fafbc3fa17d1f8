#include "brainnet/features.hpp"

#include <algorithm>
#include <cmath>

namespace brainnet {

FeatureScheme parse_feature_scheme(const std::string& tag) {
    if (tag == "onehot") return FeatureScheme::OneHot;
    if (tag == "ldp") return FeatureScheme::Ldp;
    if (tag == "degree") return FeatureScheme::Degree;
    if (tag == "degree_bin") return FeatureScheme::DegreeBin;
    throw DataError("unknown feature scheme: '" + tag + "'");
}

const char* feature_scheme_name(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::OneHot: return "onehot";
        case FeatureScheme::Ldp: return "ldp";
        case FeatureScheme::Degree: return "degree";
        case FeatureScheme::DegreeBin: return "degree_bin";
    }
    return "?";
}

namespace {

std::vector<std::size_t> degrees(const BrainGraph& g) {
    std::vector<std::size_t> deg(g.n(), 0);
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j)
            if (j != i && g.weights(i, j) != 0.0) ++deg[i];
    return deg;
}

}  // namespace

FeatureMatrix build_features(const BrainGraph& g, FeatureScheme scheme,
                             const FeatureOptions& opts) {
    const std::size_t n = g.n();
    FeatureMatrix fm;
    fm.scheme = scheme;
    switch (scheme) {
        case FeatureScheme::OneHot: {
            fm.values = Tensor(n, n);
            for (std::size_t i = 0; i < n; ++i) fm.values(i, i) = 1.0;
            break;
        }
        case FeatureScheme::Ldp: {
            auto deg = degrees(g);
            fm.values = Tensor(n, 5);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> nd;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i && g.weights(i, j) != 0.0)
                        nd.push_back(double(deg[j]));
                fm.values(i, 0) = double(deg[i]);
                if (nd.empty()) continue;  // [0;0;0;0;0] by convention
                double mn = *std::min_element(nd.begin(), nd.end());
                double mx = *std::max_element(nd.begin(), nd.end());
                double mean = 0.0;
                for (double v : nd) mean += v;
                mean /= double(nd.size());
                double var = 0.0;
                for (double v : nd) var += (v - mean) * (v - mean);
                var /= double(nd.size());
                fm.values(i, 1) = mn;
                fm.values(i, 2) = mx;
                fm.values(i, 3) = mean;
                fm.values(i, 4) = std::sqrt(var);
            }
            break;
        }
        case FeatureScheme::Degree: {
            auto deg = degrees(g);
            fm.values = Tensor(n, 1);
            for (std::size_t i = 0; i < n; ++i) fm.values(i, 0) = double(deg[i]);
            break;
        }
        case FeatureScheme::DegreeBin: {
            if (opts.num_bins < 1) throw DataError("degree_bin: num_bins must be >= 1");
            auto deg = degrees(g);
            std::size_t max_deg = deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
            fm.values = Tensor(n, opts.num_bins);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t bin = 0;
                if (max_deg > 0) {
                    bin = std::min<std::size_t>(
                        opts.num_bins - 1,
                        std::size_t(double(deg[i]) / double(max_deg) * double(opts.num_bins)));
                }
                fm.values(i, bin) = 1.0;
            }
            break;
        }
    }
    return fm;
}

}  // namespace brainnet
