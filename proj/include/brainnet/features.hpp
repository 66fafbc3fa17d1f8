#pragma once

#include <string>

#include "brainnet/graph.hpp"
#include "brainnet/tensor.hpp"

namespace brainnet {

enum class FeatureScheme { OneHot, Ldp, Degree, DegreeBin };

FeatureScheme parse_feature_scheme(const std::string& tag);
const char* feature_scheme_name(FeatureScheme s);

struct FeatureOptions {
    std::size_t num_bins = 10;  // degree_bin only
};

struct FeatureMatrix {
    Tensor values;  // n×d
    FeatureScheme scheme = FeatureScheme::OneHot;
};

// Structural node features from the unweighted nonzero-edge topology.
// LDP rows are [deg; min; max; mean; std] over the neighborhood degree
// multiset, population std, empty-neighborhood statistics zero.
FeatureMatrix build_features(const BrainGraph& g, FeatureScheme scheme,
                             const FeatureOptions& opts = {});

}  // namespace brainnet
