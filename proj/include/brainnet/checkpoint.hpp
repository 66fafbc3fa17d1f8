#pragma once

#include <string>

#include "brainnet/backbone.hpp"
#include "brainnet/explainer.hpp"

namespace brainnet {

// Self-describing JSON checkpoint of all named backbone tensors plus the
// shape metadata needed to rebuild the model.
void save_checkpoint(const BackboneParams& p, FeatureScheme scheme,
                     const std::string& path);

struct LoadedCheckpoint {
    BackboneParams params;
    FeatureScheme scheme;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// n×n sigma(M) matrix, space-delimited, 12 significant digits.
void save_mask_matrix(const EdgeMask& mask, const std::string& path);
Tensor load_matrix(const std::string& path);  // delimited text, square

}  // namespace brainnet
