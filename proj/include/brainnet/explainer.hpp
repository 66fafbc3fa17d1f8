#pragma once

#include <cstdint>
#include <vector>

#include "brainnet/backbone.hpp"

namespace brainnet {

// Globally shared edge mask, parameterized by the packed upper triangle so
// symmetry holds by construction. Diagonal of M fixed at 0.
struct EdgeMask {
    std::size_t n = 0;
    NodeRef params;  // n(n-1)/2 × 1

    static EdgeMask init(std::size_t n, double mean, double sd, std::uint64_t seed);

    double m_at(std::size_t i, std::size_t j) const;
    Tensor matrix() const;        // n×n symmetric M
    Tensor sigma_matrix() const;  // n×n sigma(M)
    EdgeMask clone() const;
};

// W' = W ⊙ sigma(M); zero edges stay zero, signs preserved.
Tensor apply_mask(const Tensor& w, const EdgeMask& mask);

struct ExplainConfig {
    std::size_t epochs = 100;
    double lr = 0.05;
    double lambda_sparsity = 0.005;
    double lambda_entropy = 0.1;
    double init_mean = 1.0;
    double init_sd = 0.1;
    std::uint64_t seed = 1;
    // L_m target: ground-truth labels by default, step-1 predictions otherwise
    bool target_predictions = false;
    bool apply_mask_at_test = true;
};

struct MaskLosses {
    double l_m;      // cross-entropy on the masked graph
    double l_p;      // cross-entropy on the original graph (constant w.r.t. M)
    double l_s;      // sum of sigma(M) over unique pairs
    double l_e;      // mean binary entropy of sigma(M) over unique pairs
    double total;    // (l_m + l_p) + lambda_s*l_s + lambda_e*l_e
};

MaskLosses mask_losses(const BackboneParams& backbone, const BrainGraph& g,
                       const FeatureMatrix& features, const EdgeMask& mask,
                       std::size_t label, double lambda_sparsity,
                       double lambda_entropy);

struct MaskEpochLog {
    std::size_t epoch;
    double train_total;
    double val_l_m;
};

struct MaskTrainResult {
    EdgeMask mask;        // from the epoch with the lowest validation L_m
    EdgeMask final_mask;  // state after the last epoch
    std::vector<MaskEpochLog> log;
    std::size_t best_epoch = 0;
};

// Step 2: Adam on the mask parameters only; gradients flow through the
// frozen backbone but are never applied to it.
MaskTrainResult train_mask(const BackboneParams& backbone, const Dataset& d,
                           const Split& split, const TrainConfig& backbone_cfg,
                           const ExplainConfig& cfg);

struct ThreeStepReport {
    double step1_accuracy, step1_auc;
    double step3_accuracy, step3_auc;
};

struct ThreeStepResult {
    TrainResult step1;
    MaskTrainResult mask;
    TrainResult step3;
    ThreeStepReport report;
};

// Train on raw graphs, learn the shared mask with the backbone frozen, then
// retrain from the step-1 parameters on mask-scaled graphs.
ThreeStepResult three_step_train(const Dataset& d, const Split& split,
                                 const TrainConfig& cfg_backbone,
                                 const ExplainConfig& cfg_explain);

// Dataset copy with every adjacency replaced by W ⊙ sigma(M).
Dataset masked_dataset(const Dataset& d, const EdgeMask& mask);

}  // namespace brainnet
