#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "brainnet/features.hpp"
#include "brainnet/graph.hpp"
#include "brainnet/mlp.hpp"

namespace brainnet {

// Index of undirected pair (i,j), i<j, into a packed upper-triangle vector.
inline std::size_t upper_pair_index(std::size_t n, std::size_t i, std::size_t j) {
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}
inline std::size_t upper_pair_count(std::size_t n) { return n * (n - 1) / 2; }

// Directed edge list (receiver, sender) with self-loops, cached per graph.
struct GraphPlan {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::uint32_t> seg;       // receiver node per edge
    std::vector<double> weights;          // w_ij, 0 for the self-loop
    std::vector<std::int64_t> pair_idx;   // packed pair index, -1 for self-loops
};

GraphPlan make_graph_plan(const BrainGraph& g);

struct BackboneParams {
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 64;
    std::size_t num_classes = 2;
    std::size_t layers = 1;
    std::optional<Mlp> lift;  // linear feature_dim -> hidden_dim, absent when equal
    Mlp message_mlp;          // (2D+1) -> D, one hidden layer
    Mlp readout_mlp;          // D -> D, three layers
    Mlp classifier;           // D -> C, single linear layer

    static BackboneParams init(std::size_t feature_dim, std::size_t hidden_dim,
                               std::size_t num_classes, std::size_t layers,
                               std::mt19937_64& rng);

    std::vector<NodeRef> all_params() const;
    // deep value copy sharing no tensors with this instance
    BackboneParams clone() const;
};

// m_ij = MLP_theta([h_i; h_j; w_ij]); h vectors are 1×d rows.
Tensor message(const Tensor& h_i, const Tensor& h_j, double w_ij, const Mlp& theta);

// One round of h_i = ReLU(sum over N_i and self of m_ij), as a graph node.
NodeRef propagate(const NodeRef& H, const GraphPlan& plan, const NodeRef& weight_col,
                  const Mlp& message_mlp, std::size_t n);

// z = MLP(sum_i h_i) + sum_i h_i
NodeRef readout(const NodeRef& H, const Mlp& readout_mlp);

// Full forward pass to class logits (1×C). weight_col overrides the plan's
// stored weights when given (masked graphs).
NodeRef predict_node(const FeatureMatrix& features, const GraphPlan& plan,
                     const BackboneParams& p, const NodeRef& weight_col);
Tensor predict(const BrainGraph& g, const FeatureMatrix& features,
               const BackboneParams& p);

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t hidden_dim = 64;
    std::size_t layers = 1;
    double lr = 0.001;
    double weight_decay = 1e-5;
    FeatureScheme scheme = FeatureScheme::OneHot;
    FeatureOptions feat_opts;
    std::uint64_t seed = 1;
};

struct EpochLog {
    std::size_t epoch;
    double train_loss;
    double val_accuracy;
};

struct TrainResult {
    BackboneParams params;  // from the best-validation-accuracy epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
};

// Full-batch Adam on the mean cross-entropy over the training part.
// Starts from `initial` when given (three-step retraining).
TrainResult train_backbone(const Dataset& d, const Split& split, const TrainConfig& cfg,
                           const BackboneParams* initial = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    double auc = 0.0;  // binary only; NaN otherwise
    std::vector<std::size_t> predictions;
    std::vector<double> class1_scores;
};

EvalResult evaluate_backbone(const BackboneParams& p, const Dataset& d,
                             const std::vector<std::size_t>& indices,
                             const TrainConfig& cfg);

}  // namespace brainnet
