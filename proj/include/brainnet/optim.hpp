#pragma once

#include <string>
#include <vector>

#include "brainnet/autodiff.hpp"

namespace brainnet {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;
};

// Per-parameter first/second moment estimates plus the shared step counter.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long t = 0;

    static AdamState init(const std::vector<NodeRef>& params);
};

// Bias-corrected Adam with the L2 term weight_decay*theta added to gradients.
// grad_scale divides every gradient first (full-batch averaging).
// Throws on non-finite gradients.
void adam_step(const std::vector<NodeRef>& params, AdamState& state,
               const AdamConfig& cfg, double grad_scale = 1.0);

void zero_grads(const std::vector<NodeRef>& params);

}  // namespace brainnet
