#include "brainnet/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "brainnet/errors.hpp"

namespace brainnet {

AdamState AdamState::init(const std::vector<NodeRef>& params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p->value.rows, p->value.cols);
        s.v.emplace_back(p->value.rows, p->value.cols);
    }
    return s;
}

void adam_step(const std::vector<NodeRef>& params, AdamState& state,
               const AdamConfig& cfg, double grad_scale) {
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state/parameter count mismatch");
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, state.t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, state.t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& theta = params[k]->value;
        const Tensor& grad = params[k]->grad;
        require_same_shape(theta, state.m[k], "adam_step");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double g = grad.data[i] / grad_scale;
            if (!std::isfinite(g))
                throw NumericalError("adam_step: non-finite gradient in parameter " +
                                         std::to_string(k) + " at entry " +
                                         std::to_string(i));
            g += cfg.weight_decay * theta.data[i];
            double& m = state.m[k].data[i];
            double& v = state.v[k].data[i];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            double mhat = m / bc1;
            double vhat = v / bc2;
            theta.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void zero_grads(const std::vector<NodeRef>& params) {
    for (const auto& p : params) p->grad.fill(0.0);
}

}  // namespace brainnet
