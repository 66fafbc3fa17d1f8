#include "brainnet/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace brainnet {

NodeRef glorot_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / double(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(rows, cols);
    for (double& v : t.data) v = dist(rng);
    return make_leaf(std::move(t));
}

Mlp Mlp::init(const std::vector<std::size_t>& dims, std::mt19937_64& rng) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp::init: need at least in/out dims");
    Mlp m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.W = glorot_tensor(dims[l], dims[l + 1], rng);
        layer.b = make_leaf(Tensor(1, dims[l + 1]));
        m.layers.push_back(std::move(layer));
    }
    return m;
}

NodeRef Mlp::forward(const NodeRef& x) const {
    NodeRef h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        h = add(matmul(h, layers[l].W), layers[l].b);
        if (l + 1 < layers.size()) h = relu(h);
    }
    return h;
}

void Mlp::collect(std::vector<NodeRef>& out) const {
    for (const auto& l : layers) {
        out.push_back(l.W);
        out.push_back(l.b);
    }
}

}  // namespace brainnet
