#pragma once

#include <random>
#include <string>
#include <vector>

#include "brainnet/autodiff.hpp"

namespace brainnet {

// Fully connected layers with ReLU between them (linear last layer).
struct Mlp {
    struct Layer {
        NodeRef W;  // in×out
        NodeRef b;  // 1×out
    };
    std::vector<Layer> layers;

    // dims = {in, hidden..., out}; weights Glorot-uniform, biases zero
    static Mlp init(const std::vector<std::size_t>& dims, std::mt19937_64& rng);

    NodeRef forward(const NodeRef& x) const;  // rows×in -> rows×out

    std::size_t in_dim() const { return layers.front().W->value.rows; }
    std::size_t out_dim() const { return layers.back().W->value.cols; }

    void collect(std::vector<NodeRef>& out) const;
};

NodeRef glorot_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace brainnet
