#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "brainnet/tensor.hpp"

namespace brainnet {

struct Node;
using NodeRef = std::shared_ptr<Node>;

// One entry of the computation graph. `backprop` pulls this node's gradient
// into its parents' gradients; leaves have no parents and no backprop.
struct Node {
    Tensor value;
    Tensor grad;
    std::vector<NodeRef> parents;
    std::function<void(const Node&)> backprop;
    const char* op = "leaf";

    explicit Node(Tensor v) : value(std::move(v)), grad(value.rows, value.cols) {}
};

NodeRef make_leaf(Tensor v);
inline NodeRef make_scalar(double v) { return make_leaf(Tensor::scalar(v)); }

// a (r×k) · b (k×c) -> r×c
NodeRef matmul(const NodeRef& a, const NodeRef& b);
// same shape, or b a 1×c row vector broadcast over a's rows
NodeRef add(const NodeRef& a, const NodeRef& b);
NodeRef sub(const NodeRef& a, const NodeRef& b);
NodeRef scale(const NodeRef& a, double c);
NodeRef relu(const NodeRef& a);
NodeRef sigmoid_op(const NodeRef& a);
NodeRef mul(const NodeRef& a, const NodeRef& b);  // elementwise
NodeRef log_op(const NodeRef& a);
NodeRef sum(const NodeRef& a);      // all entries -> 1×1
NodeRef col_sum(const NodeRef& a);  // n×d -> 1×d
// horizontal concatenation of equal-row-count blocks
NodeRef concat_cols(const std::vector<NodeRef>& parts);
// row-wise softmax
NodeRef softmax(const NodeRef& a);
// -log softmax(logits)[label] with log-sum-exp stabilization; logits 1×C
NodeRef cross_entropy(const NodeRef& logits, std::size_t label);

// Builds the message-MLP input block: row e of the result is
// [H[src_e]; H[dst_e]; w_e] for edge list (src, dst) and weight column w (E×1).
NodeRef gather_edge_inputs(const NodeRef& H,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                           const NodeRef& w);
// Sums rows of M (E×d) into n_segments buckets given per-row segment ids.
NodeRef segment_sum(const NodeRef& M, const std::vector<std::uint32_t>& seg,
                    std::size_t n_segments);

// Per-edge masked weights: out_e = base_w[e] * sigmoid(mask_params[pair_idx[e]]).
// pair_idx[e] < 0 marks a constant entry (self-loops), emitted as base_w[e].
NodeRef masked_edge_weights(const NodeRef& mask_params,
                            const std::vector<std::int64_t>& pair_idx,
                            const std::vector<double>& base_w);

// Reverse sweep from a scalar loss; accumulates into grads of every
// reachable node (parameters keep accumulating until the caller zeroes them).
void backward(const NodeRef& loss);

double sigmoid(double x);

}  // namespace brainnet
