#include "brainnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace brainnet {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

NodeRef make_leaf(Tensor v) { return std::make_shared<Node>(std::move(v)); }

namespace {

NodeRef make_op(Tensor v, const char* op, std::vector<NodeRef> parents,
                std::function<void(const Node&)> backprop) {
    auto n = std::make_shared<Node>(std::move(v));
    n->op = op;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    return n;
}

// C += A·B, row-major, ikj order
void matmul_acc(const double* A, const double* B, double* C, std::size_t r,
                std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* a = A + i * k;
        double* out = C + i * c;
        for (std::size_t p = 0; p < k; ++p) {
            double av = a[p];
            if (av == 0.0) continue;
            const double* b = B + p * c;
            for (std::size_t j = 0; j < c; ++j) out[j] += av * b[j];
        }
    }
}

// C += A·Bᵀ with B given row-major (r×c)·(k×c)ᵀ -> r×k
void matmul_bt_acc(const double* A, const double* B, double* C, std::size_t r,
                   std::size_t c, std::size_t k) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* a = A + i * c;
        for (std::size_t p = 0; p < k; ++p) {
            const double* b = B + p * c;
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += a[j] * b[j];
            C[i * k + p] += s;
        }
    }
}

// C += Aᵀ·B, A (r×k) B (r×c) -> k×c
void matmul_at_acc(const double* A, const double* B, double* C, std::size_t r,
                   std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* a = A + i * k;
        const double* b = B + i * c;
        for (std::size_t p = 0; p < k; ++p) {
            double av = a[p];
            if (av == 0.0) continue;
            double* out = C + p * c;
            for (std::size_t j = 0; j < c; ++j) out[j] += av * b[j];
        }
    }
}

}  // namespace

NodeRef matmul(const NodeRef& a, const NodeRef& b) {
    if (a->value.cols != b->value.rows) {
        throw std::invalid_argument("matmul: shape mismatch " + a->value.shape_str() +
                                    " vs " + b->value.shape_str());
    }
    Tensor out(a->value.rows, b->value.cols);
    matmul_acc(a->value.data.data(), b->value.data.data(), out.data.data(),
               a->value.rows, a->value.cols, b->value.cols);
    return make_op(std::move(out), "matmul", {a, b}, [a, b](const Node& n) {
        // dA += dC·Bᵀ ; dB += Aᵀ·dC
        matmul_bt_acc(n.grad.data.data(), b->value.data.data(), a->grad.data.data(),
                      n.grad.rows, n.grad.cols, a->value.cols);
        matmul_at_acc(a->value.data.data(), n.grad.data.data(), b->grad.data.data(),
                      a->value.rows, a->value.cols, n.grad.cols);
    });
}

NodeRef add(const NodeRef& a, const NodeRef& b) {
    const bool bcast = b->value.rows == 1 && a->value.rows > 1 &&
                       b->value.cols == a->value.cols;
    if (!bcast) require_same_shape(a->value, b->value, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            out(i, j) += b->value(bcast ? 0 : i, j);
    return make_op(std::move(out), "add", {a, b}, [a, b, bcast](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.data[i] += n.grad.data[i];
        if (bcast) {
            for (std::size_t i = 0; i < n.grad.rows; ++i)
                for (std::size_t j = 0; j < n.grad.cols; ++j)
                    b->grad(0, j) += n.grad(i, j);
        } else {
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                b->grad.data[i] += n.grad.data[i];
        }
    });
}

NodeRef sub(const NodeRef& a, const NodeRef& b) {
    require_same_shape(a->value, b->value, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b->value.data[i];
    return make_op(std::move(out), "sub", {a, b}, [a, b](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.data[i] += n.grad.data[i];
            b->grad.data[i] -= n.grad.data[i];
        }
    });
}

NodeRef scale(const NodeRef& a, double c) {
    Tensor out = a->value;
    for (double& v : out.data) v *= c;
    return make_op(std::move(out), "scale", {a}, [a, c](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            a->grad.data[i] += c * n.grad.data[i];
    });
}

NodeRef relu(const NodeRef& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make_op(std::move(out), "relu", {a}, [a](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (a->value.data[i] > 0.0) a->grad.data[i] += n.grad.data[i];
    });
}

NodeRef sigmoid_op(const NodeRef& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = sigmoid(v);
    auto n = make_op(std::move(out), "sigmoid", {a}, nullptr);
    n->backprop = [a](const Node& nd) {
        for (std::size_t i = 0; i < nd.grad.size(); ++i) {
            double s = nd.value.data[i];
            a->grad.data[i] += nd.grad.data[i] * s * (1.0 - s);
        }
    };
    return n;
}

NodeRef mul(const NodeRef& a, const NodeRef& b) {
    require_same_shape(a->value, b->value, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b->value.data[i];
    return make_op(std::move(out), "mul", {a, b}, [a, b](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.data[i] += n.grad.data[i] * b->value.data[i];
            b->grad.data[i] += n.grad.data[i] * a->value.data[i];
        }
    });
}

NodeRef log_op(const NodeRef& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::log(v);
    return make_op(std::move(out), "log", {a}, [a](const Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            a->grad.data[i] += n.grad.data[i] / a->value.data[i];
    });
}

NodeRef sum(const NodeRef& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_op(Tensor::scalar(s), "sum", {a}, [a](const Node& n) {
        double g = n.grad.data[0];
        for (double& v : a->grad.data) v += g;
    });
}

NodeRef col_sum(const NodeRef& a) {
    Tensor out(1, a->value.cols);
    for (std::size_t i = 0; i < a->value.rows; ++i)
        for (std::size_t j = 0; j < a->value.cols; ++j)
            out(0, j) += a->value(i, j);
    return make_op(std::move(out), "col_sum", {a}, [a](const Node& n) {
        for (std::size_t i = 0; i < a->grad.rows; ++i)
            for (std::size_t j = 0; j < a->grad.cols; ++j)
                a->grad(i, j) += n.grad(0, j);
    });
}

NodeRef concat_cols(const std::vector<NodeRef>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    std::size_t rows = parts[0]->value.rows;
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows != rows)
            throw std::invalid_argument("concat_cols: row count mismatch");
        cols += p->value.cols;
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < p->value.cols; ++j)
                out(i, off + j) = p->value(i, j);
        off += p->value.cols;
    }
    return make_op(std::move(out), "concat_cols", parts, [parts](const Node& n) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            for (std::size_t i = 0; i < p->grad.rows; ++i)
                for (std::size_t j = 0; j < p->grad.cols; ++j)
                    p->grad(i, j) += n.grad(i, off + j);
            off += p->grad.cols;
        }
    });
}

NodeRef softmax(const NodeRef& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.rows; ++i) {
        double mx = out(i, 0);
        for (std::size_t j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < out.cols; ++j) {
            out(i, j) = std::exp(out(i, j) - mx);
            z += out(i, j);
        }
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) /= z;
    }
    auto n = make_op(std::move(out), "softmax", {a}, nullptr);
    n->backprop = [a](const Node& nd) {
        const Tensor& s = nd.value;
        for (std::size_t i = 0; i < s.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < s.cols; ++j) dot += nd.grad(i, j) * s(i, j);
            for (std::size_t j = 0; j < s.cols; ++j)
                a->grad(i, j) += s(i, j) * (nd.grad(i, j) - dot);
        }
    };
    return n;
}

NodeRef cross_entropy(const NodeRef& logits, std::size_t label) {
    const Tensor& v = logits->value;
    if (v.rows != 1) throw std::invalid_argument("cross_entropy: logits must be 1xC");
    if (label >= v.cols) throw std::invalid_argument("cross_entropy: label out of range");
    double mx = v.data[0];
    for (double x : v.data) {
        if (!std::isfinite(x)) throw std::invalid_argument("cross_entropy: non-finite logit");
        mx = std::max(mx, x);
    }
    double z = 0.0;
    for (double x : v.data) z += std::exp(x - mx);
    double loss = std::log(z) + mx - v.data[label];
    return make_op(Tensor::scalar(loss), "cross_entropy", {logits},
                   [logits, label, mx, z](const Node& n) {
                       double g = n.grad.data[0];
                       const Tensor& v = logits->value;
                       for (std::size_t j = 0; j < v.cols; ++j) {
                           double p = std::exp(v.data[j] - mx) / z;
                           logits->grad.data[j] += g * (p - (j == label ? 1.0 : 0.0));
                       }
                   });
}

NodeRef gather_edge_inputs(const NodeRef& H,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                           const NodeRef& w) {
    const std::size_t d = H->value.cols;
    const std::size_t E = edges.size();
    if (w->value.rows != E || w->value.cols != 1)
        throw std::invalid_argument("gather_edge_inputs: weight column must be Ex1");
    Tensor out(E, 2 * d + 1);
    for (std::size_t e = 0; e < E; ++e) {
        auto [i, j] = edges[e];
        for (std::size_t k = 0; k < d; ++k) {
            out(e, k) = H->value(i, k);
            out(e, d + k) = H->value(j, k);
        }
        out(e, 2 * d) = w->value.data[e];
    }
    return make_op(std::move(out), "gather_edge_inputs", {H, w},
                   [H, w, edges, d](const Node& n) {
                       for (std::size_t e = 0; e < edges.size(); ++e) {
                           auto [i, j] = edges[e];
                           for (std::size_t k = 0; k < d; ++k) {
                               H->grad(i, k) += n.grad(e, k);
                               H->grad(j, k) += n.grad(e, d + k);
                           }
                           w->grad.data[e] += n.grad(e, 2 * d);
                       }
                   });
}

NodeRef segment_sum(const NodeRef& M, const std::vector<std::uint32_t>& seg,
                    std::size_t n_segments) {
    if (seg.size() != M->value.rows)
        throw std::invalid_argument("segment_sum: one segment id per row required");
    Tensor out(n_segments, M->value.cols);
    for (std::size_t e = 0; e < seg.size(); ++e)
        for (std::size_t j = 0; j < M->value.cols; ++j)
            out(seg[e], j) += M->value(e, j);
    return make_op(std::move(out), "segment_sum", {M}, [M, seg](const Node& n) {
        for (std::size_t e = 0; e < seg.size(); ++e)
            for (std::size_t j = 0; j < M->grad.cols; ++j)
                M->grad(e, j) += n.grad(seg[e], j);
    });
}

NodeRef masked_edge_weights(const NodeRef& mask_params,
                            const std::vector<std::int64_t>& pair_idx,
                            const std::vector<double>& base_w) {
    if (pair_idx.size() != base_w.size())
        throw std::invalid_argument("masked_edge_weights: index/weight length mismatch");
    Tensor out(pair_idx.size(), 1);
    for (std::size_t e = 0; e < pair_idx.size(); ++e) {
        out.data[e] = pair_idx[e] < 0
                          ? base_w[e]
                          : base_w[e] * sigmoid(mask_params->value.data[pair_idx[e]]);
    }
    return make_op(std::move(out), "masked_edge_weights", {mask_params},
                   [mask_params, pair_idx, base_w](const Node& n) {
                       for (std::size_t e = 0; e < pair_idx.size(); ++e) {
                           if (pair_idx[e] < 0) continue;
                           double s = sigmoid(mask_params->value.data[pair_idx[e]]);
                           mask_params->grad.data[pair_idx[e]] +=
                               n.grad.data[e] * base_w[e] * s * (1.0 - s);
                       }
                   });
}

void backward(const NodeRef& loss) {
    if (loss->value.rows != 1 || loss->value.cols != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " +
                                    loss->value.shape_str());
    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    loss->grad.data[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

}  // namespace brainnet
