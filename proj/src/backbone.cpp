#include "brainnet/backbone.hpp"

#include <cmath>
#include <limits>

#include "brainnet/analysis.hpp"
#include "brainnet/optim.hpp"

namespace brainnet {

GraphPlan make_graph_plan(const BrainGraph& g) {
    const std::size_t n = g.n();
    GraphPlan plan;
    for (std::size_t i = 0; i < n; ++i) {
        plan.edges.emplace_back(std::uint32_t(i), std::uint32_t(i));
        plan.seg.push_back(std::uint32_t(i));
        plan.weights.push_back(0.0);  // w_ii = 0
        plan.pair_idx.push_back(-1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || g.weights(i, j) == 0.0) continue;
            plan.edges.emplace_back(std::uint32_t(i), std::uint32_t(j));
            plan.seg.push_back(std::uint32_t(i));
            plan.weights.push_back(g.weights(i, j));
            plan.pair_idx.push_back(
                std::int64_t(upper_pair_index(n, std::min(i, j), std::max(i, j))));
        }
    }
    return plan;
}

BackboneParams BackboneParams::init(std::size_t feature_dim, std::size_t hidden_dim,
                                    std::size_t num_classes, std::size_t layers,
                                    std::mt19937_64& rng) {
    if (layers < 1) throw DataError("backbone: need at least one message-passing layer");
    BackboneParams p;
    p.feature_dim = feature_dim;
    p.hidden_dim = hidden_dim;
    p.num_classes = num_classes;
    p.layers = layers;
    if (feature_dim != hidden_dim)
        p.lift = Mlp::init({feature_dim, hidden_dim}, rng);
    p.message_mlp = Mlp::init({2 * hidden_dim + 1, hidden_dim, hidden_dim}, rng);
    p.readout_mlp = Mlp::init({hidden_dim, hidden_dim, hidden_dim, hidden_dim}, rng);
    p.classifier = Mlp::init({hidden_dim, num_classes}, rng);
    return p;
}

std::vector<NodeRef> BackboneParams::all_params() const {
    std::vector<NodeRef> out;
    if (lift) lift->collect(out);
    message_mlp.collect(out);
    readout_mlp.collect(out);
    classifier.collect(out);
    return out;
}

BackboneParams BackboneParams::clone() const {
    BackboneParams c = *this;
    auto copy_mlp = [](Mlp& m) {
        for (auto& l : m.layers) {
            l.W = make_leaf(l.W->value);
            l.b = make_leaf(l.b->value);
        }
    };
    if (c.lift) copy_mlp(*c.lift);
    copy_mlp(c.message_mlp);
    copy_mlp(c.readout_mlp);
    copy_mlp(c.classifier);
    return c;
}

Tensor message(const Tensor& h_i, const Tensor& h_j, double w_ij, const Mlp& theta) {
    if (h_i.cols != h_j.cols || h_i.rows != 1 || h_j.rows != 1)
        throw DataError("message: embeddings must be equal-width row vectors");
    if (theta.in_dim() != 2 * h_i.cols + 1)
        throw DataError("message: MLP input width " + std::to_string(theta.in_dim()) +
                        " does not match 2*" + std::to_string(h_i.cols) + "+1");
    auto x = concat_cols({make_leaf(h_i), make_leaf(h_j),
                          make_leaf(Tensor::scalar(w_ij))});
    return theta.forward(x)->value;
}

NodeRef propagate(const NodeRef& H, const GraphPlan& plan, const NodeRef& weight_col,
                  const Mlp& message_mlp, std::size_t n) {
    auto inputs = gather_edge_inputs(H, plan.edges, weight_col);
    auto msgs = message_mlp.forward(inputs);
    return relu(segment_sum(msgs, plan.seg, n));
}

NodeRef readout(const NodeRef& H, const Mlp& readout_mlp) {
    auto pooled = col_sum(H);
    return add(readout_mlp.forward(pooled), pooled);
}

NodeRef predict_node(const FeatureMatrix& features, const GraphPlan& plan,
                     const BackboneParams& p, const NodeRef& weight_col) {
    NodeRef H = make_leaf(features.values);
    if (p.lift) {
        H = p.lift->forward(H);
    } else if (features.values.cols != p.hidden_dim) {
        throw DataError("predict: feature width " + std::to_string(features.values.cols) +
                        " does not match model width " + std::to_string(p.hidden_dim));
    }
    const std::size_t n = features.values.rows;
    for (std::size_t l = 0; l < p.layers; ++l)
        H = propagate(H, plan, weight_col, p.message_mlp, n);
    auto z = readout(H, p.readout_mlp);
    return p.classifier.forward(z);
}

Tensor predict(const BrainGraph& g, const FeatureMatrix& features,
               const BackboneParams& p) {
    auto plan = make_graph_plan(g);
    auto wcol = make_leaf(Tensor(plan.weights.size(), 1));
    for (std::size_t e = 0; e < plan.weights.size(); ++e)
        wcol->value.data[e] = plan.weights[e];
    return predict_node(features, plan, p, wcol)->value;
}

namespace {

struct PreparedGraph {
    FeatureMatrix features;
    GraphPlan plan;
    NodeRef weight_col;
    std::size_t label;
};

std::vector<PreparedGraph> prepare(const Dataset& d, const TrainConfig& cfg) {
    std::vector<PreparedGraph> out;
    out.reserve(d.graphs.size());
    for (const auto& g : d.graphs) {
        PreparedGraph pg;
        pg.features = build_features(g, cfg.scheme, cfg.feat_opts);
        pg.plan = make_graph_plan(g);
        Tensor w(pg.plan.weights.size(), 1);
        for (std::size_t e = 0; e < w.size(); ++e) w.data[e] = pg.plan.weights[e];
        pg.weight_col = make_leaf(std::move(w));
        pg.label = g.label;
        out.push_back(std::move(pg));
    }
    return out;
}

EvalResult evaluate_prepared(const BackboneParams& p,
                             const std::vector<PreparedGraph>& prepared,
                             const std::vector<std::size_t>& indices) {
    EvalResult r;
    std::vector<std::size_t> labels;
    for (std::size_t idx : indices) {
        const auto& pg = prepared[idx];
        Tensor logits = predict_node(pg.features, pg.plan, p, pg.weight_col)->value;
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < logits.cols; ++c)
            if (logits.data[c] > logits.data[argmax]) argmax = c;
        r.predictions.push_back(argmax);
        if (logits.cols == 2) {
            // log-odds of class 1, monotone in its softmax probability
            r.class1_scores.push_back(logits.data[1] - logits.data[0]);
        }
        labels.push_back(pg.label);
    }
    r.accuracy = accuracy(r.predictions, labels);
    r.auc = std::numeric_limits<double>::quiet_NaN();
    if (!r.class1_scores.empty()) {
        bool both = false;
        for (std::size_t i = 1; i < labels.size(); ++i)
            if (labels[i] != labels[0]) both = true;
        if (both) r.auc = auc(r.class1_scores, labels);
    }
    return r;
}

}  // namespace

EvalResult evaluate_backbone(const BackboneParams& p, const Dataset& d,
                             const std::vector<std::size_t>& indices,
                             const TrainConfig& cfg) {
    auto prepared = prepare(d, cfg);
    return evaluate_prepared(p, prepared, indices);
}

TrainResult train_backbone(const Dataset& d, const Split& split, const TrainConfig& cfg,
                           const BackboneParams* initial) {
    if (cfg.epochs < 1) throw DataError("train_backbone: epochs must be >= 1");
    split.validate(d.graphs.size());
    auto prepared = prepare(d, cfg);
    const std::size_t feat_dim = prepared.front().features.values.cols;

    std::mt19937_64 rng(cfg.seed);
    BackboneParams params =
        initial ? initial->clone()
                : BackboneParams::init(feat_dim, cfg.hidden_dim, d.num_classes,
                                       cfg.layers, rng);
    if (params.feature_dim != feat_dim)
        throw DataError("train_backbone: initial parameters expect feature width " +
                        std::to_string(params.feature_dim) + ", features have " +
                        std::to_string(feat_dim));

    auto param_nodes = params.all_params();
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    adam_cfg.weight_decay = cfg.weight_decay;
    AdamState state = AdamState::init(param_nodes);

    TrainResult result;
    BackboneParams best = params.clone();
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        zero_grads(param_nodes);
        double loss_sum = 0.0;
        for (std::size_t idx : split.train) {
            const auto& pg = prepared[idx];
            auto logits = predict_node(pg.features, pg.plan, params, pg.weight_col);
            for (double v : logits->value.data)
                if (!std::isfinite(v))
                    throw NumericalError("train_backbone: diverged at epoch " +
                                         std::to_string(epoch));
            auto loss = cross_entropy(logits, pg.label);
            loss_sum += loss->value.data[0];
            backward(loss);
        }
        double mean_loss = loss_sum / double(split.train.size());
        if (!std::isfinite(mean_loss))
            throw NumericalError("train_backbone: diverged at epoch " +
                                 std::to_string(epoch));
        try {
            adam_step(param_nodes, state, adam_cfg, double(split.train.size()));
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (epoch " +
                                 std::to_string(epoch) + ")");
        }
        auto val = evaluate_prepared(params, prepared, split.val);
        result.log.push_back({epoch, mean_loss, val.accuracy});
        if (val.accuracy > best_val) {  // strict: lowest-epoch tie-break
            best_val = val.accuracy;
            best_epoch = epoch;
            best = params.clone();
        }
    }
    result.params = std::move(best);
    result.best_epoch = best_epoch;
    result.best_val_accuracy = best_val;
    return result;
}

}  // namespace brainnet
