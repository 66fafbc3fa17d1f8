#include "brainnet/explainer.hpp"

#include <cmath>
#include <limits>

#include "brainnet/analysis.hpp"
#include "brainnet/optim.hpp"

namespace brainnet {

EdgeMask EdgeMask::init(std::size_t n, double mean, double sd, std::uint64_t seed) {
    if (n < 2) throw DataError("edge mask: need at least 2 nodes");
    EdgeMask mask;
    mask.n = n;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mean, sd);
    Tensor t(upper_pair_count(n), 1);
    for (double& v : t.data) v = dist(rng);
    mask.params = make_leaf(std::move(t));
    return mask;
}

double EdgeMask::m_at(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return params->value.data[upper_pair_index(n, std::min(i, j), std::max(i, j))];
}

Tensor EdgeMask::matrix() const {
    Tensor m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m(i, j) = m(j, i) = m_at(i, j);
    return m;
}

Tensor EdgeMask::sigma_matrix() const {
    Tensor s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = sigmoid(m_at(i, j));
    return s;
}

EdgeMask EdgeMask::clone() const {
    EdgeMask c = *this;
    c.params = make_leaf(params->value);
    return c;
}

Tensor apply_mask(const Tensor& w, const EdgeMask& mask) {
    if (w.rows != mask.n || w.cols != mask.n)
        throw DataError("apply_mask: shape mismatch " + w.shape_str() + " vs mask n=" +
                        std::to_string(mask.n));
    Tensor out = w;
    for (std::size_t i = 0; i < mask.n; ++i)
        for (std::size_t j = 0; j < mask.n; ++j)
            out(i, j) *= sigmoid(mask.m_at(i, j));
    return out;
}

namespace {

struct RegTerms {
    double l_s;
    double l_e;
};

RegTerms regularizer_values(const EdgeMask& mask) {
    RegTerms r{0.0, 0.0};
    const std::size_t pairs = mask.params->value.size();
    auto plogp = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    for (double v : mask.params->value.data) {
        double m = sigmoid(v);
        r.l_s += m;
        r.l_e -= plogp(m) + plogp(1.0 - m);
    }
    r.l_e /= double(pairs);
    return r;
}

// lambda_s * sum(sigma) + lambda_e * mean_binary_entropy(sigma), as a graph node
NodeRef regularizer_node(const EdgeMask& mask, double lambda_s, double lambda_e) {
    auto s = sigmoid_op(mask.params);
    auto ones = make_leaf(Tensor(s->value.rows, 1, 1.0));
    auto one_minus = sub(ones, s);
    auto ent = scale(sum(add(mul(s, log_op(s)), mul(one_minus, log_op(one_minus)))),
                     -1.0 / double(s->value.rows));
    return add(scale(sum(s), lambda_s), scale(ent, lambda_e));
}

}  // namespace

MaskLosses mask_losses(const BackboneParams& backbone, const BrainGraph& g,
                       const FeatureMatrix& features, const EdgeMask& mask,
                       std::size_t label, double lambda_sparsity,
                       double lambda_entropy) {
    auto plan = make_graph_plan(g);
    auto masked_w = masked_edge_weights(mask.params, plan.pair_idx, plan.weights);
    auto raw_w = make_leaf(Tensor(plan.weights.size(), 1));
    for (std::size_t e = 0; e < plan.weights.size(); ++e)
        raw_w->value.data[e] = plan.weights[e];

    MaskLosses out{};
    out.l_m = cross_entropy(predict_node(features, plan, backbone, masked_w), label)
                  ->value.data[0];
    out.l_p = cross_entropy(predict_node(features, plan, backbone, raw_w), label)
                  ->value.data[0];
    auto reg = regularizer_values(mask);
    out.l_s = reg.l_s;
    out.l_e = reg.l_e;
    out.total = (out.l_m + out.l_p) + lambda_sparsity * out.l_s +
                lambda_entropy * out.l_e;
    return out;
}

MaskTrainResult train_mask(const BackboneParams& backbone, const Dataset& d,
                           const Split& split, const TrainConfig& backbone_cfg,
                           const ExplainConfig& cfg) {
    split.validate(d.graphs.size());
    const std::size_t n = d.atlas.n;
    EdgeMask mask = EdgeMask::init(n, cfg.init_mean, cfg.init_sd, cfg.seed);

    struct Prepared {
        FeatureMatrix features;
        GraphPlan plan;
        std::size_t target;
        double l_p;
    };
    std::vector<Prepared> prepared;
    for (const auto& g : d.graphs) {
        Prepared pg;
        pg.features = build_features(g, backbone_cfg.scheme, backbone_cfg.feat_opts);
        pg.plan = make_graph_plan(g);
        auto raw_w = make_leaf(Tensor(pg.plan.weights.size(), 1));
        for (std::size_t e = 0; e < pg.plan.weights.size(); ++e)
            raw_w->value.data[e] = pg.plan.weights[e];
        Tensor logits = predict_node(pg.features, pg.plan, backbone, raw_w)->value;
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < logits.cols; ++c)
            if (logits.data[c] > logits.data[argmax]) argmax = c;
        pg.target = cfg.target_predictions ? argmax : g.label;
        pg.l_p = cross_entropy(make_leaf(logits), g.label)->value.data[0];
        prepared.push_back(std::move(pg));
    }

    std::vector<NodeRef> opt_params{mask.params};
    auto backbone_params = backbone.all_params();
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    adam_cfg.weight_decay = 0.0;  // sparsity handles shrinkage
    AdamState state = AdamState::init(opt_params);

    auto val_l_m = [&](const EdgeMask& m) {
        double s = 0.0;
        for (std::size_t idx : split.val) {
            const auto& pg = prepared[idx];
            auto w = masked_edge_weights(m.params, pg.plan.pair_idx, pg.plan.weights);
            s += cross_entropy(predict_node(pg.features, pg.plan, backbone, w), pg.target)
                     ->value.data[0];
        }
        return s / double(split.val.size());
    };

    MaskTrainResult result;
    EdgeMask best = mask.clone();
    double best_val = val_l_m(mask);
    std::size_t best_epoch = 0;
    const double n_train = double(split.train.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        zero_grads(opt_params);
        zero_grads(backbone_params);  // flowed-through, never applied
        double total_sum = 0.0;
        for (std::size_t idx : split.train) {
            const auto& pg = prepared[idx];
            auto w = masked_edge_weights(mask.params, pg.plan.pair_idx, pg.plan.weights);
            auto l_m =
                cross_entropy(predict_node(pg.features, pg.plan, backbone, w), pg.target);
            total_sum += l_m->value.data[0] + pg.l_p;
            backward(l_m);
        }
        auto reg = regularizer_node(mask, cfg.lambda_sparsity, cfg.lambda_entropy);
        total_sum = total_sum / n_train + reg->value.data[0];
        if (!std::isfinite(total_sum))
            throw NumericalError("train_mask: diverged at epoch " + std::to_string(epoch));
        // regularizer appears once per mean-over-graphs objective
        backward(scale(reg, n_train));
        adam_step(opt_params, state, adam_cfg, n_train);

        double v = val_l_m(mask);
        result.log.push_back({epoch, total_sum, v});
        if (v < best_val) {
            best_val = v;
            best_epoch = epoch + 1;
            best = mask.clone();
        }
    }
    result.mask = std::move(best);
    result.final_mask = std::move(mask);
    result.best_epoch = best_epoch;
    return result;
}

Dataset masked_dataset(const Dataset& d, const EdgeMask& mask) {
    Dataset out = d;
    for (auto& g : out.graphs) g.weights = apply_mask(g.weights, mask);
    return out;
}

ThreeStepResult three_step_train(const Dataset& d, const Split& split,
                                 const TrainConfig& cfg_backbone,
                                 const ExplainConfig& cfg_explain) {
    ThreeStepResult r;
    r.step1 = train_backbone(d, split, cfg_backbone);
    r.mask = train_mask(r.step1.params, d, split, cfg_backbone, cfg_explain);

    Dataset masked = masked_dataset(d, r.mask.mask);
    r.step3 = train_backbone(masked, split, cfg_backbone, &r.step1.params);

    auto ev1 = evaluate_backbone(r.step1.params, d, split.test, cfg_backbone);
    const Dataset& step3_eval_data = cfg_explain.apply_mask_at_test ? masked : d;
    auto ev3 = evaluate_backbone(r.step3.params, step3_eval_data, split.test, cfg_backbone);
    r.report = {ev1.accuracy, ev1.auc, ev3.accuracy, ev3.auc};
    return r;
}

}  // namespace brainnet
