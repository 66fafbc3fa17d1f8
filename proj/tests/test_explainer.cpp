#include <algorithm>
#include <cmath>
#include <random>

#include "brainnet/explainer.hpp"
#include "doctest.h"

using namespace brainnet;

namespace {

BrainGraph random_graph(std::size_t n, std::mt19937_64& rng, double zero_frac = 0.2) {
    BrainGraph g;
    g.subject_id = "t";
    g.weights = Tensor(n, n);
    std::normal_distribution<double> w(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = u(rng) < zero_frac ? 0.0 : w(rng);
            g.weights(i, j) = g.weights(j, i) = v;
        }
    return g;
}

double naive_sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

double naive_xent(const Tensor& logits, std::size_t label) {
    double mx = *std::max_element(logits.data.begin(), logits.data.end());
    double s = 0.0;
    for (double v : logits.data) s += std::exp(v - mx);
    return std::log(s) + mx - logits.data[label];
}

// straight-line reimplementation of every loss term, no shared code paths
MaskLosses naive_mask_losses(const BackboneParams& p, const BrainGraph& g,
                             const EdgeMask& mask, std::size_t label,
                             double lambda_s, double lambda_e) {
    const std::size_t n = g.n();
    BrainGraph masked = g;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                masked.weights(i, j) *= naive_sigmoid(mask.m_at(i, j));

    auto feats = build_features(g, FeatureScheme::OneHot);
    MaskLosses r{};
    r.l_m = naive_xent(predict(masked, feats, p), label);
    r.l_p = naive_xent(predict(g, feats, p), label);
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = naive_sigmoid(mask.m_at(i, j));
            r.l_s += s;
            r.l_e -= s * std::log(s) + (1.0 - s) * std::log(1.0 - s);
            ++pairs;
        }
    r.l_e /= double(pairs);
    r.total = (r.l_m + r.l_p) + lambda_s * r.l_s + lambda_e * r.l_e;
    return r;
}

double mean_sigma(const EdgeMask& mask) {
    double s = 0.0;
    for (double v : mask.params->value.data) s += naive_sigmoid(v);
    return s / double(mask.params->value.size());
}

struct MaskFixture {
    SyntheticCohort cohort;
    Split split;
    TrainConfig cfg;
    BackboneParams backbone;

    MaskFixture() {
        cohort = generate_synthetic_cohort(10, 8, {{0, 5}, {1, 6}, {2, 7}},
                                           6.0, 0.5, 7);
        split = split_dataset(cohort.dataset, {0.7, 0.15, 0.15}, 3);
        cfg.epochs = 30;
        cfg.hidden_dim = 16;
        cfg.lr = 0.005;
        cfg.seed = 11;
        backbone = train_backbone(cohort.dataset, split, cfg).params;
    }
};

}  // namespace

TEST_CASE("edge mask structure") {
    EdgeMask mask = EdgeMask::init(6, 1.0, 0.1, 5);
    CHECK(mask.params->value.rows == 15);
    CHECK(mask.params->value.cols == 1);

    Tensor m = mask.matrix();
    Tensor s = mask.sigma_matrix();
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(m(i, i) == 0.0);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(m(i, j) == m(j, i));
            CHECK(s(i, j) == doctest::Approx(naive_sigmoid(m(i, j))).epsilon(1e-15));
            CHECK(s(i, j) > 0.0);
            CHECK(s(i, j) < 1.0);
        }
    }

    // deterministic per seed, near the requested mean
    EdgeMask again = EdgeMask::init(6, 1.0, 0.1, 5);
    CHECK(again.params->value.data == mask.params->value.data);
    EdgeMask wide = EdgeMask::init(40, 1.0, 0.1, 5);
    CHECK(mean_sigma(wide) == doctest::Approx(naive_sigmoid(1.0)).epsilon(0.05));

    CHECK_THROWS_AS(EdgeMask::init(1, 1.0, 0.1, 5), DataError);
}

TEST_CASE("apply_mask scales weights through the sigmoid") {
    std::mt19937_64 rng(2);
    BrainGraph g = random_graph(5, rng, 0.3);

    SUBCASE("M = 0 halves every edge") {
        EdgeMask mask = EdgeMask::init(5, 0.0, 0.1, 1);
        mask.params->value.fill(0.0);
        Tensor out = apply_mask(g.weights, mask);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(out(i, j) == doctest::Approx(0.5 * g.weights(i, j)).epsilon(1e-15));
    }

    SUBCASE("saturated mask is the identity") {
        EdgeMask mask = EdgeMask::init(5, 0.0, 0.1, 1);
        mask.params->value.fill(40.0);
        Tensor out = apply_mask(g.weights, mask);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(out(i, j) == doctest::Approx(g.weights(i, j)).epsilon(1e-12));
    }

    SUBCASE("zeros stay zero, signs survive, symmetry survives") {
        EdgeMask mask = EdgeMask::init(5, 1.0, 0.5, 9);
        Tensor out = apply_mask(g.weights, mask);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                CHECK(out(i, j) == out(j, i));
                if (g.weights(i, j) == 0.0)
                    CHECK(out(i, j) == 0.0);
                else
                    CHECK(out(i, j) * g.weights(i, j) > 0.0);
            }
    }

    SUBCASE("shape mismatch throws") {
        EdgeMask mask = EdgeMask::init(4, 1.0, 0.1, 1);
        CHECK_THROWS_AS(apply_mask(g.weights, mask), DataError);
    }
}

TEST_CASE("mask losses at hand-checkable points") {
    std::mt19937_64 rng(3);
    BrainGraph g = random_graph(6, rng);
    g.label = 1;
    auto feats = build_features(g, FeatureScheme::OneHot);
    std::mt19937_64 prng(4);
    auto p = BackboneParams::init(6, 8, 2, 1, prng);

    EdgeMask mask = EdgeMask::init(6, 0.0, 0.1, 1);
    mask.params->value.fill(0.0);
    auto at_zero = mask_losses(p, g, feats, mask, 1, 0.005, 0.1);
    CHECK(at_zero.l_e == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(at_zero.l_s == doctest::Approx(15 * 0.5).epsilon(1e-15));

    mask.params->value.fill(40.0);
    auto saturated = mask_losses(p, g, feats, mask, 1, 0.005, 0.1);
    CHECK(saturated.l_s == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(saturated.l_e < 1e-12);
    // sigma ~ 1 makes the masked graph the original graph
    CHECK(saturated.l_m == doctest::Approx(saturated.l_p).epsilon(1e-9));

    CHECK(at_zero.total ==
          doctest::Approx(at_zero.l_m + at_zero.l_p + 0.005 * at_zero.l_s +
                          0.1 * at_zero.l_e)
              .epsilon(1e-15));
}

TEST_CASE("mask losses match a straight-line reimplementation") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> mdist(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        BrainGraph g = random_graph(5, rng);
        g.label = trial % 2;
        auto feats = build_features(g, FeatureScheme::OneHot);
        std::mt19937_64 prng(100 + trial);
        auto p = BackboneParams::init(5, 8, 2, 1, prng);
        EdgeMask mask = EdgeMask::init(5, 0.0, 1.0, 1);
        for (double& v : mask.params->value.data) v = mdist(rng);

        auto got = mask_losses(p, g, feats, mask, g.label, 0.005, 0.1);
        auto want = naive_mask_losses(p, g, mask, g.label, 0.005, 0.1);
        CHECK(got.l_m == doctest::Approx(want.l_m).epsilon(1e-12));
        CHECK(got.l_p == doctest::Approx(want.l_p).epsilon(1e-12));
        CHECK(got.l_s == doctest::Approx(want.l_s).epsilon(1e-12));
        CHECK(got.l_e == doctest::Approx(want.l_e).epsilon(1e-12));
        CHECK(got.total == doctest::Approx(want.total).epsilon(1e-12));
    }
}

TEST_CASE("mask training mechanics") {
    MaskFixture fx;

    SUBCASE("zero learning rate and zero epochs both return the init") {
        ExplainConfig ec;
        ec.epochs = 5;
        ec.lr = 0.0;
        ec.seed = 21;
        auto r = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        EdgeMask init = EdgeMask::init(10, ec.init_mean, ec.init_sd, ec.seed);
        CHECK(r.mask.params->value.data == init.params->value.data);
        CHECK(r.best_epoch == 0);

        ec.lr = 0.05;
        ec.epochs = 0;
        auto none = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        CHECK(none.mask.params->value.data == init.params->value.data);
        CHECK(none.final_mask.params->value.data == init.params->value.data);
    }

    SUBCASE("the backbone stays bit-identical") {
        std::vector<Tensor> before;
        for (const auto& p : fx.backbone.all_params()) before.push_back(p->value);
        ExplainConfig ec;
        ec.epochs = 10;
        train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        auto params = fx.backbone.all_params();
        REQUIRE(params.size() == before.size());
        for (std::size_t k = 0; k < params.size(); ++k)
            CHECK(params[k]->value.data == before[k].data);
    }

    SUBCASE("results are symmetric, open-interval, and deterministic") {
        ExplainConfig ec;
        ec.epochs = 15;
        auto a = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        auto b = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        CHECK(a.mask.params->value.data == b.mask.params->value.data);
        CHECK(a.final_mask.params->value.data == b.final_mask.params->value.data);
        REQUIRE(a.log.size() == 15);
        for (std::size_t e = 0; e < 15; ++e) {
            CHECK(a.log[e].train_total == b.log[e].train_total);
            CHECK(a.log[e].val_l_m == b.log[e].val_l_m);
        }

        Tensor s = a.final_mask.sigma_matrix();
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                CHECK(s(i, j) == s(j, i));
                CHECK(s(i, j) > 0.0);
                CHECK(s(i, j) < 1.0);
            }
    }

    SUBCASE("prediction targets are accepted") {
        ExplainConfig ec;
        ec.epochs = 3;
        ec.target_predictions = true;
        auto r = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, ec);
        for (double v : r.final_mask.params->value.data) CHECK(std::isfinite(v));
    }
}

TEST_CASE("sparsity pressure shrinks the mask") {
    MaskFixture fx;

    ExplainConfig free_cfg;
    free_cfg.epochs = 50;
    free_cfg.lr = 0.2;
    free_cfg.lambda_sparsity = 0.0;
    free_cfg.lambda_entropy = 0.0;
    auto free_run = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, free_cfg);

    ExplainConfig sparse_cfg = free_cfg;
    sparse_cfg.lambda_sparsity = 1e3;
    auto sparse = train_mask(fx.backbone, fx.cohort.dataset, fx.split, fx.cfg, sparse_cfg);

    CHECK(mean_sigma(sparse.final_mask) < 0.1);
    CHECK(mean_sigma(sparse.final_mask) < mean_sigma(free_run.final_mask));
}

TEST_CASE("masked dataset and three-step training") {
    MaskFixture fx;

    SUBCASE("a saturated mask reproduces the dataset") {
        EdgeMask mask = EdgeMask::init(10, 40.0, 1e-9, 1);
        Dataset masked = masked_dataset(fx.cohort.dataset, mask);
        REQUIRE(masked.graphs.size() == fx.cohort.dataset.graphs.size());
        for (std::size_t g = 0; g < masked.graphs.size(); ++g) {
            const Tensor& a = masked.graphs[g].weights;
            const Tensor& b = fx.cohort.dataset.graphs[g].weights;
            for (std::size_t k = 0; k < a.size(); ++k)
                CHECK(a.data[k] == doctest::Approx(b.data[k]).epsilon(1e-12));
        }
    }

    SUBCASE("three steps run deterministically and report sane numbers") {
        ExplainConfig ec;
        ec.epochs = 10;
        auto a = three_step_train(fx.cohort.dataset, fx.split, fx.cfg, ec);
        auto b = three_step_train(fx.cohort.dataset, fx.split, fx.cfg, ec);
        CHECK(a.report.step1_accuracy == b.report.step1_accuracy);
        CHECK(a.report.step3_accuracy == b.report.step3_accuracy);
        CHECK(a.report.step1_auc == b.report.step1_auc);
        CHECK(a.report.step3_auc == b.report.step3_auc);
        CHECK(a.mask.mask.params->value.data == b.mask.mask.params->value.data);

        CHECK(a.report.step1_accuracy >= 0.0);
        CHECK(a.report.step1_accuracy <= 1.0);
        CHECK(a.report.step3_accuracy >= 0.0);
        CHECK(a.report.step3_accuracy <= 1.0);
        CHECK(std::isfinite(a.report.step1_auc));
        CHECK(std::isfinite(a.report.step3_auc));
    }
}
