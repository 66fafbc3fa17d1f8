#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brainnet/analysis.hpp"
#include "brainnet/checkpoint.hpp"
#include "brainnet/explainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace brainnet;

namespace {

constexpr const char* kSchemaVersion = "1";

struct RunConfig {
    std::string dataset, atlas;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 1;
    TrainConfig backbone;
    ExplainConfig explain;
    SubgraphRule rule = TopKRule{};
    std::string out = ".";
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed config " + path + ": " + e.what());
    }
    return doc;
}

SubgraphRule parse_rule(const json& r) {
    std::string type = r.value("type", "top_k");
    if (type == "top_k") return TopKRule{r.value("k", std::size_t{100})};
    if (type == "threshold") return ThresholdRule{r.value("tau", 0.5)};
    throw DataError("unknown subgraph rule type: " + type);
}

RunConfig load_run_config(const std::string& path) {
    RunConfig c;
    if (path.empty()) return c;
    json doc = read_json_file(path);
    c.dataset = doc.value("dataset", c.dataset);
    c.atlas = doc.value("atlas", c.atlas);
    c.out = doc.value("out", c.out);
    if (doc.contains("split")) {
        const auto& s = doc["split"];
        c.ratios = {s.value("train", 0.8), s.value("val", 0.1), s.value("test", 0.1)};
        c.split_seed = s.value("seed", std::uint64_t{1});
    }
    if (doc.contains("backbone")) {
        const auto& b = doc["backbone"];
        c.backbone.epochs = b.value("epochs", c.backbone.epochs);
        c.backbone.hidden_dim = b.value("hidden_dim", c.backbone.hidden_dim);
        c.backbone.layers = b.value("layers", c.backbone.layers);
        c.backbone.lr = b.value("lr", c.backbone.lr);
        c.backbone.weight_decay = b.value("weight_decay", c.backbone.weight_decay);
        if (b.contains("feature_scheme"))
            c.backbone.scheme = parse_feature_scheme(b["feature_scheme"]);
        c.backbone.feat_opts.num_bins =
            b.value("num_bins", c.backbone.feat_opts.num_bins);
        c.backbone.seed = b.value("seed", c.backbone.seed);
    }
    if (doc.contains("explain")) {
        const auto& e = doc["explain"];
        c.explain.epochs = e.value("epochs", c.explain.epochs);
        c.explain.lr = e.value("lr", c.explain.lr);
        c.explain.lambda_sparsity =
            e.value("lambda_sparsity", c.explain.lambda_sparsity);
        c.explain.lambda_entropy = e.value("lambda_entropy", c.explain.lambda_entropy);
        c.explain.init_mean = e.value("init_mean", c.explain.init_mean);
        c.explain.init_sd = e.value("init_sd", c.explain.init_sd);
        c.explain.seed = e.value("seed", c.explain.seed);
        c.explain.target_predictions =
            e.value("target_predictions", c.explain.target_predictions);
        c.explain.apply_mask_at_test =
            e.value("apply_mask_at_test", c.explain.apply_mask_at_test);
    }
    if (doc.contains("rule")) c.rule = parse_rule(doc["rule"]);
    return c;
}

void write_report(const json& doc, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(1) << "\n";
}

json eval_json(const EvalResult& ev) {
    json j;
    j["accuracy"] = ev.accuracy;
    if (std::isfinite(ev.auc)) j["auc"] = ev.auc;
    return j;
}

Dataset load_input(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw DataError("no dataset path given");
    if (cfg.atlas.empty()) throw DataError("no atlas path given");
    return load_dataset(cfg.dataset, cfg.atlas);
}

// maps possibly sparse system usage onto contiguous community ids
Partition atlas_partition(const AtlasMap& atlas) {
    Partition p;
    std::vector<int> id(kSystemNames.size(), -1);
    std::size_t next = 0;
    for (System s : atlas.system_of) {
        auto k = std::size_t(s);
        if (id[k] < 0) id[k] = int(next++);
        p.community_of.push_back(std::size_t(id[k]));
    }
    return p;
}

json ranking_json(const SystemRanking& r) {
    auto names = [](const std::vector<System>& v) {
        json a = json::array();
        for (System s : v) a.push_back(system_name(s));
        return a;
    };
    json j;
    j["by_degree"] = names(r.by_degree);
    j["by_strength"] = names(r.by_strength);
    j["by_clustering"] = names(r.by_clustering);
    return j;
}

json agreement_json(const AgreementScores& a) {
    return json{{"completeness", a.completeness},
                {"homogeneity", a.homogeneity},
                {"v_measure", a.v_measure},
                {"fowlkes_mallows", a.fowlkes_mallows},
                {"mutual_information", a.mutual_information}};
}

double mask_recovery_auc(
    const Tensor& sigma,
    const std::vector<std::pair<std::size_t, std::size_t>>& planted) {
    const std::size_t n = sigma.rows;
    std::vector<std::vector<bool>> is_planted(n, std::vector<bool>(n, false));
    for (auto [i, j] : planted) is_planted[i][j] = is_planted[j][i] = true;
    std::vector<double> scores;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            scores.push_back(sigma(i, j));
            labels.push_back(is_planted[i][j] ? 1 : 0);
        }
    return auc(scores, labels);
}

std::vector<std::pair<std::size_t, std::size_t>> load_truth(const std::string& path) {
    json doc = read_json_file(path);
    if (!doc.contains("planted_edges"))
        throw DataError("truth file " + path + " lacks planted_edges");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : doc["planted_edges"])
        out.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    return out;
}

int cmd_train(const RunConfig& cfg) {
    Dataset d = load_input(cfg);
    Split split = split_dataset(d, cfg.ratios, cfg.split_seed);
    TrainResult r = train_backbone(d, split, cfg.backbone);
    EvalResult test = evaluate_backbone(r.params, d, split.test, cfg.backbone);

    fs::create_directories(cfg.out);
    save_checkpoint(r.params, cfg.backbone.scheme, cfg.out + "/checkpoint.json");

    json rep;
    rep["schema_version"] = kSchemaVersion;
    rep["command"] = "train";
    rep["best_epoch"] = r.best_epoch;
    rep["best_val_accuracy"] = r.best_val_accuracy;
    rep["test"] = eval_json(test);
    json log = json::array();
    for (const auto& e : r.log)
        log.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_accuracy", e.val_accuracy}});
    rep["log"] = log;
    write_report(rep, cfg.out + "/train_report.json");
    std::cout << "test accuracy " << test.accuracy << "\n";
    return 0;
}

int cmd_explain(const RunConfig& cfg, const std::string& checkpoint_path,
                const std::string& truth_path) {
    Dataset d = load_input(cfg);
    LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
    TrainConfig bcfg = cfg.backbone;
    bcfg.scheme = ck.scheme;  // features must match the trained model
    Split split = split_dataset(d, cfg.ratios, cfg.split_seed);
    MaskTrainResult r = train_mask(ck.params, d, split, bcfg, cfg.explain);

    fs::create_directories(cfg.out);
    save_mask_matrix(r.mask, cfg.out + "/mask.txt");

    json rep;
    rep["schema_version"] = kSchemaVersion;
    rep["command"] = "explain";
    rep["best_epoch"] = r.best_epoch;
    json log = json::array();
    for (const auto& e : r.log)
        log.push_back({{"epoch", e.epoch},
                       {"train_total", e.train_total},
                       {"val_l_m", e.val_l_m}});
    rep["log"] = log;
    if (!truth_path.empty()) {
        double rec = mask_recovery_auc(r.mask.sigma_matrix(), load_truth(truth_path));
        rep["recovery_auc"] = rec;
        std::cout << "recovery AUC " << rec << "\n";
    }
    write_report(rep, cfg.out + "/explain_report.json");
    return 0;
}

int cmd_pipeline(const RunConfig& cfg) {
    Dataset d = load_input(cfg);
    Split split = split_dataset(d, cfg.ratios, cfg.split_seed);
    ThreeStepResult r = three_step_train(d, split, cfg.backbone, cfg.explain);

    fs::create_directories(cfg.out);
    save_checkpoint(r.step1.params, cfg.backbone.scheme,
                    cfg.out + "/step1_checkpoint.json");
    save_checkpoint(r.step3.params, cfg.backbone.scheme,
                    cfg.out + "/step3_checkpoint.json");
    save_mask_matrix(r.mask.mask, cfg.out + "/mask.txt");

    json rep;
    rep["schema_version"] = kSchemaVersion;
    rep["command"] = "pipeline";
    rep["step1"] = {{"accuracy", r.report.step1_accuracy},
                    {"auc", r.report.step1_auc}};
    rep["step3"] = {{"accuracy", r.report.step3_accuracy},
                    {"auc", r.report.step3_auc}};
    write_report(rep, cfg.out + "/pipeline_report.json");
    std::cout << "step1 accuracy " << r.report.step1_accuracy << ", step3 accuracy "
              << r.report.step3_accuracy << "\n";
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const std::string& mask_path) {
    Dataset d = load_input(cfg);
    Tensor sigma = load_matrix(mask_path);
    const std::size_t n = d.atlas.n;
    if (sigma.rows != n)
        throw DataError("mask is " + sigma.shape_str() + ", atlas has " +
                        std::to_string(n) + " nodes");

    Partition truth = atlas_partition(d.atlas);
    json groups = json::array();
    for (std::size_t label = 0; label < d.num_classes; ++label) {
        Tensor mean(n, n);
        std::size_t count = 0;
        for (const auto& g : d.graphs) {
            if (g.label != label) continue;
            for (std::size_t k = 0; k < mean.size(); ++k)
                mean.data[k] += g.weights.data[k];
            ++count;
        }
        if (count == 0) continue;
        for (double& v : mean.data) v /= double(count);
        Tensor masked = mean;
        for (std::size_t k = 0; k < masked.size(); ++k)
            masked.data[k] *= sigma.data[k];

        ExplanationSubgraph sub = threshold_subgraph(masked, sigma, cfg.rule);
        NodeMetrics metrics = node_metrics(sub);
        SystemRanking ranking = rank_systems(metrics, d.atlas, 3);

        Partition pm = spectral_communities(masked);
        Partition po = spectral_communities(mean);
        AgreementScores am = agreement_scores(pm, truth);
        AgreementScores ao = agreement_scores(po, truth);

        json edges = json::array();
        for (const auto& e : sub.kept_edges)
            edges.push_back({{"i", e.i},
                             {"j", e.j},
                             {"weight", e.weight},
                             {"sigma_m", e.mask},
                             {"abbrev_i", d.atlas.abbreviation[e.i]},
                             {"abbrev_j", d.atlas.abbreviation[e.j]},
                             {"system_i", system_name(d.atlas.system_of[e.i])},
                             {"system_j", system_name(d.atlas.system_of[e.j])}});
        json nodes = json::array();
        for (std::size_t i = 0; i < n; ++i)
            nodes.push_back({{"index", i},
                             {"abbrev", d.atlas.abbreviation[i]},
                             {"system", system_name(d.atlas.system_of[i])},
                             {"degree", metrics.degree[i]},
                             {"strength", metrics.strength[i]},
                             {"clustering", metrics.clustering[i]}});

        json grp;
        grp["label"] = label;
        grp["graphs"] = count;
        grp["edges"] = edges;
        grp["nodes"] = nodes;
        grp["system_ranking"] = ranking_json(ranking);
        grp["communities"] = {{"masked", pm.num_communities()},
                              {"original", po.num_communities()}};
        grp["modularity"] = {{"masked", modularity(masked, pm)},
                             {"original", modularity(mean, po)}};
        grp["agreement"] = {
            {"masked", agreement_json(am)},
            {"original", agreement_json(ao)},
            {"delta",
             json{{"completeness", am.completeness - ao.completeness},
                  {"homogeneity", am.homogeneity - ao.homogeneity},
                  {"v_measure", am.v_measure - ao.v_measure},
                  {"fowlkes_mallows", am.fowlkes_mallows - ao.fowlkes_mallows},
                  {"mutual_information",
                   am.mutual_information - ao.mutual_information}}}};
        groups.push_back(std::move(grp));
    }

    json rep;
    rep["schema_version"] = kSchemaVersion;
    rep["command"] = "analyze";
    rep["groups"] = groups;
    fs::create_directories(cfg.out);
    write_report(rep, cfg.out + "/analysis_report.json");
    std::cout << "analyzed " << groups.size() << " label groups\n";
    return 0;
}

int cmd_synth(std::size_t n, std::size_t per_class, std::size_t planted_count,
              const std::vector<std::string>& planted_flags, double effect,
              double noise_sd, std::uint64_t seed, const std::string& out) {
    std::vector<std::pair<std::size_t, std::size_t>> planted;
    if (planted_flags.empty()) {
        planted = default_planted_edges(n, planted_count);
    } else {
        for (const auto& s : planted_flags) {
            auto comma = s.find(',');
            if (comma == std::string::npos)
                throw DataError("planted edge must be i,j: " + s);
            planted.emplace_back(std::stoul(s.substr(0, comma)),
                                 std::stoul(s.substr(comma + 1)));
        }
    }
    SyntheticCohort cohort =
        generate_synthetic_cohort(n, per_class, planted, effect, noise_sd, seed);

    fs::create_directories(out);
    save_dataset(cohort.dataset, out + "/dataset.json");
    save_atlas(cohort.dataset.atlas, out + "/atlas.txt");
    json truth;
    truth["schema_version"] = kSchemaVersion;
    json edges = json::array();
    for (auto [i, j] : cohort.planted_edges) edges.push_back({i, j});
    truth["planted_edges"] = edges;
    write_report(truth, out + "/truth.json");
    std::cout << "wrote " << cohort.dataset.graphs.size() << " graphs\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"brain-network classifier, edge-mask explainer, and subgraph analyzer"};
    app.require_subcommand(1);

    std::string config_path, dataset_flag, atlas_flag, out_flag;
    std::optional<std::uint64_t> seed_flag;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--dataset", dataset_flag, "dataset file (overrides config)");
        sub->add_option("--atlas", atlas_flag, "atlas file (overrides config)");
        sub->add_option("--out", out_flag, "output directory (overrides config)");
        sub->add_option("--seed", seed_flag, "master seed for split/train/explain");
    };

    auto* train = app.add_subcommand("train", "train the classifier on raw graphs");
    add_common(train);
    auto* explain = app.add_subcommand("explain", "learn the shared edge mask");
    add_common(explain);
    std::string checkpoint_path, truth_path;
    explain->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")
        ->required();
    explain->add_option("--truth", truth_path,
                        "planted-truth file; reports mask recovery AUC");
    auto* pipeline = app.add_subcommand("pipeline", "full three-step run");
    add_common(pipeline);
    auto* analyze = app.add_subcommand("analyze", "analyze an explanation mask");
    add_common(analyze);
    std::string mask_path;
    analyze->add_option("--mask", mask_path, "sigma(M) matrix file")->required();
    std::size_t rule_k = 0;
    double rule_tau = -1.0;
    analyze->add_option("--top-k", rule_k, "keep the k highest-mask edges");
    analyze->add_option("--tau", rule_tau, "keep edges with sigma(M) > tau");

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    std::size_t sy_n = 20, sy_per_class = 30, sy_count = 8;
    double sy_effect = 10.0, sy_noise = 1.0;
    std::uint64_t sy_seed = 1;
    std::string sy_out = ".";
    std::vector<std::string> sy_planted;
    synth->add_option("--nodes", sy_n, "nodes per graph");
    synth->add_option("--per-class", sy_per_class, "graphs per class");
    synth->add_option("--planted-count", sy_count, "planted edges (default pattern)");
    synth->add_option("--planted", sy_planted, "explicit planted edge i,j");
    synth->add_option("--effect", sy_effect, "class-1 weight offset");
    synth->add_option("--noise", sy_noise, "noise standard deviation");
    synth->add_option("--seed", sy_seed, "generator seed");
    synth->add_option("--out", sy_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // uniform usage-error status
    }

    try {
        if (synth->parsed())
            return cmd_synth(sy_n, sy_per_class, sy_count, sy_planted, sy_effect,
                             sy_noise, sy_seed, sy_out);

        RunConfig cfg = load_run_config(config_path);
        if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
        if (!atlas_flag.empty()) cfg.atlas = atlas_flag;
        if (!out_flag.empty()) cfg.out = out_flag;
        if (seed_flag) {
            cfg.split_seed = *seed_flag;
            cfg.backbone.seed = *seed_flag;
            cfg.explain.seed = *seed_flag;
        }
        if (rule_k > 0) cfg.rule = TopKRule{rule_k};
        if (rule_tau >= 0.0) cfg.rule = ThresholdRule{rule_tau};

        if (train->parsed()) return cmd_train(cfg);
        if (explain->parsed()) return cmd_explain(cfg, checkpoint_path, truth_path);
        if (pipeline->parsed()) return cmd_pipeline(cfg);
        if (analyze->parsed()) return cmd_analyze(cfg, mask_path);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
