#include "brainnet/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace brainnet {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor& t) {
    return {{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
    Tensor t(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != t.size())
        throw DataError("checkpoint: tensor data length does not match its shape");
    t.data = std::move(data);
    return t;
}

json mlp_to_json(const Mlp& m) {
    json layers = json::array();
    for (const auto& l : m.layers)
        layers.push_back({{"W", tensor_to_json(l.W->value)},
                          {"b", tensor_to_json(l.b->value)}});
    return layers;
}

Mlp mlp_from_json(const json& j) {
    Mlp m;
    for (const auto& lj : j) {
        Mlp::Layer l;
        l.W = make_leaf(tensor_from_json(lj.at("W")));
        l.b = make_leaf(tensor_from_json(lj.at("b")));
        m.layers.push_back(std::move(l));
    }
    if (m.layers.empty()) throw DataError("checkpoint: empty MLP");
    return m;
}

}  // namespace

void save_checkpoint(const BackboneParams& p, FeatureScheme scheme,
                     const std::string& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["feature_dim"] = p.feature_dim;
    doc["hidden_dim"] = p.hidden_dim;
    doc["num_classes"] = p.num_classes;
    doc["layers"] = p.layers;
    doc["feature_scheme"] = feature_scheme_name(scheme);
    if (p.lift) doc["lift"] = mlp_to_json(*p.lift);
    doc["message_mlp"] = mlp_to_json(p.message_mlp);
    doc["readout_mlp"] = mlp_to_json(p.readout_mlp);
    doc["classifier"] = mlp_to_json(p.classifier);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint file: " + path);
    out << doc.dump(1) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + ": parse failure: " + e.what());
    }
    LoadedCheckpoint ck;
    try {
        ck.params.feature_dim = doc.at("feature_dim").get<std::size_t>();
        ck.params.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
        ck.params.num_classes = doc.at("num_classes").get<std::size_t>();
        ck.params.layers = doc.at("layers").get<std::size_t>();
        ck.scheme = parse_feature_scheme(doc.at("feature_scheme").get<std::string>());
        if (doc.contains("lift")) ck.params.lift = mlp_from_json(doc.at("lift"));
        ck.params.message_mlp = mlp_from_json(doc.at("message_mlp"));
        ck.params.readout_mlp = mlp_from_json(doc.at("readout_mlp"));
        ck.params.classifier = mlp_from_json(doc.at("classifier"));
    } catch (const json::exception& e) {
        throw DataError("checkpoint " + path + ": schema error: " + e.what());
    }
    return ck;
}

void save_mask_matrix(const EdgeMask& mask, const std::string& path) {
    Tensor s = mask.sigma_matrix();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mask file: " + path);
    out << std::setprecision(12);
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.cols; ++j)
            out << (j ? " " : "") << s(i, j);
        out << "\n";
    }
}

Tensor load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        for (char& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("matrix file " + path + " is empty");
    Tensor t(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != t.cols)
            throw DataError("matrix file " + path + ": ragged row " + std::to_string(i));
        for (std::size_t j = 0; j < t.cols; ++j) t(i, j) = rows[i][j];
    }
    if (t.rows != t.cols)
        throw DataError("matrix file " + path + ": expected a square matrix, got " +
                        t.shape_str());
    return t;
}

}  // namespace brainnet
