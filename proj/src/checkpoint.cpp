#include "funcgraph/checkpoint.hpp"

#include <json.hpp>

#include "funcgraph/io.hpp"

using nlohmann::json;

namespace funcgraph {

namespace {

json tier_to_json(const hier::TierConfig& t) {
    return json{{"encoder_type", t.encoder_type},
                {"kind", gnn::to_string(t.encoder.kind)},
                {"layers", t.encoder.num_layers},
                {"hidden_dim", t.encoder.hidden_dim},
                {"heads", t.encoder.heads},
                {"epsilon_learnable", t.encoder.epsilon_learnable},
                {"baseline_dim", t.baseline_dim},
                {"head_hidden", t.head_hidden}};
}

hier::TierConfig tier_from_json(const json& j) {
    hier::TierConfig t;
    t.encoder_type = j.at("encoder_type").get<std::string>();
    t.encoder.kind = gnn::layer_kind_from_string(j.at("kind").get<std::string>());
    t.encoder.num_layers = j.at("layers").get<std::size_t>();
    t.encoder.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    t.encoder.heads = j.at("heads").get<std::size_t>();
    t.encoder.epsilon_learnable = j.at("epsilon_learnable").get<bool>();
    t.baseline_dim = j.at("baseline_dim").get<std::size_t>();
    t.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
    return t;
}

json model_json(const hier::ModelConfig& config, const std::array<std::size_t, 3>& n_classes) {
    json j;
    j["hierarchical"] = config.hierarchical;
    j["tiers"] = json::array();
    for (const auto& t : config.tiers) j["tiers"].push_back(tier_to_json(t));
    j["n_classes"] = n_classes;
    return j;
}

std::pair<hier::ModelConfig, std::array<std::size_t, 3>> model_from(const json& j) {
    hier::ModelConfig config;
    config.hierarchical = j.at("hierarchical").get<bool>();
    const auto& tiers = j.at("tiers");
    if (tiers.size() != 3) throw IoError("model descriptor must have 3 tiers");
    for (std::size_t k = 0; k < 3; ++k) config.tiers[k] = tier_from_json(tiers[k]);
    std::array<std::size_t, 3> n_classes{};
    const auto& nc = j.at("n_classes");
    if (nc.size() != 3) throw IoError("model descriptor must have 3 class counts");
    for (std::size_t k = 0; k < 3; ++k) n_classes[k] = nc[k].get<std::size_t>();
    return {config, n_classes};
}

} // namespace

std::string model_config_to_json(const hier::ModelConfig& config,
                                 const std::array<std::size_t, 3>& n_classes) {
    return model_json(config, n_classes).dump();
}

std::pair<hier::ModelConfig, std::array<std::size_t, 3>> model_config_from_json(
    const std::string& text) {
    try {
        return model_from(json::parse(text));
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid model descriptor: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const hier::HierModel& model,
                     const num::AdamState& optimizer, const CheckpointMeta& meta) {
    const auto params = model.params();
    const auto names = model.param_names();
    if (params.size() != names.size()) throw ShapeError("checkpoint: parameter naming mismatch");

    json j;
    j["version"] = kCheckpointVersion;
    j["vocab_hash"] = meta.vocab_hash;
    j["d_x"] = meta.d_x;
    j["d_e"] = meta.d_e;
    j["node_mask"] = meta.node_mask;
    j["edge_mask"] = meta.edge_mask;
    j["material_flow_terms"] = meta.material_flow_terms;
    j["model"] = model_json(model.config(), model.n_classes());
    j["adam_step"] = optimizer.step;

    json params_json = json::object();
    const bool with_moments = optimizer.m.size() == params.size();
    for (std::size_t i = 0; i < params.size(); ++i) {
        json p;
        p["shape"] = {params[i].rows(), params[i].cols()};
        p["data"] = params[i].data();
        if (with_moments) {
            p["m"] = optimizer.m[i];
            p["v"] = optimizer.v[i];
        }
        params_json[names[i]] = std::move(p);
    }
    j["params"] = std::move(params_json);
    write_file_atomic(path, j.dump());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid checkpoint: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw IoError("unsupported checkpoint version");
        }
        LoadedCheckpoint out;
        out.meta.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
        out.meta.d_x = j.at("d_x").get<std::size_t>();
        out.meta.d_e = j.at("d_e").get<std::size_t>();
        out.meta.node_mask = j.at("node_mask").get<std::string>();
        out.meta.edge_mask = j.at("edge_mask").get<std::string>();
        out.meta.material_flow_terms =
            j.at("material_flow_terms").get<std::vector<std::string>>();
        auto [config, n_classes] = model_from(j.at("model"));

        num::Rng rng(0); // initial values are overwritten below
        out.model =
            std::make_unique<hier::HierModel>(config, out.meta.d_x, out.meta.d_e, n_classes, rng);

        auto params = out.model->params();
        const auto names = out.model->param_names();
        const auto& params_json = j.at("params");
        const bool with_moments =
            !params_json.empty() && params_json.begin().value().contains("m");
        out.optimizer.step = j.at("adam_step").get<long>();
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!params_json.contains(names[i])) {
                throw IoError("checkpoint missing parameter '" + names[i] + "'");
            }
            const auto& p = params_json.at(names[i]);
            const auto shape = p.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2 || shape[0] != params[i].rows() ||
                shape[1] != params[i].cols()) {
                throw IoError("checkpoint parameter '" + names[i] + "' has wrong shape");
            }
            auto values = p.at("data").get<std::vector<double>>();
            if (values.size() != params[i].size()) {
                throw IoError("checkpoint parameter '" + names[i] + "' has wrong size");
            }
            params[i].raw() = std::move(values);
            if (with_moments) {
                out.optimizer.m.push_back(p.at("m").get<std::vector<double>>());
                out.optimizer.v.push_back(p.at("v").get<std::vector<double>>());
            }
        }
        return out;
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint missing field: ") + e.what());
    }
}

} // namespace funcgraph
