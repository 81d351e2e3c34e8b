#include "funcgraph/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "funcgraph/ingest.hpp"
#include "funcgraph/io.hpp"

using nlohmann::json;

namespace funcgraph {

namespace {

struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& what) {
        errors.push_back(path + ": " + what);
    }

    void known_keys(const json& j, const std::string& path,
                    const std::vector<std::string>& keys) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return;
        }
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                fail(path.empty() ? key : path + "." + key, "unknown key");
            }
        }
    }

    template <typename T>
    void read(const json& j, const std::string& path, const char* key, T& out) {
        if (!j.contains(key)) return;
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            fail(path.empty() ? key : path + "." + key, "wrong type");
        }
    }
};

void parse_tier(Validator& v, const json& j, const std::string& path, hier::TierConfig& tier) {
    v.known_keys(j, path,
                 {"encoder", "kind", "layers", "hidden_dim", "heads", "epsilon_learnable",
                  "baseline_dim", "head_hidden"});
    v.read(j, path, "encoder", tier.encoder_type);
    std::string kind = gnn::to_string(tier.encoder.kind);
    v.read(j, path, "kind", kind);
    try {
        tier.encoder.kind = gnn::layer_kind_from_string(kind);
    } catch (const ConfigError& e) {
        v.fail(path + ".kind", e.what());
    }
    v.read(j, path, "layers", tier.encoder.num_layers);
    v.read(j, path, "hidden_dim", tier.encoder.hidden_dim);
    v.read(j, path, "heads", tier.encoder.heads);
    v.read(j, path, "epsilon_learnable", tier.encoder.epsilon_learnable);
    v.read(j, path, "baseline_dim", tier.baseline_dim);
    v.read(j, path, "head_hidden", tier.head_hidden);
    if (tier.encoder_type != "gnn" && tier.encoder_type != "baseline") {
        v.fail(path + ".encoder", "expected 'gnn' or 'baseline'");
    }
    if (tier.encoder.num_layers < 1 || tier.encoder.num_layers > 3) {
        v.fail(path + ".layers", "expected 1, 2 or 3");
    }
}

} // namespace

expt::RunConfig AppConfig::run_config() const {
    expt::RunConfig cfg;
    cfg.seed = seed;
    cfg.model = model;
    cfg.train = train;
    cfg.split_fractions = split;
    cfg.top_k = top_k;
    cfg.mask = expt::make_mask(node_mask, edge_mask,
                               edge_mask == "material-flow+assembly" ? material_flow_terms
                                                                     : std::set<std::string>{});
    cfg.mask.material_flow_terms = material_flow_terms;
    return cfg;
}

AppConfig default_config() {
    AppConfig cfg;
    for (auto& tier : cfg.model.tiers) {
        tier.encoder_type = "gnn";
        tier.encoder.kind = gnn::LayerKind::Sage;
        tier.encoder.num_layers = 2;
        tier.encoder.hidden_dim = 128;
        tier.head_hidden = {128};
    }
    return cfg;
}

AppConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    AppConfig cfg = default_config();
    Validator v;
    v.known_keys(j, "",
                 {"dataset", "out_dir", "seed", "n_runs", "workers", "top_k", "split", "train",
                  "model", "ablation", "experiment"});
    v.read(j, "", "dataset", cfg.dataset);
    v.read(j, "", "out_dir", cfg.out_dir);
    v.read(j, "", "seed", cfg.seed);
    v.read(j, "", "n_runs", cfg.n_runs);
    v.read(j, "", "workers", cfg.workers);
    v.read(j, "", "top_k", cfg.top_k);

    if (j.contains("split")) {
        const auto& s = j.at("split");
        v.known_keys(s, "split", {"train", "val", "test"});
        v.read(s, "split", "train", cfg.split[0]);
        v.read(s, "split", "val", cfg.split[1]);
        v.read(s, "split", "test", cfg.split[2]);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        v.known_keys(t, "train", {"max_epochs", "patience", "batch_size", "lr_max", "lr_min"});
        v.read(t, "train", "max_epochs", cfg.train.max_epochs);
        v.read(t, "train", "patience", cfg.train.patience);
        v.read(t, "train", "batch_size", cfg.train.batch_size);
        v.read(t, "train", "lr_max", cfg.train.lr_max);
        v.read(t, "train", "lr_min", cfg.train.lr_min);
        if (cfg.train.patience < 1) v.fail("train.patience", "must be >= 1");
        if (cfg.train.batch_size < 1) v.fail("train.batch_size", "must be >= 1");
        if (cfg.train.max_epochs < 1) v.fail("train.max_epochs", "must be >= 1");
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.is_object() && m.contains("tiers")) {
            Validator check;
            check.known_keys(m, "model", {"hierarchical", "tiers"});
            v.errors.insert(v.errors.end(), check.errors.begin(), check.errors.end());
            v.read(m, "model", "hierarchical", cfg.model.hierarchical);
            const auto& tiers = m.at("tiers");
            if (!tiers.is_array() || tiers.size() != 3) {
                v.fail("model.tiers", "expected an array of 3 tier descriptors");
            } else {
                for (std::size_t k = 0; k < 3; ++k) {
                    parse_tier(v, tiers[k], "model.tiers[" + std::to_string(k) + "]",
                               cfg.model.tiers[k]);
                }
            }
        } else {
            Validator check;
            check.known_keys(m, "model",
                             {"hierarchical", "encoder", "kind", "layers", "hidden_dim", "heads",
                              "epsilon_learnable", "baseline_dim", "head_hidden"});
            v.errors.insert(v.errors.end(), check.errors.begin(), check.errors.end());
            v.read(m, "model", "hierarchical", cfg.model.hierarchical);
            hier::TierConfig shared = cfg.model.tiers[0];
            json m_no_flag = m;
            m_no_flag.erase("hierarchical");
            parse_tier(v, m_no_flag, "model", shared);
            if (!m.contains("head_hidden")) {
                shared.head_hidden = {shared.encoder_type == "gnn" ? shared.encoder.hidden_dim
                                                                   : shared.baseline_dim};
            }
            for (auto& tier : cfg.model.tiers) tier = shared;
        }
    }
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        v.known_keys(a, "ablation", {"node_mask", "edge_mask", "material_flow_terms"});
        v.read(a, "ablation", "node_mask", cfg.node_mask);
        v.read(a, "ablation", "edge_mask", cfg.edge_mask);
        std::vector<std::string> terms(cfg.material_flow_terms.begin(),
                                       cfg.material_flow_terms.end());
        v.read(a, "ablation", "material_flow_terms", terms);
        cfg.material_flow_terms = {terms.begin(), terms.end()};
    }
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        v.known_keys(e, "experiment",
                     {"compare_independent", "baselines", "ablations", "ablation_runs", "sweep"});
        if (e.contains("sweep")) {
            const auto& s = e.at("sweep");
            v.known_keys(s, "experiment.sweep", {"kinds", "layers", "hidden_dims"});
            v.read(s, "experiment.sweep", "kinds", cfg.sweep_kinds);
            v.read(s, "experiment.sweep", "layers", cfg.sweep_layers);
            v.read(s, "experiment.sweep", "hidden_dims", cfg.sweep_dims);
            for (const auto& kind : cfg.sweep_kinds) {
                try {
                    gnn::layer_kind_from_string(kind);
                } catch (const ConfigError& err) {
                    v.fail("experiment.sweep.kinds", err.what());
                }
            }
            if (!cfg.sweep_kinds.empty()) {
                if (cfg.sweep_layers.empty()) cfg.sweep_layers = {1, 2, 3};
                if (cfg.sweep_dims.empty()) cfg.sweep_dims = {64, 128, 256};
            }
        }
        v.read(e, "experiment", "compare_independent", cfg.compare_independent);
        v.read(e, "experiment", "baselines", cfg.baselines);
        v.read(e, "experiment", "ablation_runs", cfg.ablation_runs);
        if (e.contains("ablations")) {
            if (!e.at("ablations").is_array()) {
                v.fail("experiment.ablations", "expected an array of [node_mask, edge_mask] pairs");
            } else {
                for (const auto& pair : e.at("ablations")) {
                    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
                        !pair[1].is_string()) {
                        v.fail("experiment.ablations", "each entry must be [node_mask, edge_mask]");
                        break;
                    }
                    cfg.ablations.emplace_back(pair[0].get<std::string>(),
                                               pair[1].get<std::string>());
                }
            }
        }
        for (const auto& b : cfg.baselines) {
            if (b != "linear" && b != "mlp") v.fail("experiment.baselines", "unknown baseline '" + b + "'");
        }
    }

    if (cfg.n_runs < 1) v.fail("n_runs", "must be >= 1");
    if (cfg.workers < 1) v.fail("workers", "must be >= 1");
    if (cfg.top_k < 1) v.fail("top_k", "must be >= 1");
    const double frac_sum = cfg.split[0] + cfg.split[1] + cfg.split[2];
    if (std::abs(frac_sum - 1.0) > 1e-9) v.fail("split", "fractions must sum to 1");
    // masks validated eagerly so bad names fail before any work
    try {
        expt::make_mask(cfg.node_mask, cfg.edge_mask, cfg.material_flow_terms);
    } catch (const ConfigError& e) {
        v.fail("ablation", e.what());
    }
    for (const auto& [nm, em] : cfg.ablations) {
        try {
            expt::make_mask(nm, em, cfg.material_flow_terms);
        } catch (const ConfigError& e) {
            v.fail("experiment.ablations", e.what());
        }
    }

    if (!v.errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : v.errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

AppConfig load_config_file(const std::string& path) {
    return parse_config(read_file(path));
}

hier::ModelConfig method_model(const AppConfig& base, const std::string& method) {
    hier::ModelConfig model = base.model;
    if (method == "hierarchical") {
        model.hierarchical = true;
    } else if (method == "independent") {
        model.hierarchical = false;
    } else if (method == "baseline-linear" || method == "baseline-mlp") {
        for (auto& tier : model.tiers) {
            tier.encoder_type = "baseline";
            tier.baseline_dim = tier.encoder.hidden_dim;
            tier.head_hidden = method == "baseline-mlp"
                                   ? std::vector<std::size_t>{tier.baseline_dim}
                                   : std::vector<std::size_t>{};
        }
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }
    return model;
}

expt::Dataset load_dataset(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw IoError("dataset path '" + path + "' does not exist");

    if (fs::is_directory(path)) {
        const std::string graphs_path = (fs::path(path) / "graphs.jsonl").string();
        const std::string vocab_path = (fs::path(path) / "vocab.json").string();
        expt::Dataset data;
        data.graphs = load_corpus(graphs_path);
        if (fs::exists(vocab_path)) {
            data.vocab = load_vocabularies(vocab_path);
        } else {
            data.vocab = build_vocabularies(data.graphs);
        }
        return data;
    }

    const std::string ext = fs::path(path).extension().string();
    if (ext == ".csv") {
        BuildOptions opts;
        opts.drop_incomplete = true;
        auto built = build_graphs(parse_rows_file(path), opts);
        return expt::Dataset::prepare(std::move(built.graphs));
    }
    return expt::Dataset::prepare(load_corpus(path));
}

} // namespace funcgraph
