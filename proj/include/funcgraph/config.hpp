#pragma once

#include <string>
#include <vector>

#include "funcgraph/experiment.hpp"

namespace funcgraph {

/// Resolved application configuration: one human-editable JSON document,
/// every key defaulted except the dataset path. Unknown keys are rejected
/// and all validation problems are reported in one pass.
struct AppConfig {
    std::string dataset; // CSV export, graphs.jsonl, or an ingested directory
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    int n_runs = 20;
    int workers = 1;
    std::size_t top_k = 3;
    std::array<double, 3> split = {0.6, 0.1, 0.3};
    expt::TrainSettings train;
    hier::ModelConfig model;
    std::string node_mask = "all";
    std::string edge_mask = "all";
    std::set<std::string> material_flow_terms = {"solid", "liquid", "granular"};

    // experiment command
    bool compare_independent = true;
    std::vector<std::string> baselines; // subset of {"linear", "mlp"}
    std::vector<std::pair<std::string, std::string>> ablations;
    int ablation_runs = 0; // 0: use n_runs

    // optional architecture sweep, selected on validation micro-F1
    std::vector<std::string> sweep_kinds;
    std::vector<std::size_t> sweep_layers;
    std::vector<std::size_t> sweep_dims;

    expt::RunConfig run_config() const;
};

AppConfig default_config();
AppConfig parse_config(const std::string& json_text);
AppConfig load_config_file(const std::string& path);

/// Builds the model config for a named method on top of a base config:
/// "hierarchical", "independent", "baseline-linear", "baseline-mlp".
hier::ModelConfig method_model(const AppConfig& base, const std::string& method);

/// Loads a corpus from a CSV export, a graphs.jsonl file, or a directory
/// produced by the ingest command (graphs.jsonl + vocab.json).
expt::Dataset load_dataset(const std::string& path);

} // namespace funcgraph
