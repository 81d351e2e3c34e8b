#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "funcgraph/experiment.hpp"
#include "funcgraph/hier.hpp"

namespace funcgraph {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
    std::uint64_t vocab_hash = 0;
    std::size_t d_x = 0;
    std::size_t d_e = 0;
    std::string node_mask = "all";
    std::string edge_mask = "all";
    std::vector<std::string> material_flow_terms;
};

/// JSON map of parameter path -> shape + row-major values + Adam moments,
/// with a versioned header, the model descriptor, the feature mask and the
/// vocabulary hash.
void save_checkpoint(const std::string& path, const hier::HierModel& model,
                     const num::AdamState& optimizer, const CheckpointMeta& meta);

struct LoadedCheckpoint {
    std::unique_ptr<hier::HierModel> model;
    num::AdamState optimizer;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Model descriptor serialization (shared with the checkpoint format).
std::string model_config_to_json(const hier::ModelConfig& config,
                                 const std::array<std::size_t, 3>& n_classes);
std::pair<hier::ModelConfig, std::array<std::size_t, 3>> model_config_from_json(
    const std::string& text);

} // namespace funcgraph
