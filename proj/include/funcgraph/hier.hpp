#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "funcgraph/gnn.hpp"

namespace funcgraph::hier {

/// Per-node class probabilities of one tier.
struct TierPrediction {
    num::Tensor logits; // n x C
    num::Tensor probs;  // n x C, rows sum to 1
    std::vector<int> predicted;
};

/// Common interface of the per-tier node encoders, so the GNN stacks and
/// the flat feed-forward baselines are interchangeable behind the heads.
class NodeEncoder {
public:
    virtual ~NodeEncoder() = default;
    virtual num::Tensor encode(const EncodedGraph& g, const gnn::GraphTopology& topo,
                               num::Rng* dropout_rng) const = 0;
    virtual std::size_t output_dim() const = 0;
    virtual std::vector<num::Tensor> params() const = 0;
    virtual std::vector<std::string> param_names() const = 0;
};

class GnnNodeEncoder : public NodeEncoder {
public:
    GnnNodeEncoder(const gnn::EncoderConfig& config, std::size_t d_x, std::size_t d_e,
                   num::Rng& rng)
        : encoder_(config, d_x, d_e, rng) {}
    num::Tensor encode(const EncodedGraph& g, const gnn::GraphTopology& topo,
                       num::Rng* dropout_rng) const override {
        return encoder_.encode(g.node_features, topo, g.edge_features, dropout_rng);
    }
    std::size_t output_dim() const override { return encoder_.output_dim(); }
    std::vector<num::Tensor> params() const override { return encoder_.params(); }
    std::vector<std::string> param_names() const override { return encoder_.param_names(); }

private:
    gnn::GnnEncoder encoder_;
};

/// Flat per-node representation for the feed-forward baselines:
/// z_v = P_n x_v + sum_{(u->v)} (P_n x_u) .* (P_e e_uv).
class BaselineEncoder : public NodeEncoder {
public:
    BaselineEncoder(std::size_t d_x, std::size_t d_e, std::size_t dim, num::Rng& rng);
    num::Tensor encode(const EncodedGraph& g, const gnn::GraphTopology& topo,
                       num::Rng* dropout_rng) const override;
    std::size_t output_dim() const override { return node_proj.out_dim(); }
    std::vector<num::Tensor> params() const override;
    std::vector<std::string> param_names() const override;

    num::LinearLayer node_proj;
    num::LinearLayer edge_proj;
};

/// Free-standing form of the baseline feature map (the encoder above in
/// functional clothing, handy for tests).
num::Tensor baseline_features(const EncodedGraph& g, const num::LinearLayer& node_proj,
                              const num::LinearLayer& edge_proj);

struct TierConfig {
    std::string encoder_type = "gnn"; // "gnn" | "baseline"
    gnn::EncoderConfig encoder;
    std::size_t baseline_dim = 64;          // projection width of the baseline encoder
    std::vector<std::size_t> head_hidden;   // MLP head hidden widths; empty = linear head
};

struct ModelConfig {
    std::array<TierConfig, 3> tiers;
    /// Hierarchical wiring feeds each head the predecessor tier's signal;
    /// independent mode trains three disjoint stacks.
    bool hierarchical = true;
};

/// Result of a teacher-forced pass over one graph.
struct GraphForward {
    num::Tensor loss; // 1x1, sum of the three tier losses
    std::array<TierPrediction, 3> tiers;
    std::array<num::Tensor, 3> head_inputs; // [H^k || predecessor signal]
};

/// Three encoders and three classifier heads with tier chaining. During
/// training the predecessor signal is the ground-truth one-hot (teacher
/// forcing); at inference it is the predicted probability distribution.
class HierModel {
public:
    HierModel(const ModelConfig& config, std::size_t d_x, std::size_t d_e,
              const std::array<std::size_t, 3>& n_classes, num::Rng& rng);

    GraphForward forward_train(const EncodedGraph& g, const gnn::GraphTopology& topo,
                               const std::array<std::vector<double>, 3>& class_weights,
                               num::Rng* dropout_rng) const;

    std::array<TierPrediction, 3> forward_infer(const EncodedGraph& g,
                                                const gnn::GraphTopology& topo) const;

    /// Mean over the batch of per-graph summed tier losses.
    num::Tensor batch_loss(const std::vector<const EncodedGraph*>& graphs,
                           const std::vector<const gnn::GraphTopology*>& topos,
                           const std::array<std::vector<double>, 3>& class_weights,
                           num::Rng* dropout_rng) const;

    std::vector<num::Tensor> params() const;
    std::vector<std::string> param_names() const;

    bool hierarchical() const { return config_.hierarchical; }
    const std::array<std::size_t, 3>& n_classes() const { return n_classes_; }
    const ModelConfig& config() const { return config_; }

private:
    struct Tier {
        std::unique_ptr<NodeEncoder> encoder;
        num::MLPHead head;
    };

    num::Tensor head_input(std::size_t tier, const num::Tensor& h,
                           const num::Tensor& predecessor) const;

    ModelConfig config_;
    std::array<std::size_t, 3> n_classes_;
    std::array<Tier, 3> tiers_;
};

/// n x C one-hot rows from integer labels.
num::Tensor one_hot(const std::vector<int>& labels, std::size_t n_classes);

/// Hit indicator per row: ground truth among the k highest-probability
/// classes (ties broken toward the lower class index).
std::vector<char> top_k_hits(const num::Tensor& probs, const std::vector<int>& truth,
                             std::size_t k);
double top_k_rate(const num::Tensor& probs, const std::vector<int>& truth, std::size_t k);

} // namespace funcgraph::hier
