#pragma once

#include <memory>
#include <string>
#include <vector>

#include "funcgraph/graph.hpp"
#include "funcgraph/nn.hpp"

namespace funcgraph::gnn {

enum class LayerKind { Sage, Gcn, Gat, Gin };

LayerKind layer_kind_from_string(const std::string& s);
std::string to_string(LayerKind kind);

struct EncoderConfig {
    LayerKind kind = LayerKind::Sage;
    std::size_t num_layers = 2;  // 1..3
    std::size_t hidden_dim = 128; // 64 / 128 / 256
    std::size_t heads = 1;        // GAT only; concat combine
    bool epsilon_learnable = false; // GIN only
};

/// Aggregation indices and normalization coefficients of one encoded graph,
/// shared by every layer and tier. In-degrees count parallel edges.
struct GraphTopology {
    std::size_t n = 0;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<double> inv_in_degree; // 1/in_deg, 0 for nodes without in-edges
    std::vector<double> gcn_edge_coeff; // 1/sqrt(dhat_src * dhat_dst), dhat = in_deg + 1
    std::vector<double> gcn_self_coeff; // 1/dhat_v

    static GraphTopology build(const EncodedGraph& g);
};

/// Message with edge augmentation: m_{u->v} = h_u + E W_e (shape-preserving).
num::Tensor edge_augmented_messages(const num::Tensor& h, const GraphTopology& topo,
                                    const num::Tensor& edge_features, const num::Tensor& w_e);

class GnnLayer {
public:
    virtual ~GnnLayer() = default;
    virtual num::Tensor forward(const num::Tensor& h, const GraphTopology& topo,
                                const num::Tensor& edge_features) const = 0;
    virtual std::vector<num::Tensor> params() const = 0;
    virtual std::vector<std::string> param_names() const = 0;

    num::Tensor w_e; // d_e x d_in edge augmentation
};

/// h'_v = W_self h_v + W_nbr mean_{(u->v)} m_{u->v}
class SageLayer : public GnnLayer {
public:
    SageLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, num::Rng& rng);
    num::Tensor forward(const num::Tensor& h, const GraphTopology& topo,
                        const num::Tensor& edge_features) const override;
    std::vector<num::Tensor> params() const override;
    std::vector<std::string> param_names() const override;

    num::Tensor w_self;
    num::Tensor w_nbr;
};

/// h'_v = W sum_{(u->v), self-loops added} m_{u->v} / sqrt(dhat_u dhat_v)
class GcnLayer : public GnnLayer {
public:
    GcnLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, num::Rng& rng);
    num::Tensor forward(const num::Tensor& h, const GraphTopology& topo,
                        const num::Tensor& edge_features) const override;
    std::vector<num::Tensor> params() const override;
    std::vector<std::string> param_names() const override;

    num::Tensor w;
};

/// Attention over in-neighbors plus a self-loop; multi-head with concat.
class GatLayer : public GnnLayer {
public:
    GatLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, std::size_t heads,
             num::Rng& rng);
    num::Tensor forward(const num::Tensor& h, const GraphTopology& topo,
                        const num::Tensor& edge_features) const override;
    std::vector<num::Tensor> params() const override;
    std::vector<std::string> param_names() const override;

    /// Attention coefficients per encoded edge plus self-loops; rows are
    /// ordered [edges..., self-loops...]. Exposed for inspection in tests.
    num::Tensor attention(const num::Tensor& h, const GraphTopology& topo,
                          const num::Tensor& edge_features, std::size_t head) const;

    struct Head {
        num::Tensor w;     // d_in x d_head
        num::Tensor a_dst; // d_head x 1
        num::Tensor a_src; // d_head x 1
    };
    std::vector<Head> heads;
    double negative_slope = 0.2;
};

/// h'_v = MLP2((1 + eps) h_v + sum_{(u->v)} m_{u->v})
class GinLayer : public GnnLayer {
public:
    GinLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, bool epsilon_learnable,
             num::Rng& rng);
    num::Tensor forward(const num::Tensor& h, const GraphTopology& topo,
                        const num::Tensor& edge_features) const override;
    std::vector<num::Tensor> params() const override;
    std::vector<std::string> param_names() const override;

    num::Tensor epsilon; // 1x1
    bool epsilon_learnable = false;
    num::LinearLayer lin1;
    num::LinearLayer lin2;
    double negative_slope = 0.2;
};

/// Stack of 1-3 message-passing layers with LeakyReLU(0.2) + dropout 0.1
/// between layers (none after the last).
class GnnEncoder {
public:
    GnnEncoder() = default;
    GnnEncoder(const EncoderConfig& config, std::size_t d_x, std::size_t d_e, num::Rng& rng);

    num::Tensor encode(const num::Tensor& node_features, const GraphTopology& topo,
                       const num::Tensor& edge_features, num::Rng* dropout_rng) const;
    std::vector<num::Tensor> params() const;
    std::vector<std::string> param_names() const;

    const EncoderConfig& config() const { return config_; }
    std::size_t output_dim() const { return config_.hidden_dim; }
    const std::vector<std::unique_ptr<GnnLayer>>& layers() const { return layers_; }

private:
    EncoderConfig config_;
    std::vector<std::unique_ptr<GnnLayer>> layers_;
    double negative_slope_ = 0.2;
    double dropout_p_ = 0.1;
};

} // namespace funcgraph::gnn
