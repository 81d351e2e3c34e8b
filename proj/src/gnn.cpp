#include "funcgraph/gnn.hpp"

#include <cmath>

namespace funcgraph::gnn {

using num::Tensor;

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "sage") return LayerKind::Sage;
    if (s == "gcn") return LayerKind::Gcn;
    if (s == "gat") return LayerKind::Gat;
    if (s == "gin") return LayerKind::Gin;
    throw ConfigError("unknown GNN layer kind '" + s + "' (expected sage|gcn|gat|gin)");
}

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Sage: return "sage";
        case LayerKind::Gcn: return "gcn";
        case LayerKind::Gat: return "gat";
        case LayerKind::Gin: return "gin";
    }
    return "?";
}

GraphTopology GraphTopology::build(const EncodedGraph& g) {
    GraphTopology t;
    t.n = g.num_nodes();
    const std::size_t m = g.num_edges();
    t.src.reserve(m);
    t.dst.reserve(m);
    std::vector<double> in_degree(t.n, 0.0);
    for (const auto& [s, d] : g.edge_index) {
        t.src.push_back(s);
        t.dst.push_back(d);
        in_degree[d] += 1.0;
    }
    t.inv_in_degree.resize(t.n);
    t.gcn_self_coeff.resize(t.n);
    for (std::size_t v = 0; v < t.n; ++v) {
        t.inv_in_degree[v] = in_degree[v] > 0.0 ? 1.0 / in_degree[v] : 0.0;
        t.gcn_self_coeff[v] = 1.0 / (in_degree[v] + 1.0);
    }
    t.gcn_edge_coeff.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
        t.gcn_edge_coeff[e] =
            1.0 / std::sqrt((in_degree[t.src[e]] + 1.0) * (in_degree[t.dst[e]] + 1.0));
    }
    return t;
}

Tensor edge_augmented_messages(const Tensor& h, const GraphTopology& topo,
                               const Tensor& edge_features, const Tensor& w_e) {
    return num::add(num::gather_rows(h, topo.src), num::matmul(edge_features, w_e));
}

// --- SAGE -------------------------------------------------------------------

SageLayer::SageLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, num::Rng& rng) {
    w_e = num::xavier_uniform(rng, d_e, d_in);
    w_self = num::xavier_uniform(rng, d_in, d_out);
    w_nbr = num::xavier_uniform(rng, d_in, d_out);
}

Tensor SageLayer::forward(const Tensor& h, const GraphTopology& topo,
                          const Tensor& edge_features) const {
    Tensor self_term = num::matmul(h, w_self);
    if (topo.src.empty()) return self_term;
    Tensor msgs = edge_augmented_messages(h, topo, edge_features, w_e);
    Tensor mean_in =
        num::row_scale(num::scatter_sum_rows(msgs, topo.dst, topo.n), topo.inv_in_degree);
    return num::add(self_term, num::matmul(mean_in, w_nbr));
}

std::vector<Tensor> SageLayer::params() const { return {w_e, w_self, w_nbr}; }
std::vector<std::string> SageLayer::param_names() const { return {"w_e", "w_self", "w_nbr"}; }

// --- GCN --------------------------------------------------------------------

GcnLayer::GcnLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, num::Rng& rng) {
    w_e = num::xavier_uniform(rng, d_e, d_in);
    w = num::xavier_uniform(rng, d_in, d_out);
}

Tensor GcnLayer::forward(const Tensor& h, const GraphTopology& topo,
                         const Tensor& edge_features) const {
    Tensor agg = num::row_scale(h, topo.gcn_self_coeff); // self-loop term h_v / dhat_v
    if (!topo.src.empty()) {
        Tensor msgs = edge_augmented_messages(h, topo, edge_features, w_e);
        Tensor scaled = num::row_scale(msgs, topo.gcn_edge_coeff);
        agg = num::add(agg, num::scatter_sum_rows(scaled, topo.dst, topo.n));
    }
    return num::matmul(agg, w);
}

std::vector<Tensor> GcnLayer::params() const { return {w_e, w}; }
std::vector<std::string> GcnLayer::param_names() const { return {"w_e", "w"}; }

// --- GAT --------------------------------------------------------------------

GatLayer::GatLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, std::size_t n_heads,
                   num::Rng& rng) {
    if (n_heads == 0 || d_out % n_heads != 0) {
        throw ConfigError("gat: hidden dim must be divisible by the head count");
    }
    w_e = num::xavier_uniform(rng, d_e, d_in);
    const std::size_t d_head = d_out / n_heads;
    for (std::size_t i = 0; i < n_heads; ++i) {
        Head head;
        head.w = num::xavier_uniform(rng, d_in, d_head);
        head.a_dst = num::xavier_uniform(rng, d_head, 1);
        head.a_src = num::xavier_uniform(rng, d_head, 1);
        heads.push_back(std::move(head));
    }
}

namespace {

// Rows [0, m) are real edges; rows [m, m+n) are per-node self-loops.
std::vector<std::size_t> extended_segments(const GraphTopology& topo) {
    std::vector<std::size_t> seg = topo.dst;
    seg.reserve(topo.dst.size() + topo.n);
    for (std::size_t v = 0; v < topo.n; ++v) seg.push_back(v);
    return seg;
}

Tensor gat_head_scores(const GatLayer::Head& head, const Tensor& wh, const Tensor& wm,
                       const GraphTopology& topo, double slope) {
    Tensor s_dst_nodes = num::matmul(wh, head.a_dst); // n x 1
    Tensor s_src_self = num::matmul(wh, head.a_src);  // n x 1
    Tensor self_scores = num::add(s_dst_nodes, s_src_self);
    if (topo.dst.empty()) return num::leaky_relu(self_scores, slope);
    Tensor edge_scores = num::add(num::gather_rows(s_dst_nodes, topo.dst),
                                  num::matmul(wm, head.a_src)); // m x 1
    return num::leaky_relu(num::concat_rows(edge_scores, self_scores), slope);
}

} // namespace

Tensor GatLayer::attention(const Tensor& h, const GraphTopology& topo,
                           const Tensor& edge_features, std::size_t head_idx) const {
    const Head& head = heads.at(head_idx);
    Tensor wh = num::matmul(h, head.w);
    Tensor wm;
    if (!topo.src.empty()) {
        Tensor msgs = edge_augmented_messages(h, topo, edge_features, w_e);
        wm = num::matmul(msgs, head.w);
    }
    Tensor scores = gat_head_scores(head, wh, wm, topo, negative_slope);
    return num::segment_softmax(scores, extended_segments(topo), topo.n);
}

Tensor GatLayer::forward(const Tensor& h, const GraphTopology& topo,
                         const Tensor& edge_features) const {
    Tensor msgs;
    if (!topo.src.empty()) msgs = edge_augmented_messages(h, topo, edge_features, w_e);
    const auto seg = extended_segments(topo);

    Tensor out;
    for (const Head& head : heads) {
        Tensor wh = num::matmul(h, head.w);
        Tensor wm = msgs.defined() ? num::matmul(msgs, head.w) : Tensor();
        Tensor scores = gat_head_scores(head, wh, wm, topo, negative_slope);
        Tensor alpha = num::segment_softmax(scores, seg, topo.n);
        Tensor ext = wm.defined() ? num::concat_rows(wm, wh) : wh;
        Tensor weighted = num::mul_rows(ext, alpha);
        Tensor head_out = num::scatter_sum_rows(weighted, seg, topo.n);
        out = out.defined() ? num::concat_cols(out, head_out) : head_out;
    }
    return out;
}

std::vector<Tensor> GatLayer::params() const {
    std::vector<Tensor> p = {w_e};
    for (const auto& head : heads) {
        p.push_back(head.w);
        p.push_back(head.a_dst);
        p.push_back(head.a_src);
    }
    return p;
}

std::vector<std::string> GatLayer::param_names() const {
    std::vector<std::string> names = {"w_e"};
    for (std::size_t i = 0; i < heads.size(); ++i) {
        const std::string prefix = "head" + std::to_string(i) + ".";
        names.push_back(prefix + "w");
        names.push_back(prefix + "a_dst");
        names.push_back(prefix + "a_src");
    }
    return names;
}

// --- GIN --------------------------------------------------------------------

GinLayer::GinLayer(std::size_t d_in, std::size_t d_out, std::size_t d_e, bool eps_learnable,
                   num::Rng& rng)
    : epsilon_learnable(eps_learnable), lin1(d_in, d_out, rng), lin2(d_out, d_out, rng) {
    w_e = num::xavier_uniform(rng, d_e, d_in);
    epsilon = Tensor::zeros(1, 1, eps_learnable);
}

Tensor GinLayer::forward(const Tensor& h, const GraphTopology& topo,
                         const Tensor& edge_features) const {
    Tensor scaled_self;
    if (epsilon_learnable) {
        Tensor eps_col = num::matmul(Tensor::full(h.rows(), 1, 1.0), epsilon); // n x 1
        scaled_self = num::add(h, num::mul_rows(h, eps_col));
    } else {
        scaled_self = num::scale(h, 1.0 + epsilon.item());
    }
    Tensor combined = scaled_self;
    if (!topo.src.empty()) {
        Tensor msgs = edge_augmented_messages(h, topo, edge_features, w_e);
        combined = num::add(combined, num::scatter_sum_rows(msgs, topo.dst, topo.n));
    }
    return lin2.forward(num::leaky_relu(lin1.forward(combined), negative_slope));
}

std::vector<Tensor> GinLayer::params() const {
    std::vector<Tensor> p = {w_e};
    if (epsilon_learnable) p.push_back(epsilon);
    p.push_back(lin1.W);
    p.push_back(lin1.b);
    p.push_back(lin2.W);
    p.push_back(lin2.b);
    return p;
}

std::vector<std::string> GinLayer::param_names() const {
    std::vector<std::string> names = {"w_e"};
    if (epsilon_learnable) names.push_back("eps");
    names.insert(names.end(), {"lin1.w", "lin1.b", "lin2.w", "lin2.b"});
    return names;
}

// --- encoder -----------------------------------------------------------------

GnnEncoder::GnnEncoder(const EncoderConfig& config, std::size_t d_x, std::size_t d_e,
                       num::Rng& rng)
    : config_(config) {
    if (config.num_layers < 1 || config.num_layers > 3) {
        throw ConfigError("encoder: num_layers must be 1, 2 or 3");
    }
    if (config.hidden_dim == 0) throw ConfigError("encoder: hidden_dim must be positive");
    for (std::size_t i = 0; i < config.num_layers; ++i) {
        const std::size_t d_in = i == 0 ? d_x : config.hidden_dim;
        const std::size_t d_out = config.hidden_dim;
        switch (config.kind) {
            case LayerKind::Sage:
                layers_.push_back(std::make_unique<SageLayer>(d_in, d_out, d_e, rng));
                break;
            case LayerKind::Gcn:
                layers_.push_back(std::make_unique<GcnLayer>(d_in, d_out, d_e, rng));
                break;
            case LayerKind::Gat:
                layers_.push_back(std::make_unique<GatLayer>(d_in, d_out, d_e, config.heads, rng));
                break;
            case LayerKind::Gin:
                layers_.push_back(
                    std::make_unique<GinLayer>(d_in, d_out, d_e, config.epsilon_learnable, rng));
                break;
        }
    }
}

Tensor GnnEncoder::encode(const Tensor& node_features, const GraphTopology& topo,
                          const Tensor& edge_features, num::Rng* dropout_rng) const {
    Tensor h = node_features;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i]->forward(h, topo, edge_features);
        if (i + 1 < layers_.size()) {
            h = num::dropout(num::leaky_relu(h, negative_slope_), dropout_p_, dropout_rng);
        }
    }
    return h;
}

std::vector<Tensor> GnnEncoder::params() const {
    std::vector<Tensor> out;
    for (const auto& layer : layers_) {
        for (auto& p : layer->params()) out.push_back(p);
    }
    return out;
}

std::vector<std::string> GnnEncoder::param_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        for (const auto& name : layers_[i]->param_names()) {
            out.push_back("l" + std::to_string(i) + "." + name);
        }
    }
    return out;
}

} // namespace funcgraph::gnn
