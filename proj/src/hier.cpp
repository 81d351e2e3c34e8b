#include "funcgraph/hier.hpp"

#include <algorithm>
#include <numeric>

namespace funcgraph::hier {

using num::Tensor;

BaselineEncoder::BaselineEncoder(std::size_t d_x, std::size_t d_e, std::size_t dim,
                                 num::Rng& rng)
    : node_proj(d_x, dim, rng), edge_proj(d_e, dim, rng) {}

num::Tensor baseline_features(const EncodedGraph& g, const num::LinearLayer& node_proj,
                              const num::LinearLayer& edge_proj) {
    Tensor z = node_proj.forward(g.node_features);
    if (g.edge_index.empty()) return z;
    std::vector<std::size_t> src, dst;
    src.reserve(g.edge_index.size());
    dst.reserve(g.edge_index.size());
    for (const auto& [s, d] : g.edge_index) {
        src.push_back(s);
        dst.push_back(d);
    }
    Tensor neighbor = num::gather_rows(z, src);
    Tensor edge = edge_proj.forward(g.edge_features);
    Tensor pairwise = num::mul(neighbor, edge);
    return num::add(z, num::scatter_sum_rows(pairwise, dst, g.num_nodes()));
}

Tensor BaselineEncoder::encode(const EncodedGraph& g, const gnn::GraphTopology&,
                               num::Rng*) const {
    return baseline_features(g, node_proj, edge_proj);
}

std::vector<Tensor> BaselineEncoder::params() const {
    return {node_proj.W, node_proj.b, edge_proj.W, edge_proj.b};
}

std::vector<std::string> BaselineEncoder::param_names() const {
    return {"node_proj.w", "node_proj.b", "edge_proj.w", "edge_proj.b"};
}

HierModel::HierModel(const ModelConfig& config, std::size_t d_x, std::size_t d_e,
                     const std::array<std::size_t, 3>& n_classes, num::Rng& rng)
    : config_(config), n_classes_(n_classes) {
    for (std::size_t k = 0; k < 3; ++k) {
        const TierConfig& tc = config.tiers[k];
        Tier tier;
        num::Rng enc_rng = rng.fork("enc" + std::to_string(k));
        if (tc.encoder_type == "gnn") {
            tier.encoder = std::make_unique<GnnNodeEncoder>(tc.encoder, d_x, d_e, enc_rng);
        } else if (tc.encoder_type == "baseline") {
            tier.encoder = std::make_unique<BaselineEncoder>(d_x, d_e, tc.baseline_dim, enc_rng);
        } else {
            throw ConfigError("unknown encoder type '" + tc.encoder_type + "'");
        }
        // Predecessor slot: C1 zeros for tier 1, the previous tier's class
        // count afterwards. Independent mode has no slot.
        std::size_t slot = 0;
        if (config.hierarchical) slot = k == 0 ? n_classes[0] : n_classes[k - 1];
        num::Rng head_rng = rng.fork("head" + std::to_string(k));
        tier.head = num::MLPHead(tier.encoder->output_dim() + slot, tc.head_hidden, n_classes[k],
                                 head_rng);
        tiers_[k] = std::move(tier);
    }
}

Tensor HierModel::head_input(std::size_t, const Tensor& h, const Tensor& predecessor) const {
    if (!config_.hierarchical) return h;
    return num::concat_cols(h, predecessor);
}

namespace {

TierPrediction make_prediction(Tensor logits) {
    TierPrediction p;
    p.logits = logits;
    p.probs = num::row_softmax(logits);
    p.predicted = num::argmax_rows(p.probs);
    return p;
}

const std::vector<int>& tier_labels(const EncodedGraph& g, std::size_t k) {
    switch (k) {
        case 0: return g.labels_t1;
        case 1: return g.labels_t2;
        default: return g.labels_t3;
    }
}

} // namespace

GraphForward HierModel::forward_train(const EncodedGraph& g, const gnn::GraphTopology& topo,
                                      const std::array<std::vector<double>, 3>& class_weights,
                                      num::Rng* dropout_rng) const {
    const std::size_t n = g.num_nodes();
    for (std::size_t k = 0; k < 3; ++k) {
        if (tier_labels(g, k).size() != n) throw LabelError("forward_train: missing tier labels");
    }

    GraphForward out;
    Tensor loss;
    for (std::size_t k = 0; k < 3; ++k) {
        Tensor h = tiers_[k].encoder->encode(g, topo, dropout_rng);
        Tensor predecessor;
        if (config_.hierarchical) {
            // Teacher forcing: ground truth of the previous tier; a zero
            // vector stands in for the nonexistent tier-0 predictions.
            predecessor = k == 0 ? Tensor::zeros(n, n_classes_[0])
                                 : one_hot(tier_labels(g, k - 1), n_classes_[k - 1]);
        }
        Tensor input = head_input(k, h, predecessor);
        out.head_inputs[k] = input;
        Tensor logits = tiers_[k].head.forward(input, dropout_rng);
        out.tiers[k] = make_prediction(logits);
        Tensor tier_loss =
            num::weighted_cross_entropy(logits, tier_labels(g, k), class_weights[k]);
        loss = loss.defined() ? num::add(loss, tier_loss) : tier_loss;
    }
    out.loss = loss;
    return out;
}

std::array<TierPrediction, 3> HierModel::forward_infer(const EncodedGraph& g,
                                                       const gnn::GraphTopology& topo) const {
    std::array<TierPrediction, 3> out;
    Tensor previous_probs;
    for (std::size_t k = 0; k < 3; ++k) {
        Tensor h = tiers_[k].encoder->encode(g, topo, nullptr);
        Tensor predecessor;
        if (config_.hierarchical) {
            // Inference chains the predicted probability distribution.
            predecessor = k == 0 ? Tensor::zeros(g.num_nodes(), n_classes_[0]) : previous_probs;
        }
        Tensor logits = tiers_[k].head.forward(head_input(k, h, predecessor), nullptr);
        out[k] = make_prediction(logits);
        previous_probs = out[k].probs;
    }
    return out;
}

Tensor HierModel::batch_loss(const std::vector<const EncodedGraph*>& graphs,
                             const std::vector<const gnn::GraphTopology*>& topos,
                             const std::array<std::vector<double>, 3>& class_weights,
                             num::Rng* dropout_rng) const {
    if (graphs.empty() || graphs.size() != topos.size()) {
        throw ShapeError("batch_loss: empty batch or topology mismatch");
    }
    Tensor total;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        Tensor l = forward_train(*graphs[i], *topos[i], class_weights, dropout_rng).loss;
        total = total.defined() ? num::add(total, l) : l;
    }
    return num::scale(total, 1.0 / double(graphs.size()));
}

std::vector<Tensor> HierModel::params() const {
    std::vector<Tensor> out;
    for (const auto& tier : tiers_) {
        for (auto& p : tier.encoder->params()) out.push_back(p);
        for (auto& p : tier.head.params()) out.push_back(p);
    }
    return out;
}

std::vector<std::string> HierModel::param_names() const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string prefix = "t" + std::to_string(k + 1) + ".";
        for (const auto& name : tiers_[k].encoder->param_names()) {
            out.push_back(prefix + "enc." + name);
        }
        for (std::size_t l = 0; l < tiers_[k].head.layers.size(); ++l) {
            out.push_back(prefix + "head.l" + std::to_string(l) + ".w");
            out.push_back(prefix + "head.l" + std::to_string(l) + ".b");
        }
    }
    return out;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t n_classes) {
    Tensor t = Tensor::zeros(labels.size(), n_classes);
    auto& data = t.raw();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || std::size_t(labels[i]) >= n_classes) {
            throw LabelError("one_hot: label out of range");
        }
        data[i * n_classes + std::size_t(labels[i])] = 1.0;
    }
    return t;
}

std::vector<char> top_k_hits(const Tensor& probs, const std::vector<int>& truth, std::size_t k) {
    const std::size_t n = probs.rows(), C = probs.cols();
    if (truth.size() != n) throw ShapeError("top_k_hits: one label per row required");
    if (k < 1 || k > C) throw ShapeError("top_k_hits: k out of range");
    std::vector<char> hits(n, 0);
    std::vector<std::size_t> order(C);
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = probs.data().data() + i * C;
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (p[a] != p[b]) return p[a] > p[b];
                              return a < b; // ties to the lower class index
                          });
        for (std::size_t j = 0; j < k; ++j) {
            if (order[j] == std::size_t(truth[i])) {
                hits[i] = 1;
                break;
            }
        }
    }
    return hits;
}

double top_k_rate(const Tensor& probs, const std::vector<int>& truth, std::size_t k) {
    const auto hits = top_k_hits(probs, truth, k);
    if (hits.empty()) return 0.0;
    double sum = 0.0;
    for (char h : hits) sum += h;
    return sum / double(hits.size());
}

} // namespace funcgraph::hier
