#include "funcgraph/graph.hpp"

#include <algorithm>
#include <cmath>

namespace funcgraph {

namespace {

void require_nonempty(const std::string& value, const char* what, const std::string& graph_id) {
    if (value.empty()) {
        throw Error(std::string("empty ") + what + " in graph '" + graph_id + "'");
    }
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
    return h;
}

} // namespace

Vocabulary Vocabulary::from_terms(std::string name, const std::set<std::string>& term_set) {
    Vocabulary v;
    v.name = std::move(name);
    v.terms.assign(term_set.begin(), term_set.end()); // std::set iterates sorted
    for (std::size_t i = 0; i < v.terms.size(); ++i) v.index[v.terms[i]] = i;
    return v;
}

std::size_t Vocabulary::at(const std::string& term) const {
    auto it = index.find(term);
    if (it == index.end()) throw UnknownTerm(name, term);
    return it->second;
}

std::size_t Vocabularies::node_dim() const {
    return component_basis.size() + system_name.size() + system_type.size() + material.size();
}

std::size_t Vocabularies::edge_dim() const { return 2 * flow.size() + 1; }

std::uint64_t Vocabularies::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const Vocabulary* v : {&component_basis, &system_name, &system_type, &material, &flow,
                                &label_t1, &label_t2, &label_t3}) {
        h = fnv1a(h, v->name);
        for (const auto& t : v->terms) h = fnv1a(h, t);
    }
    return h;
}

void RelationalGraph::validate() const {
    std::set<long> ids;
    for (const auto& n : nodes) {
        if (!ids.insert(n.node_id).second) {
            throw Error("graph '" + graph_id + "': duplicate node_id " +
                        std::to_string(n.node_id));
        }
        require_nonempty(n.component_basis, "component_basis", graph_id);
        require_nonempty(n.system_name, "system_name", graph_id);
        require_nonempty(n.system_type, "system_type", graph_id);
        require_nonempty(n.material, "material", graph_id);
        require_nonempty(n.label_t1, "label_t1", graph_id);
        require_nonempty(n.label_t2, "label_t2", graph_id);
        require_nonempty(n.label_t3, "label_t3", graph_id);
        if (n.label_t1 == kUnspecified) {
            throw Error("graph '" + graph_id + "': node " + std::to_string(n.node_id) +
                        " has no tier-1 function");
        }
    }
    for (const auto& e : edges) {
        if (!ids.count(e.src) || !ids.count(e.dst)) {
            throw DanglingEdge("graph '" + graph_id + "': edge " + std::to_string(e.src) + "->" +
                               std::to_string(e.dst) + " references a missing node");
        }
        if (e.kind == EdgeKind::Assembly) {
            if (e.in_flow != kNoFlow || e.out_flow != kNoFlow) {
                throw Error("graph '" + graph_id + "': assembly edge carries flow terms");
            }
            if (e.src == e.dst) {
                throw Error("graph '" + graph_id + "': assembly self-loop on node " +
                            std::to_string(e.src));
            }
        } else {
            if (e.in_flow == kNoFlow && e.out_flow == kNoFlow) {
                throw Error("graph '" + graph_id + "': flow edge with no flow terms");
            }
        }
    }
}

FeatureMask FeatureMask::all() {
    FeatureMask m;
    m.node_fields = {NodeField::ComponentBasis, NodeField::SystemName, NodeField::SystemType,
                     NodeField::Material};
    m.edge_mode = EdgeMode::All;
    return m;
}

bool FeatureMask::is_identity() const {
    return node_fields.size() == 4 && edge_mode == EdgeMode::All;
}

std::size_t masked_node_dim(const Vocabularies& v, const FeatureMask& mask) {
    if (mask.node_fields.empty()) return 1;
    std::size_t d = 0;
    if (mask.node_fields.count(NodeField::ComponentBasis)) d += v.component_basis.size();
    if (mask.node_fields.count(NodeField::SystemName)) d += v.system_name.size();
    if (mask.node_fields.count(NodeField::SystemType)) d += v.system_type.size();
    if (mask.node_fields.count(NodeField::Material)) d += v.material.size();
    return d;
}

std::size_t masked_edge_dim(const Vocabularies& v, const FeatureMask& mask) {
    switch (mask.edge_mode) {
        case EdgeMode::All:
        case EdgeMode::MaterialFlowAssembly:
            return 2 * v.flow.size() + 1;
        case EdgeMode::FlowOnly:
            return 2 * v.flow.size();
        case EdgeMode::AssemblyOnly:
        case EdgeMode::Featureless:
            return 1;
    }
    return 0;
}

Vocabularies build_vocabularies(const std::vector<RelationalGraph>& graphs) {
    if (graphs.empty()) throw CorpusEmpty("build_vocabularies: no graphs");

    std::set<std::string> components, sys_names, sys_types, materials, flows, t1, t2, t3;
    for (const auto& g : graphs) {
        g.validate();
        for (const auto& n : g.nodes) {
            components.insert(n.component_basis);
            sys_names.insert(n.system_name);
            sys_types.insert(n.system_type);
            materials.insert(n.material);
            t1.insert(n.label_t1);
            if (n.label_t2 != kUnspecified) t2.insert(n.label_t2);
            if (n.label_t3 != kUnspecified) t3.insert(n.label_t3);
        }
        for (const auto& e : g.edges) {
            if (e.in_flow != kNoFlow) flows.insert(e.in_flow);
            if (e.out_flow != kNoFlow) flows.insert(e.out_flow);
        }
    }

    if (flows.count(kNoFlow)) {
        throw ReservedTermConflict("flow term 'none' collides with the reserved no-flow marker");
    }
    if (t1.count(kUnspecified)) {
        throw ReservedTermConflict("tier-1 label 'unspecified' is reserved for missing labels");
    }
    flows.insert(kNoFlow);
    t2.insert(kUnspecified);
    t3.insert(kUnspecified);

    Vocabularies v;
    v.component_basis = Vocabulary::from_terms("component_basis", components);
    v.system_name = Vocabulary::from_terms("system_name", sys_names);
    v.system_type = Vocabulary::from_terms("system_type", sys_types);
    v.material = Vocabulary::from_terms("material", materials);
    v.flow = Vocabulary::from_terms("flow", flows);
    v.label_t1 = Vocabulary::from_terms("label_t1", t1);
    v.label_t2 = Vocabulary::from_terms("label_t2", t2);
    v.label_t3 = Vocabulary::from_terms("label_t3", t3);
    return v;
}

EncodedGraph encode_graph(const RelationalGraph& g, const Vocabularies& v,
                          const FeatureMask& mask) {
    g.validate();
    const std::size_t n = g.nodes.size();

    std::unordered_map<long, std::size_t> pos;
    pos.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pos[g.nodes[i].node_id] = i;

    EncodedGraph out;
    out.graph_id = g.graph_id;

    // Node features: concatenated one-hot blocks of the kept fields.
    const std::size_t d_x = masked_node_dim(v, mask);
    out.node_features = num::Tensor::zeros(n, d_x);
    auto& nf = out.node_features.raw();
    out.labels_t1.resize(n);
    out.labels_t2.resize(n);
    out.labels_t3.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = g.nodes[i];
        if (mask.node_fields.empty()) {
            nf[i * d_x] = 1.0;
        } else {
            std::size_t offset = 0;
            if (mask.node_fields.count(NodeField::ComponentBasis)) {
                nf[i * d_x + offset + v.component_basis.at(rec.component_basis)] = 1.0;
                offset += v.component_basis.size();
            }
            if (mask.node_fields.count(NodeField::SystemName)) {
                nf[i * d_x + offset + v.system_name.at(rec.system_name)] = 1.0;
                offset += v.system_name.size();
            }
            if (mask.node_fields.count(NodeField::SystemType)) {
                nf[i * d_x + offset + v.system_type.at(rec.system_type)] = 1.0;
                offset += v.system_type.size();
            }
            if (mask.node_fields.count(NodeField::Material)) {
                nf[i * d_x + offset + v.material.at(rec.material)] = 1.0;
            }
        }
        out.labels_t1[i] = int(v.label_t1.at(rec.label_t1));
        out.labels_t2[i] = int(v.label_t2.at(rec.label_t2));
        out.labels_t3[i] = int(v.label_t3.at(rec.label_t3));
    }

    // Edge selection under the mask.
    auto keep_edge = [&](const EdgeRecord& e) {
        switch (mask.edge_mode) {
            case EdgeMode::All:
            case EdgeMode::Featureless:
                return true;
            case EdgeMode::FlowOnly:
                return e.kind == EdgeKind::Flow;
            case EdgeMode::AssemblyOnly:
                return e.kind == EdgeKind::Assembly;
            case EdgeMode::MaterialFlowAssembly:
                if (e.kind == EdgeKind::Assembly) return true;
                return mask.material_flow_terms.count(e.in_flow) != 0 ||
                       mask.material_flow_terms.count(e.out_flow) != 0;
        }
        return true;
    };

    std::vector<const EdgeRecord*> kept;
    std::size_t m = 0;
    for (const auto& e : g.edges) {
        if (!keep_edge(e)) continue;
        kept.push_back(&e);
        m += e.kind == EdgeKind::Assembly ? 2 : 1; // assembly edges are doubled
    }

    const std::size_t d_e = masked_edge_dim(v, mask);
    const std::size_t F = v.flow.size();
    out.edge_features = num::Tensor::zeros(m, d_e);
    auto& ef = out.edge_features.raw();
    out.edge_index.reserve(m);

    std::size_t row = 0;
    auto emit = [&](std::size_t s, std::size_t d, const EdgeRecord& e) {
        out.edge_index.emplace_back(s, d);
        switch (mask.edge_mode) {
            case EdgeMode::All:
            case EdgeMode::MaterialFlowAssembly:
                ef[row * d_e + v.flow.at(e.in_flow)] = 1.0;
                ef[row * d_e + F + v.flow.at(e.out_flow)] = 1.0;
                ef[row * d_e + 2 * F] = e.kind == EdgeKind::Assembly ? 1.0 : 0.0;
                break;
            case EdgeMode::FlowOnly:
                ef[row * d_e + v.flow.at(e.in_flow)] = 1.0;
                ef[row * d_e + F + v.flow.at(e.out_flow)] = 1.0;
                break;
            case EdgeMode::AssemblyOnly:
            case EdgeMode::Featureless:
                ef[row * d_e] = 1.0;
                break;
        }
        ++row;
    };

    for (const EdgeRecord* e : kept) {
        auto si = pos.find(e->src);
        auto di = pos.find(e->dst);
        if (si == pos.end() || di == pos.end()) {
            throw DanglingEdge("graph '" + g.graph_id + "': edge endpoint missing");
        }
        emit(si->second, di->second, *e);
        if (e->kind == EdgeKind::Assembly) emit(di->second, si->second, *e);
    }
    return out;
}

namespace {

std::size_t block_argmax(const std::vector<double>& row_data, std::size_t row,
                         std::size_t row_width, std::size_t offset, std::size_t width) {
    std::size_t best = 0;
    double best_v = row_data[row * row_width + offset];
    for (std::size_t j = 1; j < width; ++j) {
        const double v = row_data[row * row_width + offset + j];
        if (v > best_v) {
            best_v = v;
            best = j;
        }
    }
    return best;
}

} // namespace

DecodedNode decode_node(const EncodedGraph& g, const Vocabularies& v, std::size_t row) {
    const std::size_t d_x = g.node_features.cols();
    if (d_x != v.node_dim()) throw ShapeError("decode_node: graph was not encoded unmasked");
    const auto& data = g.node_features.data();
    DecodedNode out;
    std::size_t offset = 0;
    out.component_basis =
        v.component_basis.terms[block_argmax(data, row, d_x, offset, v.component_basis.size())];
    offset += v.component_basis.size();
    out.system_name =
        v.system_name.terms[block_argmax(data, row, d_x, offset, v.system_name.size())];
    offset += v.system_name.size();
    out.system_type =
        v.system_type.terms[block_argmax(data, row, d_x, offset, v.system_type.size())];
    offset += v.system_type.size();
    out.material = v.material.terms[block_argmax(data, row, d_x, offset, v.material.size())];
    return out;
}

DecodedEdge decode_edge(const EncodedGraph& g, const Vocabularies& v, std::size_t row) {
    const std::size_t d_e = g.edge_features.cols();
    if (d_e != v.edge_dim()) throw ShapeError("decode_edge: graph was not encoded unmasked");
    const auto& data = g.edge_features.data();
    const std::size_t F = v.flow.size();
    DecodedEdge out;
    out.in_flow = v.flow.terms[block_argmax(data, row, d_e, 0, F)];
    out.out_flow = v.flow.terms[block_argmax(data, row, d_e, F, F)];
    out.assembly = data[row * d_e + 2 * F] > 0.5;
    return out;
}

SummaryStats summarize(const std::vector<double>& values) {
    SummaryStats s;
    const std::size_t n = values.size();
    if (n == 0) return s;

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();

    auto quantile = [&](double q) {
        if (n == 1) return sorted[0];
        const double pos = q * double(n - 1);
        const std::size_t lo = std::size_t(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - double(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    s.q25 = quantile(0.25);
    s.q50 = quantile(0.50);
    s.q75 = quantile(0.75);

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(n);
    s.mean = mean;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    if (n > 1) s.stddev = std::sqrt(m2 / double(n - 1));

    // Bias-corrected sample skewness and excess kurtosis.
    if (n > 2 && s.stddev > 0.0) {
        const double nn = double(n);
        s.skewness = (nn / ((nn - 1.0) * (nn - 2.0))) * (m3 / (s.stddev * s.stddev * s.stddev));
    }
    if (n > 3 && s.stddev > 0.0) {
        const double nn = double(n);
        const double s4 = s.stddev * s.stddev * s.stddev * s.stddev;
        s.kurtosis = (nn * (nn + 1.0) / ((nn - 1.0) * (nn - 2.0) * (nn - 3.0))) * (m4 / s4) -
                     3.0 * (nn - 1.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
    }
    return s;
}

StatsReport graph_stats(const std::vector<RelationalGraph>& graphs) {
    if (graphs.empty()) throw CorpusEmpty("graph_stats: no graphs");

    StatsReport report;
    std::vector<double> nodes_v, edges_v, density_v, degree_v;
    for (const auto& g : graphs) {
        GraphStatsRow row;
        row.graph_id = g.graph_id;
        row.nodes = g.nodes.size();
        for (const auto& e : g.edges) {
            if (e.kind == EdgeKind::Assembly) {
                ++row.assembly_edges;
            } else {
                ++row.flow_edges;
            }
        }
        row.edges = row.flow_edges + row.assembly_edges;
        const double n = double(row.nodes);
        row.density = row.nodes > 1 ? double(row.edges) / (n * (n - 1.0)) : 0.0;
        row.mean_degree = row.nodes > 0 ? 2.0 * double(row.edges) / n : 0.0;

        report.total_nodes += row.nodes;
        report.total_edges += row.edges;
        report.total_flow_edges += row.flow_edges;
        report.total_assembly_edges += row.assembly_edges;
        nodes_v.push_back(double(row.nodes));
        edges_v.push_back(double(row.edges));
        density_v.push_back(row.density);
        degree_v.push_back(row.mean_degree);
        report.per_graph.push_back(std::move(row));
    }
    report.nodes = summarize(nodes_v);
    report.edges = summarize(edges_v);
    report.density = summarize(density_v);
    report.degree = summarize(degree_v);
    if (report.total_edges > 0) {
        report.assembly_fraction = double(report.total_assembly_edges) / double(report.total_edges);
        report.flow_fraction = double(report.total_flow_edges) / double(report.total_edges);
    }
    return report;
}

} // namespace funcgraph
