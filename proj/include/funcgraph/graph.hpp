#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "funcgraph/errors.hpp"
#include "funcgraph/tensor.hpp"

namespace funcgraph {

/// Reserved flow term marking "no flow in this direction".
inline constexpr const char* kNoFlow = "none";
/// Reserved label for data points missing a tier-2/3 function.
inline constexpr const char* kUnspecified = "unspecified";

/// Ordered categorical dictionary. Terms are unique and kept in sorted
/// order so feature indices are reproducible across machines.
struct Vocabulary {
    std::string name;
    std::vector<std::string> terms;
    std::unordered_map<std::string, std::size_t> index;

    static Vocabulary from_terms(std::string name, const std::set<std::string>& term_set);

    std::size_t size() const { return terms.size(); }
    bool contains(const std::string& term) const { return index.count(term) != 0; }
    std::size_t at(const std::string& term) const;
};

struct Vocabularies {
    Vocabulary component_basis;
    Vocabulary system_name;
    Vocabulary system_type;
    Vocabulary material;
    Vocabulary flow;     // includes "none"
    Vocabulary label_t1;
    Vocabulary label_t2; // includes "unspecified"
    Vocabulary label_t3; // includes "unspecified"

    /// d_x = |component| + |system_name| + |system_type| + |material|
    std::size_t node_dim() const;
    /// d_e = 2 * |flow| + 1
    std::size_t edge_dim() const;
    /// Stable content hash used to pair checkpoints with encodings.
    std::uint64_t hash() const;
};

/// One function data point of one component.
struct NodeRecord {
    long node_id = 0;
    std::string component_basis;
    std::string system_name;
    std::string system_type;
    std::string material;
    std::string label_t1;
    std::string label_t2 = kUnspecified;
    std::string label_t3 = kUnspecified;
    long source_component_id = 0;
};

enum class EdgeKind { Flow, Assembly };

struct EdgeRecord {
    long src = 0; // node ids, not positions
    long dst = 0;
    EdgeKind kind = EdgeKind::Flow;
    std::string in_flow = kNoFlow;
    std::string out_flow = kNoFlow;
};

/// Directed attributed multigraph of one product. Assembly edges are stored
/// once (undirected); direction is materialized at encoding time.
struct RelationalGraph {
    std::string graph_id;
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;

    /// Checks structural invariants; throws Error on violation.
    void validate() const;
};

// --- feature masks (feature-importance ablations) -----------------------

enum class NodeField { ComponentBasis, SystemName, SystemType, Material };

enum class EdgeMode {
    All,                  // both edge kinds, full features
    FlowOnly,             // flow edges only, in/out one-hots
    AssemblyOnly,         // assembly edges only, bare indicator
    Featureless,          // all edges kept, single constant feature
    MaterialFlowAssembly, // assembly edges + flow edges on material-like terms
};

struct FeatureMask {
    std::set<NodeField> node_fields; // kept one-hot blocks; empty = constant scalar
    EdgeMode edge_mode = EdgeMode::All;
    std::set<std::string> material_flow_terms; // only used by MaterialFlowAssembly

    static FeatureMask all();
    bool is_identity() const;
};

/// Feature dimensions implied by a mask under fixed vocabularies.
std::size_t masked_node_dim(const Vocabularies& v, const FeatureMask& mask);
std::size_t masked_edge_dim(const Vocabularies& v, const FeatureMask& mask);

// --- encoded form --------------------------------------------------------

struct EncodedGraph {
    std::string graph_id;
    num::Tensor node_features; // n x d_x, multi-hot
    std::vector<std::pair<std::size_t, std::size_t>> edge_index; // directed (src,dst) positions
    num::Tensor edge_features; // m x d_e
    std::vector<int> labels_t1;
    std::vector<int> labels_t2;
    std::vector<int> labels_t3;

    std::size_t num_nodes() const { return node_features.rows(); }
    std::size_t num_edges() const { return edge_index.size(); }
};

// --- operations -----------------------------------------------------------

Vocabularies build_vocabularies(const std::vector<RelationalGraph>& graphs);

EncodedGraph encode_graph(const RelationalGraph& g, const Vocabularies& v,
                          const FeatureMask& mask = FeatureMask::all());

/// Inverse of the unmasked node encoding: argmax per one-hot block.
struct DecodedNode {
    std::string component_basis;
    std::string system_name;
    std::string system_type;
    std::string material;
};
DecodedNode decode_node(const EncodedGraph& g, const Vocabularies& v, std::size_t row);

struct DecodedEdge {
    std::string in_flow;
    std::string out_flow;
    bool assembly = false;
};
DecodedEdge decode_edge(const EncodedGraph& g, const Vocabularies& v, std::size_t row);

// --- corpus statistics ----------------------------------------------------

struct GraphStatsRow {
    std::string graph_id;
    std::size_t nodes = 0;
    std::size_t edges = 0; // stored edges: assembly counted once
    std::size_t flow_edges = 0;
    std::size_t assembly_edges = 0;
    double density = 0.0;     // edges / (n * (n - 1))
    double mean_degree = 0.0; // 2 * edges / n
};

struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0; // excess
};

SummaryStats summarize(const std::vector<double>& values);

struct StatsReport {
    std::vector<GraphStatsRow> per_graph;
    SummaryStats nodes;
    SummaryStats edges;
    SummaryStats density;
    SummaryStats degree;
    std::size_t total_nodes = 0;
    std::size_t total_edges = 0;
    std::size_t total_flow_edges = 0;
    std::size_t total_assembly_edges = 0;
    double assembly_fraction = 0.0; // share of stored edges
    double flow_fraction = 0.0;
};

StatsReport graph_stats(const std::vector<RelationalGraph>& graphs);

} // namespace funcgraph
