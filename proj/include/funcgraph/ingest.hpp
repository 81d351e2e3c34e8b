#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "funcgraph/graph.hpp"

namespace funcgraph {

/// Flow endpoint qualifier: a component id within the system, or the
/// nonspecific internal/external markers.
struct FlowRef {
    enum class Kind { Missing, Internal, External, Component };
    Kind kind = Kind::Missing;
    std::string flow;       // empty when Missing
    long component_id = -1; // valid when kind == Component
};

/// One row of a repository export table.
struct ArtifactRow {
    std::string system;
    long id = 0; // component id, shared by all rows of one component
    std::string component;
    std::optional<long> child_of;
    std::string material; // empty = missing
    FlowRef input;        // flow term + source qualifier
    FlowRef output;       // flow term + destination qualifier
    std::string func_t1;  // empty = missing
    std::string func_t2;
    std::string func_t3;
    std::size_t line = 0; // 1-based source line, for diagnostics
};

inline constexpr const char* kCsvHeader =
    "system,id,component,child_of,material,input_flow,input_from,output_flow,output_to,"
    "func_t1,func_t2,func_t3";

/// Parses the 12-column export format. "-" means missing; a missing system
/// column continues the previous row's system. Referential checks (child_of
/// and flow qualifiers must name a component id present in the system) run
/// after the full read.
std::vector<ArtifactRow> parse_rows(std::istream& csv);
std::vector<ArtifactRow> parse_rows_file(const std::string& path);

struct BuildOptions {
    /// When true, systems whose rows all lack a tier-1 function are
    /// filtered out and reported instead of raising SystemRejected.
    bool drop_incomplete = false;
};

struct BuildResult {
    std::vector<RelationalGraph> graphs;
    std::vector<std::string> rejected_systems;
};

/// Builds one relational graph per system: a node per function-carrying
/// row, flow edges from qualifier references, assembly edges from the
/// child_of hierarchy (all node pairs of parent and child components).
BuildResult build_graphs(const std::vector<ArtifactRow>& rows, const BuildOptions& opts = {});

struct SplitAssignment {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

/// Seeded pseudorandom partition of graph ids. Validation and test sizes
/// are floored; the remainder goes to train.
SplitAssignment split_graphs(const std::vector<RelationalGraph>& graphs, std::uint64_t seed,
                             std::array<double, 3> fractions = {0.6, 0.1, 0.3});

} // namespace funcgraph
