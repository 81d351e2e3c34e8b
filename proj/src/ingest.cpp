#include "funcgraph/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "funcgraph/rng.hpp"

namespace funcgraph {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool missing(const std::string& s) { return s.empty() || s == "-"; }

// Comma-separated with minimal double-quote support.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

long parse_long(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, std::string("invalid ") + what + " '" + s + "'");
    }
}

FlowRef parse_flow_ref(const std::string& flow, const std::string& qual, std::size_t line,
                       const char* side) {
    FlowRef ref;
    if (missing(flow)) {
        if (!missing(qual)) {
            throw QualifierError(line, std::string(side) + " qualifier '" + qual +
                                           "' given without a flow term");
        }
        return ref;
    }
    if (lower(flow) == kNoFlow) {
        throw ReservedTermConflict("line " + std::to_string(line) +
                                   ": flow term 'none' collides with the reserved no-flow marker");
    }
    ref.flow = flow;
    if (missing(qual)) {
        throw QualifierError(line, std::string(side) + " flow '" + flow + "' has no qualifier");
    }
    const std::string q = lower(qual);
    if (q == "int") {
        ref.kind = FlowRef::Kind::Internal;
    } else if (q == "ext") {
        ref.kind = FlowRef::Kind::External;
    } else {
        try {
            std::size_t used = 0;
            ref.component_id = std::stol(qual, &used);
            if (used != qual.size()) throw std::invalid_argument(qual);
        } catch (const std::exception&) {
            throw QualifierError(line, std::string("unknown ") + side + " qualifier '" + qual + "'");
        }
        ref.kind = FlowRef::Kind::Component;
    }
    return ref;
}

} // namespace

std::vector<ArtifactRow> parse_rows(std::istream& csv) {
    std::string line;
    std::size_t lineno = 0;

    // Header
    while (std::getline(csv, line)) {
        ++lineno;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ParseError(lineno, "missing header row");
    {
        const auto got = split_csv(line);
        const auto want = split_csv(kCsvHeader);
        if (got != want) throw ParseError(lineno, "header does not match '" + std::string(kCsvHeader) + "'");
    }

    std::vector<ArtifactRow> rows;
    std::string current_system;
    while (std::getline(csv, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 12) {
            throw ParseError(lineno, "expected 12 fields, got " + std::to_string(f.size()));
        }
        ArtifactRow row;
        row.line = lineno;
        if (missing(f[0])) {
            if (current_system.empty()) throw ParseError(lineno, "first row has no system name");
            row.system = current_system;
        } else {
            row.system = f[0];
            current_system = f[0];
        }
        row.id = parse_long(f[1], lineno, "id");
        row.component = missing(f[2]) ? "" : f[2];
        if (!missing(f[3])) {
            row.child_of = parse_long(f[3], lineno, "child_of");
            if (*row.child_of == row.id) {
                throw ParseError(lineno, "component " + std::to_string(row.id) +
                                             " cannot be its own parent");
            }
        }
        row.material = missing(f[4]) ? "" : f[4];
        row.input = parse_flow_ref(missing(f[5]) ? "" : f[5], f[6], lineno, "input");
        row.output = parse_flow_ref(missing(f[7]) ? "" : f[7], f[8], lineno, "output");
        if (lower(f[9]) == kUnspecified) {
            throw ReservedTermConflict("line " + std::to_string(lineno) +
                                       ": tier-1 function 'unspecified' is reserved");
        }
        row.func_t1 = missing(f[9]) ? "" : f[9];
        // A literal "unspecified" in tier 2/3 coincides with the reserved
        // missing-label class, so it is folded into it.
        row.func_t2 = missing(f[10]) || lower(f[10]) == kUnspecified ? "" : f[10];
        row.func_t3 = missing(f[11]) || lower(f[11]) == kUnspecified ? "" : f[11];
        rows.push_back(std::move(row));
    }

    // Referential checks per system.
    std::unordered_map<std::string, std::map<long, std::string>> components_by_system;
    std::unordered_map<std::string, std::map<long, std::optional<long>>> parents_by_system;
    for (const auto& r : rows) {
        auto& comps = components_by_system[r.system];
        auto it = comps.find(r.id);
        if (it == comps.end()) {
            comps[r.id] = r.component;
            parents_by_system[r.system][r.id] = r.child_of;
        } else {
            if (it->second != r.component) {
                throw ParseError(r.line, "component id " + std::to_string(r.id) +
                                             " renamed from '" + it->second + "' to '" +
                                             r.component + "'");
            }
            const auto& parent = parents_by_system[r.system][r.id];
            if (parent != r.child_of) {
                throw ParseError(r.line, "component id " + std::to_string(r.id) +
                                             " has inconsistent child_of");
            }
        }
    }
    for (const auto& r : rows) {
        const auto& comps = components_by_system[r.system];
        if (r.child_of && !comps.count(*r.child_of)) {
            throw ParseError(r.line, "child_of " + std::to_string(*r.child_of) +
                                         " references an absent component id");
        }
        if (r.input.kind == FlowRef::Kind::Component && !comps.count(r.input.component_id)) {
            throw QualifierError(r.line, "input flow references absent component id " +
                                             std::to_string(r.input.component_id));
        }
        if (r.output.kind == FlowRef::Kind::Component && !comps.count(r.output.component_id)) {
            throw QualifierError(r.line, "output flow references absent component id " +
                                             std::to_string(r.output.component_id));
        }
    }
    return rows;
}

std::vector<ArtifactRow> parse_rows_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_rows(in);
}

namespace {

struct PendingEdge {
    long src;
    long dst;
    std::string in_flow;
    std::string out_flow;
};

RelationalGraph build_one(const std::string& system, const std::vector<const ArtifactRow*>& rows) {
    RelationalGraph g;
    g.graph_id = system;

    // One node per function-carrying row.
    std::map<long, std::vector<long>> component_nodes; // component id -> node ids
    std::map<long, std::optional<long>> component_parent;
    std::vector<const ArtifactRow*> node_rows;
    for (const ArtifactRow* r : rows) {
        component_parent.emplace(r->id, r->child_of);
        if (r->func_t1.empty()) continue;
        const long node_id = long(g.nodes.size());
        NodeRecord n;
        n.node_id = node_id;
        n.component_basis = r->component.empty() ? "unclassified" : r->component;
        n.system_name = system;
        n.system_type = "unknown"; // export format carries no system type
        n.material = r->material.empty() ? "unknown" : r->material;
        n.label_t1 = r->func_t1;
        n.label_t2 = r->func_t2.empty() ? kUnspecified : r->func_t2;
        n.label_t3 = r->func_t3.empty() ? kUnspecified : r->func_t3;
        n.source_component_id = r->id;
        g.nodes.push_back(std::move(n));
        component_nodes[r->id].push_back(node_id);
        node_rows.push_back(r);
    }

    // Flow edges. A consumer row with a component-qualified input connects
    // every node of the source component to itself; a producer row with a
    // component-qualified output connects itself to every node of the
    // destination component. The two views of one input-output relationship
    // land on the same ordered node pair and are stored as a single edge
    // carrying both terms. Int/Ext flows become self-loop attributions.
    std::map<std::pair<long, long>, std::size_t> pair_index;
    std::vector<PendingEdge> flow_edges;
    auto upsert = [&](long src, long dst) -> PendingEdge& {
        auto key = std::make_pair(src, dst);
        auto it = pair_index.find(key);
        if (it == pair_index.end()) {
            pair_index.emplace(key, flow_edges.size());
            flow_edges.push_back(PendingEdge{src, dst, "", ""});
            return flow_edges.back();
        }
        return flow_edges[it->second];
    };

    for (std::size_t i = 0; i < node_rows.size(); ++i) {
        const ArtifactRow* r = node_rows[i];
        const long self = g.nodes[i].node_id;
        if (r->input.kind == FlowRef::Kind::Component) {
            auto it = component_nodes.find(r->input.component_id);
            if (it != component_nodes.end()) {
                for (long u : it->second) upsert(u, self).in_flow = r->input.flow;
            }
        }
        if (r->output.kind == FlowRef::Kind::Component) {
            auto it = component_nodes.find(r->output.component_id);
            if (it != component_nodes.end()) {
                for (long v : it->second) upsert(self, v).out_flow = r->output.flow;
            }
        }
        const bool in_self = r->input.kind == FlowRef::Kind::Internal ||
                             r->input.kind == FlowRef::Kind::External;
        const bool out_self = r->output.kind == FlowRef::Kind::Internal ||
                              r->output.kind == FlowRef::Kind::External;
        if (in_self) upsert(self, self).in_flow = r->input.flow;
        if (out_self) upsert(self, self).out_flow = r->output.flow;
    }

    for (const auto& p : flow_edges) {
        EdgeRecord e;
        e.src = p.src;
        e.dst = p.dst;
        e.kind = EdgeKind::Flow;
        e.in_flow = p.in_flow.empty() ? kNoFlow : p.in_flow;
        e.out_flow = p.out_flow.empty() ? kNoFlow : p.out_flow;
        g.edges.push_back(std::move(e));
    }

    // Assembly edges: every node pair of a child component and its parent,
    // stored once.
    std::set<std::pair<long, long>> seen_links;
    for (const auto& [comp, parent] : component_parent) {
        if (!parent) continue;
        auto link = std::minmax(comp, *parent);
        if (!seen_links.insert({link.first, link.second}).second) continue;
        auto ci = component_nodes.find(comp);
        auto pi = component_nodes.find(*parent);
        if (ci == component_nodes.end() || pi == component_nodes.end()) continue;
        for (long c : ci->second) {
            for (long p : pi->second) {
                EdgeRecord e;
                e.src = c;
                e.dst = p;
                e.kind = EdgeKind::Assembly;
                g.edges.push_back(std::move(e));
            }
        }
    }

    g.validate();
    return g;
}

} // namespace

BuildResult build_graphs(const std::vector<ArtifactRow>& rows, const BuildOptions& opts) {
    // Group rows by system, preserving first-appearance order.
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const ArtifactRow*>> by_system;
    for (const auto& r : rows) {
        auto [it, inserted] = by_system.try_emplace(r.system);
        if (inserted) order.push_back(r.system);
        it->second.push_back(&r);
    }

    BuildResult result;
    for (const auto& system : order) {
        const auto& sys_rows = by_system[system];
        const bool has_function = std::any_of(sys_rows.begin(), sys_rows.end(),
                                              [](const ArtifactRow* r) { return !r->func_t1.empty(); });
        if (!has_function) {
            if (opts.drop_incomplete) {
                result.rejected_systems.push_back(system);
                continue;
            }
            throw SystemRejected("system '" + system + "' has no tier-1 function data");
        }
        result.graphs.push_back(build_one(system, sys_rows));
    }
    return result;
}

SplitAssignment split_graphs(const std::vector<RelationalGraph>& graphs, std::uint64_t seed,
                             std::array<double, 3> fractions) {
    if (graphs.size() < 3) throw SplitError("need at least 3 graphs to split");
    double sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw SplitError("negative split fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");

    std::vector<std::string> ids;
    ids.reserve(graphs.size());
    for (const auto& g : graphs) ids.push_back(g.graph_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() != graphs.size()) throw SplitError("duplicate graph ids");

    num::Rng rng = num::Rng(seed).fork("split");
    rng.shuffle(ids);

    const std::size_t n = ids.size();
    const std::size_t n_val = std::size_t(std::floor(fractions[1] * double(n)));
    const std::size_t n_test = std::size_t(std::floor(fractions[2] * double(n)));
    const std::size_t n_train = n - n_val - n_test;

    SplitAssignment split;
    split.seed = seed;
    split.train.assign(ids.begin(), ids.begin() + n_train);
    split.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    split.test.assign(ids.begin() + n_train + n_val, ids.end());
    return split;
}

} // namespace funcgraph
