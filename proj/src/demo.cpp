#include "funcgraph/demo.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "funcgraph/rng.hpp"

namespace funcgraph::demo {

namespace {

using num::Rng;

const char* kFlows[8] = {"solid", "liquid", "granular", "torque",
                         "heat",  "signal", "data",     "light"};
const char* kMaterials[6] = {"steel", "aluminum", "plastic", "rubber", "ceramic", "copper"};

std::string pad2(std::size_t v) {
    return (v < 10 ? "0" : "") + std::to_string(v);
}

// Roles 0..11. Parts 0..3 map to one role each; parts 4..7 are shared by a
// role pair and need flow context to tell apart.
std::size_t role_for_part(std::size_t part, Rng& rng) {
    if (part < 4) return part;
    return 4 + 2 * (part - 4) + rng.below(2);
}

std::size_t t1_of_role(std::size_t role) { return role % 9; }
const char* in_flow_of_role(std::size_t role) { return kFlows[role % 8]; }
const char* out_flow_of_role(std::size_t role) { return kFlows[(role + 3) % 8]; }

struct GenRow {
    std::size_t comp = 0; // index into comps
    std::size_t role = 0;
    bool input_used = false;
    bool output_used = false;
    long input_from = -1; // component id when >= 0, else Int/Ext
    long output_to = -1;
};

struct GenComp {
    long id = 0;
    std::size_t part = 0;
    std::string material;
    std::optional<long> parent;
    std::vector<std::size_t> rows;
};

struct GenGraph {
    std::string system;
    std::vector<GenComp> comps;
    std::vector<GenRow> rows;
    long flow_edges = 0;
    long assembly_edges = 0;
};

// Exact node totals: lognormal draws rescaled with drift correction.
std::vector<std::size_t> graph_sizes(const DemoSpec& spec, Rng& rng) {
    std::vector<double> raw(spec.n_graphs);
    double sum = 0.0;
    for (auto& v : raw) {
        v = std::exp(spec.size_sigma * rng.normal());
        sum += v;
    }
    std::vector<std::size_t> sizes(spec.n_graphs);
    const double scale = double(spec.total_nodes) / sum;
    long remaining = long(spec.total_nodes);
    for (std::size_t i = 0; i < spec.n_graphs; ++i) {
        const std::size_t left = spec.n_graphs - i;
        long target = std::lround(raw[i] * scale);
        target = std::max<long>(target, long(spec.min_nodes));
        // keep enough budget for the remaining graphs
        target = std::min<long>(target, remaining - long(spec.min_nodes) * long(left - 1));
        if (left == 1) target = remaining;
        sizes[i] = std::size_t(std::max<long>(target, long(spec.min_nodes)));
        remaining -= long(sizes[i]);
    }
    return sizes;
}

GenGraph build_graph(const DemoSpec& spec, std::size_t index, std::size_t n_nodes,
                     long flow_target, long assembly_target, Rng& rng) {
    GenGraph g;
    g.system = "fam" + std::to_string(index % spec.n_families) + "-" + pad2(index);

    // Components of size 1..5 until the node budget is filled.
    std::size_t assigned = 0;
    while (assigned < n_nodes) {
        GenComp comp;
        comp.id = long(g.comps.size() + 1);
        comp.part = rng.below(spec.n_parts);
        const std::size_t base_mat = comp.part % 4;
        const std::size_t mat =
            rng.uniform() < spec.material_noise ? rng.below(6) : base_mat;
        comp.material = kMaterials[mat];
        std::size_t size = 1 + rng.below(5);
        size = std::min(size, n_nodes - assigned);
        for (std::size_t i = 0; i < size; ++i) {
            GenRow row;
            row.comp = g.comps.size();
            row.role = role_for_part(comp.part, rng);
            comp.rows.push_back(g.rows.size());
            g.rows.push_back(row);
        }
        assigned += size;
        g.comps.push_back(std::move(comp));
    }

    // Assembly hierarchy: children pick an earlier component as parent while
    // the stored-edge budget holds. Parent choice ignores parts and roles,
    // so assembly topology carries no function signal.
    std::vector<std::size_t> child_order(g.comps.size());
    for (std::size_t i = 0; i < g.comps.size(); ++i) child_order[i] = i;
    rng.shuffle(child_order);
    for (std::size_t c : child_order) {
        if (c == 0 || g.assembly_edges >= assembly_target) continue;
        const long deficit = assembly_target - g.assembly_edges;
        // best-fit parent among a shuffled sample of earlier components
        long best_contribution = -1;
        std::size_t best_parent = 0;
        for (int attempt = 0; attempt < 16; ++attempt) {
            const std::size_t p = rng.below(c); // earlier index: keeps the forest acyclic
            const long contribution = long(g.comps[c].rows.size() * g.comps[p].rows.size());
            if (contribution > deficit + 2) continue;
            if (contribution > best_contribution) {
                best_contribution = contribution;
                best_parent = p;
            }
            if (contribution == deficit) break;
        }
        if (best_contribution >= 0) {
            g.comps[c].parent = g.comps[best_parent].id;
            g.assembly_edges += best_contribution;
        }
    }

    // Flow links: producer row a (component A) feeds consumer row b
    // (component B). Ingestion expands that into |A| + |B| - 1 stored edges
    // (full fan-in and fan-out merged on the (a, b) pair). Rows with a free
    // Int/Ext side keep one merged self-loop.
    g.flow_edges = long(g.rows.size()); // every row starts with a self-loop
    std::set<std::pair<std::size_t, std::size_t>> used_pairs;
    std::vector<std::size_t> free_in(g.rows.size()), free_out(g.rows.size());
    for (std::size_t i = 0; i < g.rows.size(); ++i) free_in[i] = free_out[i] = i;
    int stale = 0;
    while (g.flow_edges < flow_target && stale < 400 && g.comps.size() > 1 && !free_in.empty() &&
           !free_out.empty()) {
        const std::size_t in_slot = rng.below(free_in.size());
        const std::size_t out_slot = rng.below(free_out.size());
        const std::size_t bi = free_in[in_slot];
        const std::size_t ai = free_out[out_slot];
        GenRow& b = g.rows[bi];
        GenRow& a = g.rows[ai];
        if (a.comp == b.comp || !used_pairs.insert({a.comp, b.comp}).second) {
            ++stale;
            continue;
        }
        long contribution = long(g.comps[a.comp].rows.size() + g.comps[b.comp].rows.size()) - 1;
        if (b.output_used) --contribution; // b loses its self-loop
        if (a.input_used) --contribution;
        if (g.flow_edges + contribution > flow_target + 2) {
            used_pairs.erase({a.comp, b.comp});
            ++stale;
            continue;
        }
        b.input_used = true;
        b.input_from = g.comps[a.comp].id;
        a.output_used = true;
        a.output_to = g.comps[b.comp].id;
        std::swap(free_in[in_slot], free_in.back());
        free_in.pop_back();
        std::swap(free_out[out_slot], free_out.back());
        free_out.pop_back();
        g.flow_edges += contribution;
        stale = 0;
    }
    return g;
}

std::string labels_for_role(const DemoSpec& spec, std::size_t role, Rng& rng, std::string& t2,
                            std::string& t3) {
    std::size_t t1 = t1_of_role(role);
    if (rng.uniform() < spec.t1_noise) t1 = (t1 + 1) % 9;

    const std::size_t in_group = (role % 8) < 4 ? 0 : 1;
    std::size_t t2_idx = (t1_of_role(role) * 2 + in_group) % 13;
    if (rng.uniform() < spec.t2_noise) t2_idx = (t2_idx + 1) % 13;
    t2 = rng.uniform() < spec.t2_missing ? "-" : "G" + pad2(t2_idx);

    std::size_t t3_idx = (t2_idx * 3 + (role + 3) % 8) % 14;
    if (rng.uniform() < spec.t3_noise) t3_idx = (t3_idx + 1) % 14;
    t3 = rng.uniform() < spec.t3_missing ? "-" : "H" + pad2(t3_idx);

    return "F" + std::to_string(t1);
}

void emit_graph(std::ostringstream& out, const DemoSpec& spec, const GenGraph& g, Rng& rng) {
    bool first = true;
    for (const auto& comp : g.comps) {
        for (std::size_t ri : comp.rows) {
            const GenRow& row = g.rows[ri];
            out << (first ? g.system : std::string("-")) << ',';
            first = false;
            out << comp.id << ',';
            out << "part" << pad2(comp.part) << ',';
            out << (comp.parent ? std::to_string(*comp.parent) : "-") << ',';
            out << comp.material << ',';
            out << in_flow_of_role(row.role) << ',';
            if (row.input_from >= 0) {
                out << row.input_from;
            } else {
                out << (rng.bernoulli(0.5) ? "Int" : "Ext");
            }
            out << ',';
            out << out_flow_of_role(row.role) << ',';
            if (row.output_to >= 0) {
                out << row.output_to;
            } else {
                out << (rng.bernoulli(0.5) ? "Int" : "Ext");
            }
            out << ',';
            std::string t2, t3;
            const std::string t1 = labels_for_role(spec, row.role, rng, t2, t3);
            out << t1 << ',' << t2 << ',' << t3 << '\n';
        }
    }
}

} // namespace

DemoSpec small_preset(std::uint64_t seed) {
    DemoSpec spec;
    spec.seed = seed;
    return spec;
}

DemoSpec large_preset(std::uint64_t seed) {
    DemoSpec spec;
    spec.seed = seed;
    spec.n_graphs = 160;
    spec.total_nodes = 15636;
    spec.flow_per_node = 5.5976;     // ~547.0 flow edges per graph
    spec.assembly_per_node = 2.4937; // ~243.7 assembly edges per graph
    spec.size_sigma = 0.85;
    return spec;
}

std::string generate_csv(const DemoSpec& spec) {
    Rng root(spec.seed);
    Rng size_rng = root.fork("sizes");
    const auto sizes = graph_sizes(spec, size_rng);

    std::ostringstream out;
    out << "system,id,component,child_of,material,input_flow,input_from,output_flow,output_to,"
           "func_t1,func_t2,func_t3\n";

    // Per-graph edge budgets carry the accumulated drift so corpus totals
    // land on target even though single graphs round and saturate.
    double flow_drift = 0.0;
    double assembly_drift = 0.0;
    for (std::size_t i = 0; i < spec.n_graphs; ++i) {
        Rng graph_rng = root.fork(i + 100);
        const double flow_ideal = spec.flow_per_node * double(sizes[i]);
        const double assembly_ideal = spec.assembly_per_node * double(sizes[i]);
        const long flow_target = std::lround(flow_ideal + flow_drift);
        const long assembly_target = std::lround(assembly_ideal + assembly_drift);
        const GenGraph g =
            build_graph(spec, i, sizes[i], flow_target, assembly_target, graph_rng);
        flow_drift += flow_ideal - double(g.flow_edges);
        assembly_drift += assembly_ideal - double(g.assembly_edges);
        Rng label_rng = root.fork(i + 5000);
        emit_graph(out, spec, g, label_rng);
    }
    return out.str();
}

} // namespace funcgraph::demo
