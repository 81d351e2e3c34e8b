#pragma once

// Small separable corpora for trainer tests: the component basis term
// fully determines all three tier labels, so a model that reads node
// features can reach perfect accuracy.

#include <string>
#include <vector>

#include "funcgraph/graph.hpp"
#include "funcgraph/rng.hpp"

namespace fixtures {

inline std::vector<funcgraph::RelationalGraph> separable_corpus(std::size_t n_graphs,
                                                                std::size_t nodes_per_graph,
                                                                std::uint64_t seed) {
    using namespace funcgraph;
    num::Rng rng(seed);
    std::vector<RelationalGraph> graphs;
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        RelationalGraph g;
        g.graph_id = "fixture" + std::to_string(gi);
        for (std::size_t i = 0; i < nodes_per_graph; ++i) {
            const std::size_t role = rng.below(6);
            NodeRecord n;
            n.node_id = long(i);
            n.component_basis = "comp" + std::to_string(role);
            n.system_name = g.graph_id;
            n.system_type = "fixture";
            n.material = "mat" + std::to_string(role % 2);
            n.label_t1 = "f" + std::to_string(role % 3);
            n.label_t2 = "g" + std::to_string(role % 4);
            n.label_t3 = "h" + std::to_string(role % 5);
            n.source_component_id = long(role);
            g.nodes.push_back(std::move(n));
        }
        for (std::size_t i = 0; i + 1 < nodes_per_graph; ++i) {
            EdgeRecord e;
            e.src = long(i);
            e.dst = long(i + 1);
            e.kind = EdgeKind::Flow;
            e.in_flow = "flow" + std::to_string(rng.below(2));
            e.out_flow = kNoFlow;
            g.edges.push_back(std::move(e));
        }
        if (nodes_per_graph >= 2) {
            EdgeRecord a;
            a.src = 0;
            a.dst = long(nodes_per_graph - 1);
            a.kind = EdgeKind::Assembly;
            g.edges.push_back(std::move(a));
        }
        graphs.push_back(std::move(g));
    }
    return graphs;
}

} // namespace fixtures
