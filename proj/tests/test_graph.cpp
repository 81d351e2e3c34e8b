#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "funcgraph/graph.hpp"
#include "funcgraph/io.hpp"
#include "funcgraph/rng.hpp"

using namespace funcgraph;

namespace {

NodeRecord make_node(long id, std::string comp, std::string sys, std::string type,
                     std::string mat, std::string t1, std::string t2 = kUnspecified,
                     std::string t3 = kUnspecified) {
    NodeRecord n;
    n.node_id = id;
    n.component_basis = std::move(comp);
    n.system_name = std::move(sys);
    n.system_type = std::move(type);
    n.material = std::move(mat);
    n.label_t1 = std::move(t1);
    n.label_t2 = std::move(t2);
    n.label_t3 = std::move(t3);
    n.source_component_id = id;
    return n;
}

EdgeRecord flow_edge(long src, long dst, std::string in, std::string out) {
    EdgeRecord e;
    e.src = src;
    e.dst = dst;
    e.kind = EdgeKind::Flow;
    e.in_flow = std::move(in);
    e.out_flow = std::move(out);
    return e;
}

EdgeRecord assembly_edge(long src, long dst) {
    EdgeRecord e;
    e.src = src;
    e.dst = dst;
    e.kind = EdgeKind::Assembly;
    return e;
}

RelationalGraph peeler_fixture() {
    RelationalGraph g;
    g.graph_id = "peeler";
    g.nodes.push_back(make_node(0, "blade", "peeler", "kitchen", "steel", "branch", "separate"));
    g.nodes.push_back(make_node(1, "handle", "peeler", "kitchen", "plastic", "channel", "import"));
    g.nodes.push_back(make_node(2, "guard", "peeler", "kitchen", "plastic", "support"));
    g.edges.push_back(flow_edge(1, 0, "signal", kNoFlow));
    g.edges.push_back(flow_edge(0, 0, "solid", "solid"));
    g.edges.push_back(assembly_edge(0, 1));
    return g;
}

} // namespace

TEST_CASE("singleton corpus yields size-1 vocabularies") {
    RelationalGraph g;
    g.graph_id = "solo";
    g.nodes.push_back(make_node(0, "A", "B", "C", "D", "t1a", "t2a", "t3a"));
    const auto v = build_vocabularies({g});
    CHECK(v.component_basis.size() == 1);
    CHECK(v.system_name.size() == 1);
    CHECK(v.system_type.size() == 1);
    CHECK(v.material.size() == 1);
    CHECK(v.flow.size() == 1); // just "none"
    CHECK(v.flow.terms[0] == kNoFlow);
    CHECK(v.label_t1.size() == 1);
    CHECK(v.label_t2.size() == 2); // t2a + unspecified
    CHECK(v.label_t3.size() == 2);
    CHECK(v.node_dim() == 4);
}

TEST_CASE("flow vocabulary adds the reserved none term") {
    const auto v = build_vocabularies({peeler_fixture()});
    CHECK(v.flow.terms == std::vector<std::string>{"none", "signal", "solid"});
    CHECK(v.edge_dim() == 2 * 3 + 1);
}

TEST_CASE("vocabulary ordering is sorted and deterministic") {
    const auto v1 = build_vocabularies({peeler_fixture()});
    const auto v2 = build_vocabularies({peeler_fixture()});
    CHECK(v1.component_basis.terms == std::vector<std::string>{"blade", "guard", "handle"});
    CHECK(v1.hash() == v2.hash());
}

TEST_CASE("empty corpus is rejected") {
    CHECK_THROWS_AS(build_vocabularies({}), CorpusEmpty);
}

TEST_CASE("node without a tier-1 function is invalid") {
    RelationalGraph g = peeler_fixture();
    g.nodes[0].label_t1 = kUnspecified;
    CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("assembly edges may not carry flows or self-loop") {
    RelationalGraph g = peeler_fixture();
    SUBCASE("flow terms on assembly") {
        g.edges[2].in_flow = "solid";
        CHECK_THROWS_AS(g.validate(), Error);
    }
    SUBCASE("assembly self-loop") {
        g.edges[2].dst = g.edges[2].src;
        CHECK_THROWS_AS(g.validate(), Error);
    }
}

TEST_CASE("encoding doubles assembly edges and keeps flow direction") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e = encode_graph(g, v);
    // 2 flow edges + 1 assembly edge -> 2 + 2 directed entries
    CHECK(e.num_edges() == 4);
    CHECK(e.edge_index[0] == std::pair<std::size_t, std::size_t>{1, 0});
    CHECK(e.edge_index[1] == std::pair<std::size_t, std::size_t>{0, 0}); // flow self-loop
    CHECK(e.edge_index[2] == std::pair<std::size_t, std::size_t>{0, 1}); // assembly u->v
    CHECK(e.edge_index[3] == std::pair<std::size_t, std::size_t>{1, 0}); // assembly v->u
}

TEST_CASE("node feature rows carry exactly one 1 per block") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e = encode_graph(g, v);
    CHECK(e.node_features.cols() == v.node_dim());
    const std::size_t blocks[4] = {v.component_basis.size(), v.system_name.size(),
                                   v.system_type.size(), v.material.size()};
    for (std::size_t i = 0; i < e.num_nodes(); ++i) {
        std::size_t offset = 0;
        double total = 0.0;
        for (std::size_t b = 0; b < 4; ++b) {
            double block_sum = 0.0;
            for (std::size_t j = 0; j < blocks[b]; ++j) block_sum += e.node_features.at(i, offset + j);
            CHECK(block_sum == 1.0);
            offset += blocks[b];
            total += block_sum;
        }
        CHECK(total == 4.0);
    }
}

TEST_CASE("hand-computed one-hot indices for a known node") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e = encode_graph(g, v);
    // Sorted vocabularies: component {blade,guard,handle}, system {peeler},
    // type {kitchen}, material {plastic,steel}.
    // Node 0 = blade/peeler/kitchen/steel -> indices 0, 3, 4, 6.
    CHECK(e.node_features.at(0, 0) == 1.0);
    CHECK(e.node_features.at(0, 3) == 1.0);
    CHECK(e.node_features.at(0, 4) == 1.0);
    CHECK(e.node_features.at(0, 6) == 1.0);
    CHECK(e.node_features.at(0, 1) == 0.0);
    CHECK(e.node_features.at(0, 5) == 0.0);
}

TEST_CASE("edge feature rows sum to 2 for flow and 3 for assembly") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e = encode_graph(g, v);
    const std::size_t d_e = e.edge_features.cols();
    CHECK(d_e == v.edge_dim());
    for (std::size_t r = 0; r < e.num_edges(); ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d_e; ++j) sum += e.edge_features.at(r, j);
        const bool assembly = e.edge_features.at(r, d_e - 1) == 1.0;
        CHECK(sum == (assembly ? 3.0 : 2.0));
    }
}

TEST_CASE("encoding is deterministic") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e1 = encode_graph(g, v);
    const auto e2 = encode_graph(g, v);
    CHECK(e1.node_features.data() == e2.node_features.data());
    CHECK(e1.edge_features.data() == e2.edge_features.data());
    CHECK(e1.edge_index == e2.edge_index);
    CHECK(e1.labels_t1 == e2.labels_t1);
}

TEST_CASE("decode inverts the categorical encoding") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    const auto e = encode_graph(g, v);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto d = decode_node(e, v, i);
        CHECK(d.component_basis == g.nodes[i].component_basis);
        CHECK(d.system_name == g.nodes[i].system_name);
        CHECK(d.system_type == g.nodes[i].system_type);
        CHECK(d.material == g.nodes[i].material);
    }
    const auto d0 = decode_edge(e, v, 0);
    CHECK(d0.in_flow == "signal");
    CHECK(d0.out_flow == kNoFlow);
    CHECK_FALSE(d0.assembly);
    const auto d2 = decode_edge(e, v, 2);
    CHECK(d2.assembly);
}

TEST_CASE("round-trip through JSON preserves the graph") {
    const auto g = peeler_fixture();
    const auto text = graph_to_json(g);
    const auto g2 = graph_from_json(text);
    CHECK(g2.graph_id == g.graph_id);
    REQUIRE(g2.nodes.size() == g.nodes.size());
    REQUIRE(g2.edges.size() == g.edges.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        CHECK(g2.nodes[i].component_basis == g.nodes[i].component_basis);
        CHECK(g2.nodes[i].label_t3 == g.nodes[i].label_t3);
    }
    CHECK(g2.edges[0].in_flow == g.edges[0].in_flow);
    CHECK(g2.edges[2].kind == EdgeKind::Assembly);
}

TEST_CASE("vocabularies survive a JSON round trip") {
    const auto v = build_vocabularies({peeler_fixture()});
    const auto v2 = vocabularies_from_json(vocabularies_to_json(v));
    CHECK(v2.hash() == v.hash());
    CHECK(v2.flow.terms == v.flow.terms);
}

TEST_CASE("unknown terms and dangling edges are reported") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});
    RelationalGraph bad = g;
    bad.nodes[0].material = "titanium";
    CHECK_THROWS_AS(encode_graph(bad, v), UnknownTerm);
    RelationalGraph dangling = g;
    dangling.edges[0].src = 99;
    CHECK_THROWS_AS(encode_graph(dangling, v), DanglingEdge);
}

TEST_CASE("feature masks shrink the encoding") {
    const auto g = peeler_fixture();
    const auto v = build_vocabularies({g});

    SUBCASE("component basis only") {
        FeatureMask m = FeatureMask::all();
        m.node_fields = {NodeField::ComponentBasis};
        const auto e = encode_graph(g, v, m);
        CHECK(e.node_features.cols() == v.component_basis.size());
    }
    SUBCASE("no node features leaves a constant scalar") {
        FeatureMask m = FeatureMask::all();
        m.node_fields = {};
        const auto e = encode_graph(g, v, m);
        CHECK(e.node_features.cols() == 1);
        for (std::size_t i = 0; i < e.num_nodes(); ++i) CHECK(e.node_features.at(i, 0) == 1.0);
    }
    SUBCASE("flow-only drops assembly edges and the indicator") {
        FeatureMask m = FeatureMask::all();
        m.edge_mode = EdgeMode::FlowOnly;
        const auto e = encode_graph(g, v, m);
        CHECK(e.num_edges() == 2);
        CHECK(e.edge_features.cols() == 2 * v.flow.size());
    }
    SUBCASE("assembly-only keeps the doubled assembly edges") {
        FeatureMask m = FeatureMask::all();
        m.edge_mode = EdgeMode::AssemblyOnly;
        const auto e = encode_graph(g, v, m);
        CHECK(e.num_edges() == 2);
        CHECK(e.edge_features.cols() == 1);
    }
    SUBCASE("featureless keeps topology with a constant edge scalar") {
        FeatureMask m = FeatureMask::all();
        m.edge_mode = EdgeMode::Featureless;
        const auto e = encode_graph(g, v, m);
        CHECK(e.num_edges() == 4);
        CHECK(e.edge_features.cols() == 1);
        for (std::size_t r = 0; r < e.num_edges(); ++r) CHECK(e.edge_features.at(r, 0) == 1.0);
    }
    SUBCASE("material flows plus assembly filters by flow term") {
        FeatureMask m = FeatureMask::all();
        m.edge_mode = EdgeMode::MaterialFlowAssembly;
        m.material_flow_terms = {"solid"};
        const auto e = encode_graph(g, v, m);
        // signal-flow edge dropped; solid self-loop + doubled assembly stay
        CHECK(e.num_edges() == 3);
    }
}

TEST_CASE("stats on a triangle of flow edges") {
    RelationalGraph g;
    g.graph_id = "triangle";
    for (long i = 0; i < 3; ++i) {
        g.nodes.push_back(make_node(i, "c" + std::to_string(i), "sys", "type", "mat", "f"));
    }
    g.edges.push_back(flow_edge(0, 1, "solid", kNoFlow));
    g.edges.push_back(flow_edge(1, 2, "solid", kNoFlow));
    g.edges.push_back(flow_edge(2, 0, "solid", kNoFlow));
    const auto report = graph_stats({g});
    CHECK(report.per_graph[0].mean_degree == doctest::Approx(2.0));
    CHECK(report.per_graph[0].density == doctest::Approx(0.5));
    CHECK(report.total_assembly_edges == 0);
    CHECK(report.assembly_fraction == 0.0);
    CHECK(report.nodes.mean == doctest::Approx(3.0));
}

TEST_CASE("summary statistics match hand-computed values") {
    const auto s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.stddev == doctest::Approx(1.2909944487));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    CHECK(s.q25 == doctest::Approx(1.75));
    CHECK(s.q50 == doctest::Approx(2.5));
    CHECK(s.q75 == doctest::Approx(3.25));
    CHECK(s.skewness == doctest::Approx(0.0));
}
