#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "funcgraph/ingest.hpp"

using namespace funcgraph;

namespace {

// The vegetable-peeler export: one component row without function data
// (the root assembly), 8 blade data points, 6 handle data points.
const char* kPeelerCsv =
    "system,id,component,child_of,material,input_flow,input_from,output_flow,output_to,"
    "func_t1,func_t2,func_t3\n"
    "Vegetable Peeler,1,Unclassified,-,-,-,-,-,-,-,-,-\n"
    "-,2,Blade,1,Steel,Solid,Int,Solid,Int,Branch,Separate,-\n"
    "-,2,Blade,1,Steel,Solid,Ext,Solid,Int,Channel,Import,-\n"
    "-,2,Blade,1,Steel,Solid,Int,Solid,Ext,Channel,Export,-\n"
    "-,2,Blade,1,Steel,Solid,Int,Solid,Ext,Channel,Export,-\n"
    "-,2,Blade,1,Steel,Mechanical,3,Mechanical,Ext,Channel,Export,-\n"
    "-,2,Blade,1,Steel,Solid,Int,Solid,Int,Channel,Guide,-\n"
    "-,2,Blade,1,Steel,Status,Int,Status,Ext,Signal,Indicate,-\n"
    "-,2,Blade,1,Steel,Solid,1,Solid,int,Support,Secure,-\n"
    "-,3,Handle,1,Plastic,Control,Ext,Control,Int,Channel,Import,-\n"
    "-,3,Handle,1,Plastic,Human,Ext,Human,Int,Channel,Import,-\n"
    "-,3,Handle,1,Plastic,Human Energy,Ext,Human Energy,Int,Channel,Import,-\n"
    "-,3,Handle,1,Plastic,Human,Int,Human,Ext,Channel,Import,-\n"
    "-,3,Handle,1,Plastic,Human Energy,Int,Mechanical,2,Convert,-,-\n"
    "-,3,Handle,1,Plastic,Solid,2,Solid,Int,Support,Secure,-\n";

std::vector<ArtifactRow> parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_rows(in);
}

} // namespace

TEST_CASE("peeler export parses into typed rows") {
    const auto rows = parse_text(kPeelerCsv);
    REQUIRE(rows.size() == 15); // root row + 14 data points
    int with_function = 0;
    std::set<long> components_under_root;
    for (const auto& r : rows) {
        CHECK(r.system == "Vegetable Peeler"); // continuation rows inherit
        if (!r.func_t1.empty()) ++with_function;
        if (r.child_of == 1) components_under_root.insert(r.id);
    }
    CHECK(with_function == 14);
    CHECK(components_under_root == std::set<long>{2, 3});

    CHECK(rows[0].input.kind == FlowRef::Kind::Missing);
    CHECK(rows[5].input.kind == FlowRef::Kind::Component);
    CHECK(rows[5].input.component_id == 3);
    CHECK(rows[8].output.kind == FlowRef::Kind::Internal); // "int" parses case-insensitively
    CHECK(rows[1].func_t2 == "Separate");
    CHECK(rows[1].func_t3.empty());
}

TEST_CASE("empty file with header parses to an empty list") {
    CHECK(parse_text(std::string(kCsvHeader) + "\n").empty());
}

TEST_CASE("bad header is rejected") {
    CHECK_THROWS_AS(parse_text("a,b,c\n1,2,3\n"), ParseError);
}

TEST_CASE("child_of referencing an absent id is a parse error") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Sys,1,Widget,9,Steel,Solid,Int,Solid,Int,Branch,-,-\n";
    CHECK_THROWS_AS(parse_text(csv), ParseError);
}

TEST_CASE("flow qualifier referencing an absent component id is a qualifier error") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Sys,1,Widget,-,Steel,Solid,7,Solid,Int,Branch,-,-\n";
    CHECK_THROWS_AS(parse_text(csv), QualifierError);
}

TEST_CASE("unknown qualifier token is a qualifier error") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Sys,1,Widget,-,Steel,Solid,sideways,Solid,Int,Branch,-,-\n";
    CHECK_THROWS_AS(parse_text(csv), QualifierError);
}

TEST_CASE("flow term without a qualifier is a qualifier error") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Sys,1,Widget,-,Steel,Solid,-,Solid,Int,Branch,-,-\n";
    CHECK_THROWS_AS(parse_text(csv), QualifierError);
}

TEST_CASE("reserved terms are rejected at the ingest boundary") {
    const std::string flow_none = std::string(kCsvHeader) +
                                  "\n"
                                  "Sys,1,Widget,-,Steel,none,Int,Solid,Int,Branch,-,-\n";
    CHECK_THROWS_AS(parse_text(flow_none), ReservedTermConflict);
    const std::string t1_unspec = std::string(kCsvHeader) +
                                  "\n"
                                  "Sys,1,Widget,-,Steel,Solid,Int,Solid,Int,unspecified,-,-\n";
    CHECK_THROWS_AS(parse_text(t1_unspec), ReservedTermConflict);
}

TEST_CASE("malformed rows carry their line number") {
    const std::string csv = std::string(kCsvHeader) + "\nSys,notanumber,Widget\n";
    try {
        parse_text(csv);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("peeler graph: nodes per data point, hand-traced flow edges") {
    const auto rows = parse_text(kPeelerCsv);
    const auto result = build_graphs(rows);
    REQUIRE(result.graphs.size() == 1);
    const auto& g = result.graphs[0];
    CHECK(g.graph_id == "Vegetable Peeler");
    CHECK(g.nodes.size() == 14); // the root row has no function -> no node

    // Blade rows are nodes 0..7, handle rows are 8..13.
    CHECK(g.nodes[0].component_basis == "Blade");
    CHECK(g.nodes[8].component_basis == "Handle");
    CHECK(g.nodes[0].system_type == "unknown"); // export carries no system type
    CHECK(g.nodes[0].label_t1 == "Branch");
    CHECK(g.nodes[0].label_t2 == "Separate");
    CHECK(g.nodes[0].label_t3 == kUnspecified);

    // No assembly edges: blade and handle are siblings and their common
    // parent has no data points.
    const auto assembly = std::count_if(g.edges.begin(), g.edges.end(), [](const EdgeRecord& e) {
        return e.kind == EdgeKind::Assembly;
    });
    CHECK(assembly == 0);

    // Hand trace: every node gets a merged Int/Ext self-loop (14); the
    // blade's "Mechanical from 3" input fans in from all 6 handle nodes;
    // the handle's "Mechanical to 2" output fans out to all 8 blade nodes;
    // the producer-consumer pair (handle node 12 -> blade node 4) merges
    // into a single edge; the handle's "Solid from 2" input fans in from
    // all 8 blade nodes. 14 + 6 + 8 - 1 + 8 = 35.
    CHECK(g.edges.size() == 35);
    const auto self_loops = std::count_if(g.edges.begin(), g.edges.end(), [](const EdgeRecord& e) {
        return e.src == e.dst;
    });
    CHECK(self_loops == 14);

    const auto paired = std::find_if(g.edges.begin(), g.edges.end(), [](const EdgeRecord& e) {
        return e.src == 12 && e.dst == 4;
    });
    REQUIRE(paired != g.edges.end());
    CHECK(paired->in_flow == "Mechanical");
    CHECK(paired->out_flow == "Mechanical");

    // The unpaired fan-out edges carry only their own side's term.
    const auto fan = std::find_if(g.edges.begin(), g.edges.end(), [](const EdgeRecord& e) {
        return e.src == 12 && e.dst == 0;
    });
    REQUIRE(fan != g.edges.end());
    CHECK(fan->in_flow == kNoFlow);
    CHECK(fan->out_flow == "Mechanical");
}

TEST_CASE("assembly edges link every node pair of parent and child components") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Sys,1,Frame,-,Steel,Solid,Int,Solid,Int,Support,-,-\n"
                            "Sys,1,Frame,-,Steel,Solid,Ext,Solid,Int,Support,-,-\n"
                            "Sys,2,Bolt,1,Steel,Solid,Int,Solid,Int,Couple,-,-\n"
                            "Sys,2,Bolt,1,Steel,Solid,Ext,Solid,Int,Couple,-,-\n"
                            "Sys,2,Bolt,1,Steel,Solid,Int,Solid,Ext,Couple,-,-\n";
    const auto result = build_graphs(parse_text(csv));
    const auto& g = result.graphs[0];
    CHECK(g.nodes.size() == 5);
    long assembly = 0;
    for (const auto& e : g.edges) assembly += e.kind == EdgeKind::Assembly;
    CHECK(assembly == 2 * 3); // full bipartite between the two node sets
}

TEST_CASE("one-row system builds a single-node graph") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Solo,1,Widget,-,Steel,Solid,Int,Solid,Ext,Branch,-,-\n";
    const auto result = build_graphs(parse_text(csv));
    REQUIRE(result.graphs.size() == 1);
    CHECK(result.graphs[0].nodes.size() == 1);
    long assembly = 0;
    for (const auto& e : result.graphs[0].edges) assembly += e.kind == EdgeKind::Assembly;
    CHECK(assembly == 0);
}

TEST_CASE("systems without tier-1 functions are rejected or dropped") {
    const std::string csv = std::string(kCsvHeader) +
                            "\n"
                            "Empty,1,Widget,-,Steel,-,-,-,-,-,-,-\n"
                            "Full,1,Widget,-,Steel,Solid,Int,Solid,Int,Branch,-,-\n";
    const auto rows = parse_text(csv);
    CHECK_THROWS_AS(build_graphs(rows), SystemRejected);

    BuildOptions opts;
    opts.drop_incomplete = true;
    const auto result = build_graphs(rows, opts);
    CHECK(result.graphs.size() == 1);
    CHECK(result.rejected_systems == std::vector<std::string>{"Empty"});
}

TEST_CASE("node count equals function-carrying row count") {
    const auto rows = parse_text(kPeelerCsv);
    const auto result = build_graphs(rows);
    std::size_t nodes = 0;
    for (const auto& g : result.graphs) nodes += g.nodes.size();
    std::size_t function_rows = 0;
    for (const auto& r : rows) function_rows += !r.func_t1.empty();
    CHECK(nodes == function_rows);
}

namespace {

std::vector<RelationalGraph> synthetic_graphs(std::size_t count) {
    std::vector<RelationalGraph> graphs;
    for (std::size_t i = 0; i < count; ++i) {
        RelationalGraph g;
        g.graph_id = "g" + std::to_string(i);
        NodeRecord n;
        n.node_id = 0;
        n.component_basis = "c";
        n.system_name = g.graph_id;
        n.system_type = "t";
        n.material = "m";
        n.label_t1 = "f";
        g.nodes.push_back(n);
        graphs.push_back(std::move(g));
    }
    return graphs;
}

} // namespace

TEST_CASE("split sizes follow the floor-to-train rule") {
    SUBCASE("160 graphs -> 96/16/48") {
        const auto split = split_graphs(synthetic_graphs(160), 1);
        CHECK(split.train.size() == 96);
        CHECK(split.val.size() == 16);
        CHECK(split.test.size() == 48);
    }
    SUBCASE("10 graphs -> 6/1/3") {
        const auto split = split_graphs(synthetic_graphs(10), 1);
        CHECK(split.train.size() == 6);
        CHECK(split.val.size() == 1);
        CHECK(split.test.size() == 3);
    }
}

TEST_CASE("split is deterministic for a fixed seed and changes across seeds") {
    const auto graphs = synthetic_graphs(20);
    const auto a = split_graphs(graphs, 7);
    const auto b = split_graphs(graphs, 7);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    const auto c = split_graphs(graphs, 8);
    CHECK(a.train != c.train);
}

TEST_CASE("split partitions the ids exactly once") {
    const auto graphs = synthetic_graphs(31);
    const auto split = split_graphs(graphs, 3);
    std::set<std::string> all;
    for (const auto& part : {split.train, split.val, split.test}) {
        for (const auto& id : part) CHECK(all.insert(id).second);
    }
    CHECK(all.size() == 31);
}

TEST_CASE("fewer than three graphs cannot be split") {
    CHECK_THROWS_AS(split_graphs(synthetic_graphs(2), 1), SplitError);
}
