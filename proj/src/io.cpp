#include "funcgraph/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace funcgraph {

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

json node_to_json(const NodeRecord& n) {
    return json{{"node_id", n.node_id},
                {"component_basis", n.component_basis},
                {"system_name", n.system_name},
                {"system_type", n.system_type},
                {"material", n.material},
                {"label_t1", n.label_t1},
                {"label_t2", n.label_t2},
                {"label_t3", n.label_t3},
                {"source_component_id", n.source_component_id}};
}

NodeRecord node_from_json(const json& j) {
    NodeRecord n;
    n.node_id = j.at("node_id").get<long>();
    n.component_basis = j.at("component_basis").get<std::string>();
    n.system_name = j.at("system_name").get<std::string>();
    n.system_type = j.at("system_type").get<std::string>();
    n.material = j.at("material").get<std::string>();
    n.label_t1 = j.at("label_t1").get<std::string>();
    n.label_t2 = j.at("label_t2").get<std::string>();
    n.label_t3 = j.at("label_t3").get<std::string>();
    n.source_component_id = j.at("source_component_id").get<long>();
    return n;
}

json edge_to_json(const EdgeRecord& e) {
    return json{{"src", e.src},
                {"dst", e.dst},
                {"kind", e.kind == EdgeKind::Assembly ? "assembly" : "flow"},
                {"in_flow", e.in_flow},
                {"out_flow", e.out_flow}};
}

EdgeRecord edge_from_json(const json& j) {
    EdgeRecord e;
    e.src = j.at("src").get<long>();
    e.dst = j.at("dst").get<long>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "assembly") {
        e.kind = EdgeKind::Assembly;
    } else if (kind == "flow") {
        e.kind = EdgeKind::Flow;
    } else {
        throw IoError("unknown edge kind '" + kind + "'");
    }
    e.in_flow = j.at("in_flow").get<std::string>();
    e.out_flow = j.at("out_flow").get<std::string>();
    return e;
}

} // namespace

std::string graph_to_json(const RelationalGraph& g) {
    json j;
    j["graph_id"] = g.graph_id;
    j["nodes"] = json::array();
    for (const auto& n : g.nodes) j["nodes"].push_back(node_to_json(n));
    j["edges"] = json::array();
    for (const auto& e : g.edges) j["edges"].push_back(edge_to_json(e));
    return j.dump();
}

RelationalGraph graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid graph JSON: ") + e.what());
    }
    RelationalGraph g;
    try {
        g.graph_id = j.at("graph_id").get<std::string>();
        for (const auto& n : j.at("nodes")) g.nodes.push_back(node_from_json(n));
        for (const auto& e : j.at("edges")) g.edges.push_back(edge_from_json(e));
    } catch (const json::exception& e) {
        throw IoError(std::string("graph JSON missing field: ") + e.what());
    }
    g.validate();
    return g;
}

void save_corpus(const std::string& path, const std::vector<RelationalGraph>& graphs) {
    std::ostringstream out;
    for (const auto& g : graphs) out << graph_to_json(g) << '\n';
    write_file_atomic(path, out.str());
}

std::vector<RelationalGraph> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<RelationalGraph> graphs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        graphs.push_back(graph_from_json(line));
    }
    return graphs;
}

std::string vocabularies_to_json(const Vocabularies& v) {
    json j;
    for (const Vocabulary* voc : {&v.component_basis, &v.system_name, &v.system_type, &v.material,
                                  &v.flow, &v.label_t1, &v.label_t2, &v.label_t3}) {
        j[voc->name] = voc->terms;
    }
    return j.dump(2);
}

Vocabularies vocabularies_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid vocabulary JSON: ") + e.what());
    }
    auto load = [&](const char* name) {
        if (!j.contains(name)) throw IoError(std::string("vocabulary JSON missing '") + name + "'");
        std::set<std::string> terms;
        for (const auto& t : j.at(name)) terms.insert(t.get<std::string>());
        if (terms.size() != j.at(name).size()) {
            throw IoError(std::string("vocabulary '") + name + "' has duplicate terms");
        }
        return Vocabulary::from_terms(name, terms);
    };
    Vocabularies v;
    v.component_basis = load("component_basis");
    v.system_name = load("system_name");
    v.system_type = load("system_type");
    v.material = load("material");
    v.flow = load("flow");
    v.label_t1 = load("label_t1");
    v.label_t2 = load("label_t2");
    v.label_t3 = load("label_t3");
    return v;
}

void save_vocabularies(const std::string& path, const Vocabularies& v) {
    write_file_atomic(path, vocabularies_to_json(v));
}

Vocabularies load_vocabularies(const std::string& path) {
    return vocabularies_from_json(read_file(path));
}

} // namespace funcgraph
