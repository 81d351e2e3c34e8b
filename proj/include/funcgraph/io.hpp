#pragma once

#include <string>
#include <vector>

#include "funcgraph/graph.hpp"

namespace funcgraph {

/// Writes to "<path>.partial" and renames on success, so a crash never
/// leaves a plausible-looking truncated output behind.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Graph interchange: one JSON document per graph; a corpus file is JSON
// lines (one document per line).
std::string graph_to_json(const RelationalGraph& g);
RelationalGraph graph_from_json(const std::string& text);

void save_corpus(const std::string& path, const std::vector<RelationalGraph>& graphs);
std::vector<RelationalGraph> load_corpus(const std::string& path);

// Vocabularies as ordered term lists.
std::string vocabularies_to_json(const Vocabularies& v);
Vocabularies vocabularies_from_json(const std::string& text);

void save_vocabularies(const std::string& path, const Vocabularies& v);
Vocabularies load_vocabularies(const std::string& path);

} // namespace funcgraph
