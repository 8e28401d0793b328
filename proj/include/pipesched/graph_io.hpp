#pragma once

// JSON graph files:
//   {"name": str, "nodes": [{"op": str, "memory_bytes": int}, ...],
//    "edges": [[parent_idx, child_idx], ...]}

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"

namespace pipesched {

inline nlohmann::json graph_to_json(const ComputeDag& dag) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : dag.nodes) nodes.push_back({{"op", n.op_name}, {"memory_bytes", n.memory_bytes}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : dag.edges) edges.push_back({e.parent, e.child});
  return {{"name", dag.name}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline ComputeDag graph_from_json(const nlohmann::json& j, const std::string& origin = "<json>") {
  auto fail = [&](const std::string& where, const std::string& what) -> ParseError {
    return ParseError(origin + ": " + where + ": " + what);
  };
  if (!j.is_object()) throw fail("top level", "expected an object");
  ComputeDag dag;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw fail("name", "expected a string");
    dag.name = j["name"].get<std::string>();
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw fail("nodes", "missing or not an array");
  if (!j.contains("edges") || !j["edges"].is_array()) throw fail("edges", "missing or not an array");

  const auto& nodes = j["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    if (!n.is_object()) throw fail(where, "expected an object");
    if (!n.contains("op") || !n["op"].is_string() || n["op"].get<std::string>().empty())
      throw fail(where + ".op", "missing or not a non-empty string");
    if (!n.contains("memory_bytes") || !n["memory_bytes"].is_number_integer())
      throw fail(where + ".memory_bytes", "missing or not an integer");
    const auto mem = n["memory_bytes"].get<Bytes>();
    if (mem < 0) throw fail(where + ".memory_bytes", "negative");
    dag.nodes.push_back({n["op"].get<std::string>(), 0, mem});
  }

  const auto& edges = j["edges"];
  const auto count = static_cast<long long>(dag.nodes.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string where = "edges[" + std::to_string(k) + "]";
    const auto& e = edges[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw fail(where, "expected [parent_idx, child_idx]");
    const auto p = e[0].get<long long>();
    const auto c = e[1].get<long long>();
    for (auto [idx, field] : {std::pair{p, 0}, std::pair{c, 1}})
      if (idx < 0 || idx >= count)
        throw fail(where + "[" + std::to_string(field) + "]",
                   "references node " + std::to_string(idx) + " but only " +
                       std::to_string(count) + " nodes are declared");
    dag.edges.push_back({static_cast<NodeIndex>(p), static_cast<NodeIndex>(c)});
  }

  try {
    validate(dag);
  } catch (const CyclicGraph&) {
    throw;
  } catch (const ParseError& e) {
    throw fail("structure", e.what());
  }
  assign_node_ids(dag);
  return dag;
}

inline ComputeDag load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return graph_from_json(j, path.string());
}

inline void save_graph(const ComputeDag& dag, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << graph_to_json(dag).dump(1) << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace pipesched
