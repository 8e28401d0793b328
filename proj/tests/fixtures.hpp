#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pipesched/graph.hpp"

namespace pipesched::testing {

inline ComputeDag make_dag(const std::vector<Bytes>& memory, const std::vector<std::pair<int, int>>& edges,
                           std::string name = "fixture") {
  ComputeDag dag;
  dag.name = std::move(name);
  for (std::size_t i = 0; i < memory.size(); ++i) dag.nodes.push_back({"op" + std::to_string(i), 0, memory[i]});
  for (auto [p, c] : edges) dag.edges.push_back({p, c});
  assign_node_ids(dag);
  return dag;
}

inline ComputeDag chain(const std::vector<Bytes>& memory) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < static_cast<int>(memory.size()); ++i) edges.push_back({i, i + 1});
  return make_dag(memory, edges, "chain");
}

// a -> b, a -> c, b -> d, c -> d
inline ComputeDag diamond(Bytes m = 1) { return make_dag({m, m, m, m}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, "diamond"); }

}  // namespace pipesched::testing
