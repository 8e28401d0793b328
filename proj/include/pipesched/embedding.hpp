#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"

namespace pipesched {

/// Integer feature rows, one per node:
///   [asap_level, parent_level_1..D, parent_id_1..D, node_id, memory_bytes]
/// Missing parents (sources, or in-degree below D) use level 0 and id -1.
struct GraphEmbedding {
  int max_degree = 0;
  int num_rows = 0;
  std::vector<std::int64_t> values;  // row-major, num_rows x width()

  [[nodiscard]] int width() const { return 2 * max_degree + 3; }
  [[nodiscard]] std::int64_t at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width() + col];
  }

  [[nodiscard]] int level_col() const { return 0; }
  [[nodiscard]] int parent_level_col(int slot) const { return 1 + slot; }
  [[nodiscard]] int parent_id_col(int slot) const { return 1 + max_degree + slot; }
  [[nodiscard]] int node_id_col() const { return 1 + 2 * max_degree; }
  [[nodiscard]] int memory_col() const { return 2 + 2 * max_degree; }
};

inline GraphEmbedding embed_graph(const ComputeDag& dag, int max_degree) {
  if (max_degree < 1) throw ConfigError("embedding max_degree must be >= 1");
  const Adjacency adj = make_adjacency(dag);
  const std::vector<int> level = asap_levels(dag, adj);

  GraphEmbedding emb;
  emb.max_degree = max_degree;
  emb.num_rows = dag.size();
  emb.values.assign(static_cast<std::size_t>(emb.num_rows) * emb.width(), 0);

  for (NodeIndex v = 0; v < dag.size(); ++v) {
    const auto& parents = adj.parents[v];
    if (static_cast<int>(parents.size()) > max_degree)
      throw DegreeOverflow("node " + std::to_string(v) + " ('" + dag.nodes[v].op_name +
                           "') has in-degree " + std::to_string(parents.size()) +
                           " > " + std::to_string(max_degree));
    std::int64_t* row = &emb.values[static_cast<std::size_t>(v) * emb.width()];
    row[emb.level_col()] = level[v];
    for (int s = 0; s < max_degree; ++s) {
      const bool present = s < static_cast<int>(parents.size());
      row[emb.parent_level_col(s)] = present ? level[parents[s]] : 0;
      row[emb.parent_id_col(s)] = present ? dag.nodes[parents[s]].node_id : -1;
    }
    row[emb.node_id_col()] = dag.nodes[v].node_id;
    row[emb.memory_col()] = dag.nodes[v].memory_bytes;
  }
  return emb;
}

}  // namespace pipesched
