#pragma once

// Computational DAG representation and topological leveling.

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pipesched/error.hpp"

namespace pipesched {

using NodeIndex = int;
using Bytes = std::int64_t;

struct OpNode {
  std::string op_name;
  std::int32_t node_id = 0;
  Bytes memory_bytes = 0;

  friend bool operator==(const OpNode&, const OpNode&) = default;
};

struct Edge {
  NodeIndex parent = 0;
  NodeIndex child = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Directed acyclic graph of operators. Node order defines node indices.
struct ComputeDag {
  std::string name;
  std::vector<OpNode> nodes;
  std::vector<Edge> edges;

  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }

  friend bool operator==(const ComputeDag&, const ComputeDag&) = default;
};

/// Parent and child lists per node, each sorted by ascending node index.
struct Adjacency {
  std::vector<std::vector<NodeIndex>> parents;
  std::vector<std::vector<NodeIndex>> children;
};

inline Adjacency make_adjacency(const ComputeDag& dag) {
  Adjacency adj;
  adj.parents.resize(dag.nodes.size());
  adj.children.resize(dag.nodes.size());
  for (const auto& e : dag.edges) {
    adj.parents[e.child].push_back(e.parent);
    adj.children[e.parent].push_back(e.child);
  }
  for (auto& p : adj.parents) std::sort(p.begin(), p.end());
  for (auto& c : adj.children) std::sort(c.begin(), c.end());
  return adj;
}

inline Bytes total_memory(const ComputeDag& dag) {
  Bytes total = 0;
  for (const auto& n : dag.nodes) total += n.memory_bytes;
  return total;
}

inline Bytes max_node_memory(const ComputeDag& dag) {
  Bytes m = 0;
  for (const auto& n : dag.nodes) m = std::max(m, n.memory_bytes);
  return m;
}

inline int max_in_degree(const ComputeDag& dag) {
  std::vector<int> deg(dag.nodes.size(), 0);
  int best = 0;
  for (const auto& e : dag.edges) best = std::max(best, ++deg[e.child]);
  return best;
}

// 64-bit FNV-1a folded to 31 bits so the id is non-negative in an int32 slot.
inline std::int32_t hash_node_id(std::string_view op_name, std::uint64_t salt = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (char c : op_name) mix(static_cast<unsigned char>(c));
  if (salt != 0) {
    mix('#');
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(salt >> (8 * i)));
  }
  h ^= h >> 32;
  return static_cast<std::int32_t>(h & 0x7fffffffULL);
}

/// Fills node_id for every node. An id already taken in this graph is
/// rehashed with an increasing occurrence salt until it is unique.
inline void assign_node_ids(ComputeDag& dag) {
  std::unordered_set<std::int32_t> taken;
  taken.reserve(dag.nodes.size() * 2);
  for (auto& node : dag.nodes) {
    std::uint64_t salt = 0;
    std::int32_t id = hash_node_id(node.op_name, salt);
    while (!taken.insert(id).second) id = hash_node_id(node.op_name, ++salt);
    node.node_id = id;
  }
}

namespace detail {

// Locates one edge that closes a cycle among nodes Kahn's algorithm could not
// drain.
inline Edge find_back_edge(const ComputeDag& dag, const Adjacency& adj) {
  const int n = dag.size();
  std::vector<int> color(n, 0);
  std::vector<std::pair<NodeIndex, std::size_t>> stack;
  for (NodeIndex root = 0; root < n; ++root) {
    if (color[root] != 0) continue;
    stack.push_back({root, 0});
    color[root] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < adj.children[u].size()) {
        NodeIndex v = adj.children[u][next++];
        if (color[v] == 1) return {u, v};
        if (color[v] == 0) {
          color[v] = 1;
          stack.push_back({v, 0});
        }
      } else {
        color[u] = 2;
        stack.pop_back();
      }
    }
  }
  return {-1, -1};
}

}  // namespace detail

/// ASAP level per node: 1 for sources, otherwise 1 + max parent level.
inline std::vector<int> asap_levels(const ComputeDag& dag, const Adjacency& adj) {
  const int n = dag.size();
  std::vector<int> indeg(n, 0);
  for (NodeIndex v = 0; v < n; ++v) indeg[v] = static_cast<int>(adj.parents[v].size());
  std::vector<int> level(n, 1);
  std::vector<NodeIndex> ready;
  for (NodeIndex v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int drained = 0;
  while (!ready.empty()) {
    NodeIndex u = ready.back();
    ready.pop_back();
    ++drained;
    for (NodeIndex v : adj.children[u]) {
      level[v] = std::max(level[v], level[u] + 1);
      if (--indeg[v] == 0) ready.push_back(v);
    }
  }
  if (drained != n) {
    Edge e = detail::find_back_edge(dag, adj);
    throw CyclicGraph("graph '" + dag.name + "' has a cycle through edge " +
                      std::to_string(e.parent) + " -> " + std::to_string(e.child));
  }
  return level;
}

// Same result as above over a flat child list; no per-node allocations.
inline std::vector<int> asap_levels(const ComputeDag& dag) {
  const int n = dag.size();
  std::vector<int> start(n + 1, 0), indeg(n, 0);
  for (const Edge& e : dag.edges) {
    ++start[e.parent + 1];
    ++indeg[e.child];
  }
  for (int v = 0; v < n; ++v) start[v + 1] += start[v];
  std::vector<NodeIndex> child(dag.edges.size());
  {
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (const Edge& e : dag.edges) child[fill[e.parent]++] = e.child;
  }
  std::vector<int> level(n, 1);
  std::vector<NodeIndex> ready;
  ready.reserve(n);
  for (NodeIndex v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int drained = 0;
  while (!ready.empty()) {
    const NodeIndex u = ready.back();
    ready.pop_back();
    ++drained;
    for (int k = start[u]; k < start[u + 1]; ++k) {
      const NodeIndex v = child[k];
      level[v] = std::max(level[v], level[u] + 1);
      if (--indeg[v] == 0) ready.push_back(v);
    }
  }
  if (drained != n) return asap_levels(dag, make_adjacency(dag));  // reports the cycle
  return level;
}

/// Nodes sorted by (asap level, index). Always a topological order.
inline std::vector<NodeIndex> asap_order(const std::vector<int>& levels) {
  // counting sort keeps index order within a level
  int top = 0;
  for (int l : levels) top = std::max(top, l);
  std::vector<int> start(top + 2, 0);
  for (int l : levels) ++start[l + 1];
  for (int l = 0; l <= top; ++l) start[l + 1] += start[l];
  std::vector<NodeIndex> order(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) order[start[levels[i]]++] = static_cast<NodeIndex>(i);
  return order;
}

/// Checks index ranges, self-loops, duplicate edges, memory signs and
/// acyclicity. Throws ParseError for structural problems and CyclicGraph for
/// cycles.
inline void validate(const ComputeDag& dag) {
  const int n = dag.size();
  for (int i = 0; i < n; ++i) {
    if (dag.nodes[i].memory_bytes < 0)
      throw ParseError("node " + std::to_string(i) + ": negative memory_bytes");
    if (dag.nodes[i].op_name.empty())
      throw ParseError("node " + std::to_string(i) + ": empty op name");
  }
  std::vector<Edge> sorted = dag.edges;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const Edge& e = sorted[k];
    if (e.parent < 0 || e.parent >= n || e.child < 0 || e.child >= n)
      throw ParseError("edge " + std::to_string(k) + ": node index out of range");
    if (e.parent == e.child)
      throw ParseError("edge " + std::to_string(k) + ": self-loop on node " +
                       std::to_string(e.parent));
  }
  std::sort(sorted.begin(), sorted.end());
  if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end())
    throw ParseError("duplicate edge " + std::to_string(it->parent) + " -> " +
                     std::to_string(it->child));
  (void)asap_levels(dag);
}

}  // namespace pipesched
