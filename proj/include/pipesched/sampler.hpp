#pragma once

// Synthetic DAG sampler for training and benchmarking.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"

namespace pipesched {

struct SamplerConfig {
  int num_nodes = 30;
  int max_degree = 3;
  Bytes min_bytes = 1024;
  Bytes max_bytes = 4 * 1024 * 1024;
  std::uint64_t seed = 0;
};

inline void check(const SamplerConfig& cfg) {
  if (cfg.num_nodes < 2) throw ConfigError("sampler: num_nodes must be >= 2");
  if (cfg.max_degree < 1) throw ConfigError("sampler: max_degree must be >= 1");
  if (cfg.max_degree > cfg.num_nodes - 1)
    throw ConfigError("sampler: max_degree " + std::to_string(cfg.max_degree) +
                      " cannot be attained with " + std::to_string(cfg.num_nodes) + " nodes");
  if (cfg.min_bytes < 0 || cfg.min_bytes > cfg.max_bytes)
    throw ConfigError("sampler: memory range must satisfy 0 <= min <= max");
}

/// splitmix64 step; used to derive independent seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return mix_seed(mix_seed(seed ^ mix_seed(stream)) + index);
}

/// Node i > 0 draws a parent count k uniformly from {1..min(D, i)} and then k
/// distinct parents uniformly from nodes 0..i-1. Node 0 is the only source and
/// node 1 always hangs off it, so no node is isolated. If no node reached
/// in-degree D, the last node is redrawn with exactly D parents.
inline ComputeDag sample_dag(const SamplerConfig& cfg) {
  check(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<Bytes> memory(cfg.min_bytes, cfg.max_bytes);

  ComputeDag dag;
  dag.name = "synthetic_v" + std::to_string(cfg.num_nodes) + "_d" +
             std::to_string(cfg.max_degree) + "_s" + std::to_string(cfg.seed);
  dag.nodes.resize(cfg.num_nodes);
  for (int i = 0; i < cfg.num_nodes; ++i) {
    dag.nodes[i].op_name = "op_" + std::to_string(i);
    dag.nodes[i].memory_bytes = memory(rng);
  }

  std::vector<NodeIndex> pool;
  auto draw_parents = [&](NodeIndex child, int count) {
    pool.resize(child);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < count; ++k) {
      std::uniform_int_distribution<int> pick(k, child - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    std::vector<NodeIndex> chosen(pool.begin(), pool.begin() + count);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  };

  std::vector<std::vector<NodeIndex>> parents(cfg.num_nodes);
  int attained = 0;
  for (NodeIndex v = 1; v < cfg.num_nodes; ++v) {
    std::uniform_int_distribution<int> count(1, std::min(cfg.max_degree, v));
    parents[v] = draw_parents(v, count(rng));
    attained = std::max(attained, static_cast<int>(parents[v].size()));
  }
  if (attained < cfg.max_degree)
    parents[cfg.num_nodes - 1] = draw_parents(cfg.num_nodes - 1, cfg.max_degree);

  for (NodeIndex v = 1; v < cfg.num_nodes; ++v)
    for (NodeIndex p : parents[v]) dag.edges.push_back({p, v});
  assign_node_ids(dag);
  return dag;
}

}  // namespace pipesched
