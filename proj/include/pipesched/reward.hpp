#pragma once

// Imitation reward: node orderings are mapped to stage vectors and compared by
// cosine similarity.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

struct RewardConfig {
  double epsilon = 1e-8;
};

/// How an ordering is cut into stages.
enum class FillRule {
  /// Each stage is packed in order up to the smallest bottleneck any
  /// contiguous n-way split of the ordering can reach.
  kMinBottleneck,
  /// Each stage is packed in order up to total/n.
  kEvenTarget,
};

namespace detail {

// Smallest B such that the ordering splits into at most n contiguous runs of
// weight <= B.
inline Bytes min_bottleneck(const std::vector<NodeIndex>& order, const ComputeDag& dag, int n) {
  Bytes lo = 0, hi = 0;
  for (NodeIndex v : order) {
    lo = std::max(lo, dag.nodes[v].memory_bytes);
    hi += dag.nodes[v].memory_bytes;
  }
  auto runs_needed = [&](Bytes cap) {
    int runs = 1;
    Bytes load = 0;
    for (NodeIndex v : order) {
      const Bytes w = dag.nodes[v].memory_bytes;
      if (load + w > cap) {
        ++runs;
        load = 0;
      }
      load += w;
    }
    return runs;
  };
  while (lo < hi) {
    const Bytes mid = lo + (hi - lo) / 2;
    if (runs_needed(mid) <= n)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace detail

/// Maps a node ordering to a stage assignment by walking it and filling stages
/// one after another. Stages are monotone along the ordering, so a topological
/// ordering always yields a dependency-feasible schedule.
inline Schedule seq_to_schedule(const std::vector<NodeIndex>& order, const ComputeDag& dag, int n,
                                FillRule rule = FillRule::kMinBottleneck) {
  if (static_cast<int>(order.size()) != dag.size())
    throw ShapeError("seq_to_schedule: ordering has " + std::to_string(order.size()) + " entries for " +
                     std::to_string(dag.size()) + " nodes");
  if (dag.size() < n)
    throw Infeasible("seq_to_schedule: " + std::to_string(dag.size()) + " nodes cannot fill " +
                     std::to_string(n) + " stages");
  if (n < 1) throw ConfigError("stage count must be >= 1");
  if (rule == FillRule::kEvenTarget) {
    const Bytes total = total_memory(dag);
    return fill_stages(order, dag, n, [&](Bytes load) { return load * n > total; });
  }
  const Bytes cap = detail::min_bottleneck(order, dag, n);
  return fill_stages(order, dag, n, [&](Bytes load) { return load > cap; });
}

/// sum(a*b) / max(|a|*|b|, eps)
inline double cosine_reward(std::span<const int> s, std::span<const int> s_prime, double epsilon = 1e-8) {
  if (s.size() != s_prime.size())
    throw ShapeError("cosine_reward: lengths " + std::to_string(s.size()) + " and " +
                     std::to_string(s_prime.size()) + " differ");
  double dot = 0.0, ss = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    dot += static_cast<double>(s[i]) * s_prime[i];
    ss += static_cast<double>(s[i]) * s[i];
    tt += static_cast<double>(s_prime[i]) * s_prime[i];
  }
  return dot / std::max(std::sqrt(ss) * std::sqrt(tt), epsilon);
}

/// The same cosine applied to the raw orderings; kept for diagnostics.
inline double sequence_reward(std::span<const NodeIndex> pi, std::span<const NodeIndex> gamma,
                              double epsilon = 1e-8) {
  return cosine_reward(pi, gamma, epsilon);
}

}  // namespace pipesched
