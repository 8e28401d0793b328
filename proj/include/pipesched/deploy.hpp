#pragma once

// Post-inference repair, the pipeline cost proxy, and gap-to-optimal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipesched/graph.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

/// Whether the co-stage rule is enforced.
enum class CoStageScope {
  /// All children of a node with two or more children share one stage.
  kAllFanouts,
  /// Only dependency violations are repaired.
  kNone,
};

struct RepairOptions {
  CoStageScope co_stage = CoStageScope::kAllFanouts;
};

struct RepairResult {
  Schedule schedule;
  /// Stages after both rules reach their fixpoint, before empty stages are
  /// squeezed out.
  std::vector<int> pushed;
  /// Requested stages minus nonempty stages left after repair.
  int stage_shortfall = 0;
  /// Nodes whose stage changed before renumbering.
  int moved_nodes = 0;
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Groups of nodes that must share a stage: siblings under a common fan-out,
// closed under "two groups that depend on each other collapse into one".
inline std::vector<int> co_stage_groups(const ComputeDag& dag, const Adjacency& adj, bool siblings) {
  const int n = dag.size();
  UnionFind uf(n);
  if (siblings)
    for (NodeIndex u = 0; u < n; ++u)
      if (adj.children[u].size() >= 2)
        for (NodeIndex c : adj.children[u]) uf.unite(adj.children[u].front(), c);

  // Collapse cycles in the quotient graph until it is acyclic.
  for (;;) {
    std::vector<std::vector<int>> succ(n);
    for (const auto& e : dag.edges) {
      const int a = uf.find(e.parent), b = uf.find(e.child);
      if (a != b) succ[a].push_back(b);
    }
    // Iterative Tarjan over group roots.
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int counter = 0;
    bool merged = false;
    for (int root = 0; root < n; ++root) {
      if (uf.find(root) != root || index[root] >= 0) continue;
      std::vector<std::pair<int, std::size_t>> call{{root, 0}};
      index[root] = low[root] = counter++;
      stack.push_back(root);
      on_stack[root] = true;
      while (!call.empty()) {
        auto& [v, next] = call.back();
        if (next < succ[v].size()) {
          const int w = succ[v][next++];
          if (index[w] < 0) {
            index[w] = low[w] = counter++;
            stack.push_back(w);
            on_stack[w] = true;
            call.push_back({w, 0});
          } else if (on_stack[w]) {
            low[v] = std::min(low[v], index[w]);
          }
        } else {
          const int done = v;
          call.pop_back();
          if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
          if (low[done] == index[done]) {
            int w;
            do {
              w = stack.back();
              stack.pop_back();
              on_stack[w] = false;
              if (w != done) {
                uf.unite(w, done);
                merged = true;
              }
            } while (w != done);
          }
        }
      }
    }
    if (!merged) break;
  }
  std::vector<int> group(n);
  for (int v = 0; v < n; ++v) group[v] = uf.find(v);
  return group;
}

}  // namespace detail

/// Makes an arbitrary stage assignment deployable.
///
/// Co-stage rule: the children of any node with two or more children move to
/// the earliest stage currently held by any of them. Dependency rule: a child
/// placed before its parent is pushed forward to the parent's stage. Both
/// rules are solved together in one pass: each co-stage group takes its
/// earliest member stage, then groups are pushed forward in topological
/// order, which is the fixpoint of alternating the two rules. Empty stages
/// are then squeezed out and stages renumbered; the number lost is reported
/// as the shortfall.
inline RepairResult repair_schedule(const Schedule& input, const ComputeDag& dag, RepairOptions opts = {}) {
  const Adjacency adj = make_adjacency(dag);
  const std::vector<NodeIndex> topo = asap_order(asap_levels(dag, adj));
  const int n = std::max(1, input.num_stages);
  const int size = dag.size();

  std::vector<int> original = input.stage_of;
  original.resize(size, 0);
  for (int& s : original) s = std::clamp(s, 0, n - 1);

  const std::vector<int> group = detail::co_stage_groups(dag, adj, opts.co_stage == CoStageScope::kAllFanouts);
  std::vector<int> group_stage(size, n);
  for (NodeIndex v = 0; v < size; ++v) group_stage[group[v]] = std::min(group_stage[group[v]], original[v]);

  // Groups form a DAG, so propagating along edges in a topological order of
  // the quotient reaches the fixpoint. A node-level topological order can
  // revisit a group, so iterate until stable; each sweep only raises stages.
  for (bool changed = true; changed;) {
    changed = false;
    for (NodeIndex v : topo)
      for (NodeIndex p : adj.parents[v]) {
        const int gp = group[p], gv = group[v];
        if (group_stage[gv] < group_stage[gp]) {
          group_stage[gv] = group_stage[gp];
          changed = true;
        }
      }
  }

  RepairResult out;
  std::vector<int> stage(size);
  for (NodeIndex v = 0; v < size; ++v) {
    stage[v] = group_stage[group[v]];
    out.moved_nodes += stage[v] != original[v];
  }
  out.pushed = stage;
  std::vector<int> remap(n, -1);
  for (int s : stage) remap[s] = 0;
  int next = 0;
  for (int s = 0; s < n; ++s)
    if (remap[s] == 0) remap[s] = next++;
  for (int& s : stage) s = remap[s];
  out.schedule = {next, std::move(stage)};
  out.stage_shortfall = n - next;
  return out;
}

struct CostModelConfig {
  Bytes cache_bytes = 8LL * 1024 * 1024;
  /// Costs are per MiB of parameters.
  double alpha = 1.0;  // every parameter byte streamed through a stage
  double beta = 64.0;  // extra for bytes that spill past the cache
  double kappa = 1.0;  // per inter-stage hop
};

struct StageCost {
  Bytes memory = 0;
  Bytes on_cache = 0;
  Bytes off_cache = 0;
  double latency = 0.0;
};

struct CostReport {
  std::vector<StageCost> stages;
  double bottleneck = 0.0;
  double hop_cost = 0.0;
  /// bottleneck + hop_cost
  double pipeline_latency = 0.0;
};

inline CostReport cost_model(const Schedule& s, const ComputeDag& dag, const CostModelConfig& cfg = {}) {
  if (!is_valid_schedule(s, dag)) throw FeasibilityError("cost_model: schedule is not feasible");
  constexpr double kMiB = 1024.0 * 1024.0;
  const ScheduleObjective obj = objective_of(s, dag);
  CostReport r;
  for (Bytes mem : obj.per_stage_memory) {
    StageCost c;
    c.memory = mem;
    c.on_cache = std::min(mem, cfg.cache_bytes);
    c.off_cache = std::max<Bytes>(0, mem - cfg.cache_bytes);
    c.latency = cfg.alpha * (static_cast<double>(mem) / kMiB) + cfg.beta * (static_cast<double>(c.off_cache) / kMiB);
    r.bottleneck = std::max(r.bottleneck, c.latency);
    r.stages.push_back(c);
  }
  r.hop_cost = cfg.kappa * (s.num_stages - 1);
  r.pipeline_latency = r.bottleneck + r.hop_cost;
  return r;
}

inline nlohmann::json cost_to_json(const CostReport& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& c : r.stages)
    stages.push_back({{"memory", c.memory}, {"on_cache", c.on_cache}, {"off_cache", c.off_cache}, {"latency", c.latency}});
  return {{"stages", stages}, {"bottleneck", r.bottleneck}, {"hop_cost", r.hop_cost}, {"pipeline", r.pipeline_latency}};
}

struct GapReport {
  /// |peak_candidate - peak_exact| / peak_exact
  double relative_gap = 0.0;
  /// |a_i - b_i| after sorting both per-stage vectors descending; the shorter
  /// one is padded with zeros.
  std::vector<Bytes> per_stage_abs_diff;
};

inline GapReport gap_to_optimal(const ScheduleObjective& candidate, const ScheduleObjective& exact) {
  GapReport g;
  const double denom = static_cast<double>(std::max<Bytes>(1, exact.peak_stage_memory));
  g.relative_gap = std::abs(static_cast<double>(candidate.peak_stage_memory - exact.peak_stage_memory)) / denom;
  std::vector<Bytes> a = candidate.per_stage_memory, b = exact.per_stage_memory;
  std::sort(a.begin(), a.end(), std::greater<>());
  std::sort(b.begin(), b.end(), std::greater<>());
  const std::size_t len = std::max(a.size(), b.size());
  a.resize(len, 0);
  b.resize(len, 0);
  for (std::size_t i = 0; i < len; ++i) g.per_stage_abs_diff.push_back(std::abs(a[i] - b[i]));
  return g;
}

}  // namespace pipesched
