#pragma once

// Exact minimum-peak-stage-memory pipeline partitioning.
//
// A schedule assigns every node a stage in [0, n) such that parents never sit
// in a later stage than their children and every stage is nonempty. The
// objective is the largest per-stage sum of memory_bytes. Ties between optimal
// schedules are broken deterministically, see StageSearch.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"
#include "pipesched/heuristic.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

struct ExactOptions {
  /// Zero disables the limit. Exceeding it throws OracleTimeout.
  std::chrono::milliseconds time_limit{0};
};

struct ExactStats {
  std::uint64_t states_visited = 0;
};

namespace detail {

inline Bytes ceil_div(Bytes a, Bytes b) { return (a + b - 1) / b; }

// Node set over ASAP ranks, one bit per node.
struct NodeSet {
  std::vector<std::uint64_t> words;

  explicit NodeSet(int size = 0) : words((size + 63) / 64, 0) {}
  [[nodiscard]] bool test(int i) const { return (words[i >> 6] >> (i & 63)) & 1ULL; }
  void set(int i) { words[i >> 6] |= 1ULL << (i & 63); }
  void reset(int i) { words[i >> 6] &= ~(1ULL << (i & 63)); }
  friend bool operator==(const NodeSet&, const NodeSet&) = default;
};

struct NodeSetHash {
  std::size_t operator()(const NodeSet& s) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (std::uint64_t w : s.words) h = (h ^ w) * 0x100000001b3ULL + (h >> 29);
    return static_cast<std::size_t>(h);
  }
};

// Stages are filled one at a time. Stage k receives a set S such that the
// nodes assigned so far plus S stay closed under parents. Memo entries record,
// per (stage, assigned set), either the exact minimum over completions of the
// largest remaining stage load, or a proven lower bound on it.
//
// Candidate sets are enumerated by deciding nodes in ASAP order with
// "include" tried before "exclude". Among optima the schedule returned is the
// first in that enumeration: earlier stages hold ASAP-earlier nodes.
class StageSearch {
 public:
  StageSearch(const ComputeDag& dag, int n, ExactOptions opts) : dag_(dag), n_(n), opts_(opts) {
    const Adjacency adj = make_adjacency(dag);
    order_ = asap_order(asap_levels(dag, adj));
    size_ = dag.size();
    std::vector<int> rank(size_);
    for (int r = 0; r < size_; ++r) rank[order_[r]] = r;
    weight_.resize(size_);
    parents_.resize(size_);
    for (int r = 0; r < size_; ++r) {
      const NodeIndex v = order_[r];
      weight_[r] = dag.nodes[v].memory_bytes;
      for (NodeIndex p : adj.parents[v]) parents_[r].push_back(rank[p]);
    }
    memo_.resize(n_);
  }

  ScheduleResult solve(ExactStats* stats) {
    start_ = std::chrono::steady_clock::now();
    const NodeSet empty(size_);
    // Optima sit just above the even-split bound on typical inputs, so the
    // limit grows geometrically from there; the list schedule caps it. Memo
    // entries from a failed round stay valid as lower bounds.
    const Bytes total = total_memory(dag_);
    const Bytes seed = list_schedule(dag_, n_).objective.peak_stage_memory;
    const Bytes floor_value = std::max(ceil_div(total, n_), max_node_memory(dag_));
    Bytes excess = std::max<Bytes>(1, floor_value / 4096);
    Bytes optimum = 0;
    for (;;) {
      const Bytes limit = std::min(floor_value + excess, seed + 1);
      optimum = value(0, empty, total, limit);
      if (optimum < limit) break;
      excess *= 4;
    }

    // Rebuild the first optimal chain in enumeration order.
    Schedule sched{n_, std::vector<int>(size_, n_ - 1)};
    NodeSet assigned = empty;
    Bytes remaining = total_memory(dag_);
    for (int k = 0; k + 1 < n_; ++k) {
      bool placed = false;
      enumerate(assigned, remaining, n_ - k, optimum + 1, [&](const NodeSet& next, Bytes w) {
        if (value(k + 1, next, remaining - w, optimum + 1) > optimum) return false;
        for (int r = 0; r < size_; ++r)
          if (next.test(r) && !assigned.test(r)) sched.stage_of[order_[r]] = k;
        assigned = next;
        remaining -= w;
        placed = true;
        return true;
      });
      if (!placed) throw Error("exact scheduler: failed to rebuild the optimal chain");
    }
    if (stats) stats->states_visited = visited_;

    ScheduleResult r;
    r.schedule = std::move(sched);
    r.objective = objective_of(r.schedule, dag_);
    return r;
  }

 private:
  struct Entry {
    Bytes value = 0;
    bool exact = false;
  };

  static constexpr Bytes kUnbounded = std::numeric_limits<Bytes>::max() / 4;

  void check_clock() {
    if (opts_.time_limit.count() <= 0 || (visited_ & 255) != 0) return;
    if (std::chrono::steady_clock::now() - start_ > opts_.time_limit)
      throw OracleTimeout("exact scheduler exceeded " + std::to_string(opts_.time_limit.count()) +
                          " ms on graph '" + dag_.name + "'");
  }

  // Smallest achievable largest load over stages k..n-1 given `assigned`
  // already placed in stages < k. Returns a value >= limit when no completion
  // with every load below `limit` exists.
  Bytes value(int k, const NodeSet& assigned, Bytes remaining, Bytes limit) {
    ++visited_;
    check_clock();
    const int stages_left = n_ - k;
    int unassigned = 0;
    Bytes heaviest = 0;
    for (int r = 0; r < size_; ++r)
      if (!assigned.test(r)) {
        ++unassigned;
        heaviest = std::max(heaviest, weight_[r]);
      }
    if (unassigned < stages_left) return kUnbounded;
    if (stages_left == 1) return remaining;

    const Bytes floor_value = std::max(ceil_div(remaining, stages_left), heaviest);
    if (floor_value >= limit) return floor_value;

    auto& memo = memo_[k];
    if (auto it = memo.find(assigned); it != memo.end()) {
      if (it->second.exact || it->second.value >= limit) return it->second.value;
    }

    Bytes best = limit;
    bool found = false;
    enumerate(assigned, remaining, stages_left, limit, [&](const NodeSet& next, Bytes w) {
      if (w >= best) return false;
      const Bytes rest = value(k + 1, next, remaining - w, best);
      const Bytes candidate = std::max(w, rest);
      if (candidate < best) {
        best = candidate;
        found = true;
      }
      return best <= floor_value;
    });

    Entry e;
    if (found) {
      e = {best, true};
    } else {
      e = {limit, false};
    }
    memo.insert_or_assign(assigned, e);
    return e.value;
  }

  // Calls visit(next, w) for each nonempty S, in enumeration order, with
  // next = assigned + S closed under parents, w = weight(S) < limit, enough
  // weight left in S to keep the later stages below limit, and enough nodes
  // left for the later stages. visit returns true to stop.
  template <typename Visit>
  void enumerate(const NodeSet& assigned, Bytes remaining, int stages_left, Bytes limit, Visit&& visit) {
    const Bytes cap = limit - 1;
    const Bytes later_cap = cap > kUnbounded / (stages_left) ? kUnbounded : cap * (stages_left - 1);
    const Bytes need = remaining - later_cap;  // S must weigh at least this

    std::vector<int> free_ranks;
    for (int r = 0; r < size_; ++r)
      if (!assigned.test(r)) free_ranks.push_back(r);
    const int free_count = static_cast<int>(free_ranks.size());
    const int max_take = free_count - (stages_left - 1);
    std::vector<Bytes> tail(free_count + 1, 0);
    for (int i = free_count - 1; i >= 0; --i) tail[i] = tail[i + 1] + weight_[free_ranks[i]];

    NodeSet next = assigned;
    bool stop = false;
    auto rec = [&](auto&& self, int i, Bytes w, int taken) -> void {
      if (stop) return;
      if (w + tail[i] < need) return;
      if (i == free_count) {
        if (taken > 0 && w >= need) stop = visit(next, w);
        return;
      }
      const int r = free_ranks[i];
      bool closed = true;
      for (int p : parents_[r])
        if (!next.test(p)) {
          closed = false;
          break;
        }
      if (closed && taken < max_take && w + weight_[r] <= cap) {
        next.set(r);
        self(self, i + 1, w + weight_[r], taken + 1);
        next.reset(r);
        if (stop) return;
      }
      self(self, i + 1, w, taken);
    };
    rec(rec, 0, 0, 0);
  }

  const ComputeDag& dag_;
  int n_;
  ExactOptions opts_;
  int size_ = 0;
  std::vector<NodeIndex> order_;
  std::vector<Bytes> weight_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::unordered_map<NodeSet, Entry, NodeSetHash>> memo_;
  std::uint64_t visited_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Globally optimal schedule by branch-and-bound. Throws Infeasible when
/// n > |V| and OracleTimeout when opts.time_limit is exceeded.
inline ScheduleResult exact_schedule(const ComputeDag& dag, int n, ExactOptions opts = {},
                                     ExactStats* stats = nullptr) {
  require_stage_count(dag, n);
  detail::StageSearch search(dag, n, opts);
  return search.solve(stats);
}

inline constexpr int kBruteForceMaxNodes = 12;

/// Enumerates every dependency-feasible assignment with all stages nonempty.
/// Shares nothing with exact_schedule beyond the schedule types.
inline ScheduleResult brute_force_schedule(const ComputeDag& dag, int n) {
  if (dag.size() > kBruteForceMaxNodes)
    throw TooLarge("brute force is limited to " + std::to_string(kBruteForceMaxNodes) + " nodes");
  require_stage_count(dag, n);
  const int size = dag.size();
  const Adjacency adj = make_adjacency(dag);

  std::vector<int> stage(size, -1);
  std::vector<int> best;
  Bytes best_peak = std::numeric_limits<Bytes>::max();

  auto consistent = [&](NodeIndex v, int s) {
    for (NodeIndex p : adj.parents[v])
      if (p < v && stage[p] > s) return false;
    for (NodeIndex c : adj.children[v])
      if (c < v && stage[c] < s) return false;
    return true;
  };

  auto recurse = [&](auto&& self, NodeIndex v) -> void {
    if (v == size) {
      std::vector<Bytes> load(n, 0);
      for (NodeIndex u = 0; u < size; ++u) load[stage[u]] += dag.nodes[u].memory_bytes;
      std::vector<bool> used(n, false);
      for (int s : stage) used[s] = true;
      if (std::find(used.begin(), used.end(), false) != used.end()) return;
      const Bytes peak = *std::max_element(load.begin(), load.end());
      if (peak < best_peak) {
        best_peak = peak;
        best = stage;
      }
      return;
    }
    for (int s = 0; s < n; ++s) {
      if (!consistent(v, s)) continue;
      stage[v] = s;
      self(self, v + 1);
      stage[v] = -1;
    }
  };
  recurse(recurse, 0);

  ScheduleResult r;
  r.schedule = {n, best};
  r.objective = objective_of(r.schedule, dag);
  return r;
}

}  // namespace pipesched
