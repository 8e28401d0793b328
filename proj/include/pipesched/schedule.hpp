#pragma once

// Stage assignments, their objective, and the schedule file format.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"

namespace pipesched {

struct Schedule {
  int num_stages = 0;
  std::vector<int> stage_of;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ScheduleObjective {
  Bytes peak_stage_memory = 0;
  std::vector<Bytes> per_stage_memory;

  friend bool operator==(const ScheduleObjective&, const ScheduleObjective&) = default;
};

struct ScheduleResult {
  Schedule schedule;
  ScheduleObjective objective;
};

inline ScheduleObjective objective_of(const Schedule& s, const ComputeDag& dag) {
  ScheduleObjective obj;
  obj.per_stage_memory.assign(s.num_stages, 0);
  for (NodeIndex v = 0; v < dag.size(); ++v) obj.per_stage_memory.at(s.stage_of.at(v)) += dag.nodes[v].memory_bytes;
  obj.peak_stage_memory = obj.per_stage_memory.empty()
                              ? 0
                              : *std::max_element(obj.per_stage_memory.begin(), obj.per_stage_memory.end());
  return obj;
}

inline bool dependency_feasible(const Schedule& s, const ComputeDag& dag) {
  if (static_cast<int>(s.stage_of.size()) != dag.size()) return false;
  for (const auto& e : dag.edges)
    if (s.stage_of[e.parent] > s.stage_of[e.child]) return false;
  return true;
}

/// Dependency-feasible, every stage index in range, every stage nonempty.
inline bool is_valid_schedule(const Schedule& s, const ComputeDag& dag) {
  if (static_cast<int>(s.stage_of.size()) != dag.size() || s.num_stages < 1) return false;
  std::vector<bool> used(s.num_stages, false);
  for (int st : s.stage_of) {
    if (st < 0 || st >= s.num_stages) return false;
    used[st] = true;
  }
  return dependency_feasible(s, dag) && std::all_of(used.begin(), used.end(), [](bool b) { return b; });
}

inline void require_stage_count(const ComputeDag& dag, int n) {
  if (n < 1) throw ConfigError("stage count must be >= 1");
  if (n > dag.size())
    throw Infeasible("cannot fill " + std::to_string(n) + " stages with " +
                     std::to_string(dag.size()) + " nodes");
}

/// Walks `order`, keeping one open stage. A node opens the next stage when the
/// open stage is nonempty, a later stage exists, and either
/// `overflows(load_with_node)` says adding it would pass the target or there
/// are only as many nodes left as unopened stages.
template <typename Overflows>
Schedule fill_stages(const std::vector<NodeIndex>& order, const ComputeDag& dag, int n, Overflows&& overflows) {
  Schedule s{n, std::vector<int>(dag.size(), 0)};
  int stage = 0;
  Bytes load = 0;
  bool open_nonempty = false;
  const int count = static_cast<int>(order.size());
  for (int pos = 0; pos < count; ++pos) {
    const NodeIndex v = order[pos];
    const Bytes w = dag.nodes[v].memory_bytes;
    const int remaining = count - pos;
    const int unopened = n - 1 - stage;
    if (open_nonempty && unopened > 0 && (remaining == unopened || overflows(load + w))) {
      ++stage;
      load = 0;
    }
    s.stage_of[v] = stage;
    load += w;
    open_nonempty = true;
  }
  return s;
}

/// Imitation target: nodes sorted by (stage, asap level, index).
inline std::vector<NodeIndex> label_sequence(const Schedule& s, const ComputeDag& dag) {
  if (!is_valid_schedule(s, dag)) throw FeasibilityError("label_sequence: schedule is not feasible");
  const std::vector<int> level = asap_levels(dag);
  std::vector<NodeIndex> order(dag.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    if (s.stage_of[a] != s.stage_of[b]) return s.stage_of[a] < s.stage_of[b];
    if (level[a] != level[b]) return level[a] < level[b];
    return a < b;
  });
  return order;
}

inline nlohmann::json schedule_to_json(const ScheduleResult& r) {
  return {{"num_stages", r.schedule.num_stages},
          {"stage_of", r.schedule.stage_of},
          {"objective",
           {{"peak_stage_memory", r.objective.peak_stage_memory},
            {"per_stage_memory", r.objective.per_stage_memory}}}};
}

inline ScheduleResult schedule_from_json(const nlohmann::json& j) {
  try {
    ScheduleResult r;
    r.schedule.num_stages = j.at("num_stages").get<int>();
    r.schedule.stage_of = j.at("stage_of").get<std::vector<int>>();
    r.objective.peak_stage_memory = j.at("objective").at("peak_stage_memory").get<Bytes>();
    r.objective.per_stage_memory = j.at("objective").at("per_stage_memory").get<std::vector<Bytes>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schedule file: ") + e.what());
  }
}

inline void save_schedule(const ScheduleResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << schedule_to_json(r).dump(1) << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

inline ScheduleResult load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  try {
    return schedule_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pipesched
