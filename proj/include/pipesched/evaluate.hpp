#pragma once

// Held-out evaluation: learned schedule vs exact vs list schedule.

#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipesched/deploy.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/heuristic.hpp"
#include "pipesched/inference.hpp"
#include "pipesched/policy.hpp"
#include "pipesched/reward.hpp"

namespace pipesched {

struct EvalOptions {
  RepairOptions repair{CoStageScope::kNone};
  ExactOptions exact{};
  CostModelConfig cost{};
  double epsilon = 1e-8;
};

struct SolveTimes {
  double rl = 0.0, exact = 0.0, heuristic = 0.0;
};

struct GraphEval {
  std::string graph;
  int n = 0;
  int degree = 0;
  Bytes peak_rl = 0, peak_exact = 0, peak_heuristic = 0;
  double gap_pct = 0.0;
  double reward = 0.0;
  bool feasible = false;
  int stage_shortfall = 0;
  std::vector<Bytes> per_stage;  // repaired learned schedule
  GapReport gap;
  CostReport proxy_latency;
  SolveTimes solve_ms;
};

struct DegreeSummary {
  int graphs = 0;
  double mean_reward = 0.0;
  double mean_gap_pct = 0.0;
};

struct EvalReport {
  int n = 0;
  std::vector<GraphEval> graphs;
  double mean_reward = 0.0;
  double mean_gap_pct = 0.0;
  double feasibility_rate = 0.0;
  SolveTimes mean_solve_ms;
  std::map<int, DegreeSummary> per_degree;
  /// Graphs dropped because the exact solver timed out.
  int oracle_timeouts = 0;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

/// Scores `order` (already produced, taking `order_ms`) against the exact and
/// list schedules of `dag`.
inline GraphEval evaluate_ordering(const ComputeDag& dag, int n, const std::vector<NodeIndex>& order,
                                   double order_ms, const EvalOptions& opts = {}) {
  GraphEval g;
  g.graph = dag.name;
  g.n = n;
  g.degree = max_in_degree(dag);

  auto t = std::chrono::steady_clock::now();
  const RlScheduleResult rl = schedule_from_order(dag, n, order, opts.repair);
  g.solve_ms.rl = order_ms + detail::elapsed_ms(t);

  t = std::chrono::steady_clock::now();
  const ScheduleResult exact = exact_schedule(dag, n, opts.exact);
  g.solve_ms.exact = detail::elapsed_ms(t);

  t = std::chrono::steady_clock::now();
  const ScheduleResult heuristic = list_schedule(dag, n);
  g.solve_ms.heuristic = detail::elapsed_ms(t);

  g.peak_rl = rl.objective.peak_stage_memory;
  g.peak_exact = exact.objective.peak_stage_memory;
  g.peak_heuristic = heuristic.objective.peak_stage_memory;
  g.per_stage = rl.objective.per_stage_memory;
  g.gap = gap_to_optimal(rl.objective, exact.objective);
  g.gap_pct = 100.0 * g.gap.relative_gap;
  g.feasible = dependency_feasible(rl.repaired.schedule, dag);
  g.stage_shortfall = rl.repaired.stage_shortfall;
  g.reward = cosine_reward(seq_to_schedule(label_sequence(exact.schedule, dag), dag, n).stage_of, rl.raw.stage_of,
                           opts.epsilon);
  if (g.feasible) g.proxy_latency = cost_model(rl.repaired.schedule, dag, opts.cost);
  return g;
}

inline EvalReport summarize(int n, std::vector<GraphEval> graphs, int timeouts) {
  EvalReport r;
  r.n = n;
  r.oracle_timeouts = timeouts;
  r.graphs = std::move(graphs);
  const double count = static_cast<double>(r.graphs.size());
  if (r.graphs.empty()) return r;
  for (const auto& g : r.graphs) {
    r.mean_reward += g.reward / count;
    r.mean_gap_pct += g.gap_pct / count;
    r.feasibility_rate += (g.feasible ? 1.0 : 0.0) / count;
    r.mean_solve_ms.rl += g.solve_ms.rl / count;
    r.mean_solve_ms.exact += g.solve_ms.exact / count;
    r.mean_solve_ms.heuristic += g.solve_ms.heuristic / count;
    auto& d = r.per_degree[g.degree];
    ++d.graphs;
    d.mean_reward += g.reward;
    d.mean_gap_pct += g.gap_pct;
  }
  for (auto& [deg, d] : r.per_degree) {
    d.mean_reward /= d.graphs;
    d.mean_gap_pct /= d.graphs;
  }
  return r;
}

/// Greedy decode -> rho -> repair for every graph; the RL time covers
/// embedding through repair.
inline EvalReport evaluate(const nn::PolicyParams& params, const std::vector<ComputeDag>& graphs, int n,
                           const EvalOptions& opts = {}) {
  std::vector<GraphEval> out;
  int timeouts = 0;
  for (const ComputeDag& dag : graphs) {
    const auto t = std::chrono::steady_clock::now();
    std::vector<NodeIndex> order = rl_order(dag, params);
    const double ms = detail::elapsed_ms(t);
    try {
      out.push_back(evaluate_ordering(dag, n, order, ms, opts));
    } catch (const OracleTimeout&) {
      ++timeouts;
    }
  }
  return summarize(n, std::move(out), timeouts);
}

inline nlohmann::json graph_eval_to_json(const GraphEval& g) {
  return {{"graph", g.graph},
          {"n", g.n},
          {"degree", g.degree},
          {"peak_rl", g.peak_rl},
          {"peak_exact", g.peak_exact},
          {"peak_heuristic", g.peak_heuristic},
          {"gap_pct", g.gap_pct},
          {"reward", g.reward},
          {"feasible", g.feasible},
          {"stage_shortfall", g.stage_shortfall},
          {"per_stage", g.per_stage},
          {"per_stage_abs_diff", g.gap.per_stage_abs_diff},
          {"proxy_latency", cost_to_json(g.proxy_latency)},
          {"solve_ms", {{"rl", g.solve_ms.rl}, {"exact", g.solve_ms.exact}, {"heuristic", g.solve_ms.heuristic}}}};
}

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
  nlohmann::json graphs = nlohmann::json::array();
  for (const auto& g : r.graphs) graphs.push_back(graph_eval_to_json(g));
  nlohmann::json degrees = nlohmann::json::object();
  for (const auto& [deg, d] : r.per_degree)
    degrees[std::to_string(deg)] = {{"graphs", d.graphs}, {"mean_reward", d.mean_reward}, {"mean_gap_pct", d.mean_gap_pct}};
  return {{"n", r.n},
          {"mean_reward", r.mean_reward},
          {"mean_gap_pct", r.mean_gap_pct},
          {"feasibility_rate", r.feasibility_rate},
          {"oracle_timeouts", r.oracle_timeouts},
          {"solve_ms",
           {{"rl", r.mean_solve_ms.rl}, {"exact", r.mean_solve_ms.exact}, {"heuristic", r.mean_solve_ms.heuristic}}},
          {"per_degree", degrees},
          {"graphs", graphs}};
}

}  // namespace pipesched
