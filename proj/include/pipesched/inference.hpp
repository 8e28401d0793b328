#pragma once

// Learned scheduling path: embed -> encode -> greedy decode -> rho -> repair.

#include <vector>

#include "pipesched/deploy.hpp"
#include "pipesched/embedding.hpp"
#include "pipesched/policy.hpp"
#include "pipesched/reward.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

inline std::vector<NodeIndex> rl_order(const ComputeDag& dag, const nn::PolicyParams& params) {
  const GraphEmbedding emb = embed_graph(dag, params.config.max_degree);
  return nn::decode_sequence(nn::encode(emb, params), params, nn::DecodeMode::kGreedy).sequence;
}

struct RlScheduleResult {
  std::vector<NodeIndex> order;
  /// rho(order) before repair
  Schedule raw;
  RepairResult repaired;
  ScheduleObjective objective;
};

/// Maps an ordering to a deployable schedule.
inline RlScheduleResult schedule_from_order(const ComputeDag& dag, int n, std::vector<NodeIndex> order,
                                            RepairOptions repair = {CoStageScope::kNone}) {
  require_stage_count(dag, n);
  RlScheduleResult r;
  r.raw = seq_to_schedule(order, dag, n);
  r.order = std::move(order);
  r.repaired = repair_schedule(r.raw, dag, repair);
  r.objective = objective_of(r.repaired.schedule, dag);
  return r;
}

inline RlScheduleResult rl_schedule(const ComputeDag& dag, int n, const nn::PolicyParams& params,
                                    RepairOptions repair = {CoStageScope::kNone}) {
  require_stage_count(dag, n);
  return schedule_from_order(dag, n, rl_order(dag, params), repair);
}

}  // namespace pipesched
