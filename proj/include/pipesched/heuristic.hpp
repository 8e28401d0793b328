#pragma once

#include "pipesched/graph.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

/// Greedy list-scheduling baseline. Nodes are visited in ASAP order and packed
/// into the open stage until the next one would push it past total/n; a stage
/// is also opened whenever the nodes left are only just enough to give every
/// remaining stage one node, so no stage ends up empty.
inline ScheduleResult list_schedule(const ComputeDag& dag, int n) {
  require_stage_count(dag, n);
  const std::vector<NodeIndex> order = asap_order(asap_levels(dag));
  const Bytes total = total_memory(dag);
  ScheduleResult r;
  r.schedule = fill_stages(order, dag, n, [total, n](Bytes load) { return load * n > total; });
  r.objective = objective_of(r.schedule, dag);
  return r;
}

}  // namespace pipesched
