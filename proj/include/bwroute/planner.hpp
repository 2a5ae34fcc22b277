#pragma once

#include "bwroute/gridworld.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

namespace bwroute {

/// Search node view: position, heading and data bucket ceil(remaining / q).
struct PlannerState {
  Cell cell;
  Heading heading = Heading::north;
  int bucket = 0;
};

struct PlanStep {
  Action action;
  PlannerState state;     // after the action
  double time_after;      // cumulative trip time
  double data_after;      // data still to transfer
};

struct RoutePlan {
  std::vector<Action> actions;
  std::vector<Cell> cells;  // start cell first, then one per action
  std::vector<PlanStep> steps;
  double total_time = std::numeric_limits<double>::infinity();
  int total_hops = 0;
  double data_transferred = 0.0;
  bool feasible = false;
  std::size_t expanded = 0;  // labels popped by the search
  bool budget_exhausted = false;
};

struct PlannerOptions {
  double quantum = 0.0;  // <= 0: default_quantum(requirement)
  std::size_t node_budget = 5'000'000;
  Heading initial_heading = Heading::north;
  double transfer_scale = 1.0;
};

/// Minimum trip time route from start to destination that meets the data
/// requirement. Edge cost is the delay index of the cell entered (or of the
/// current cell when bumping the grid edge). Transfer is tracked with the same
/// floating-point arithmetic as step(), so replaying `actions` through the
/// environment reproduces total_time and feasibility exactly. Labels at the
/// same (cell, heading) are pruned by dominance on remaining data. Among
/// equal-time plans the lexicographically smallest action sequence wins
/// (forward < left < right).
RoutePlan optimal_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                        const PlannerOptions& options = {});

/// Time-optimal route with the requirement dropped; `feasible` reports
/// whether `requirement` happens to be met on the way.
RoutePlan bandwidth_unaware_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                                  const PlannerOptions& options = {});

/// Fewest-hops route meeting the requirement. total_time is the true delay
/// index sum along that route.
RoutePlan traffic_unaware_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                                const PlannerOptions& options = {});

/// Exhaustive depth-first enumeration of action sequences of length <= max_hops
/// through step(), with admissible branch-and-bound pruning. Refuses grids
/// larger than 5x5 or max_hops > 20 (RefusalError).
RoutePlan brute_force_optimal(const BandwidthMap& map, const TrafficGrid& traffic, double requirement, int max_hops,
                              const PlannerOptions& options = {});

void write_plan_csv(std::ostream& out, const RoutePlan& plan);
/// `total_time,total_hops,feasible`
void write_plan_summary(std::ostream& out, const RoutePlan& plan);

}  // namespace bwroute
