#include "bwroute/planner.hpp"

#include "bwroute/error.hpp"
#include "bwroute/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <queue>

namespace bwroute {

namespace {

enum class CostModel { trip_time, hops };

struct Node {
  Cell cell;
  Heading heading;
  double remaining;
};

struct Move {
  Node next;
  double time;  // delay charged for this move
};

// The transfer arithmetic here must stay in lockstep with step().
Move apply(const Node& from, Action action, const BandwidthMap& map, const TrafficGrid& traffic, double scale) {
  Move m{from, 0.0};
  m.next.heading = turn(from.heading, action);
  const Cell target = advance(from.cell, m.next.heading);
  if (!map.contains(target)) {
    m.time = traffic.delay(from.cell.row, from.cell.col);
    return m;
  }
  m.next.cell = target;
  m.time = traffic.delay(target.row, target.col);
  if (map.is_high_bw(target) && from.remaining > 0.0) {
    const double amount = transfer_amount(target, traffic, scale);
    m.next.remaining = amount >= from.remaining ? 0.0 : from.remaining - amount;
  }
  return m;
}

void check_inputs(const BandwidthMap& map, const TrafficGrid& traffic, double requirement) {
  map.validate();
  if (map.rows != traffic.rows() || map.cols != traffic.cols()) {
    throw ConfigError("map and traffic grid dimensions differ");
  }
  if (!(requirement >= 0.0) || !std::isfinite(requirement)) throw ConfigError("requirement must be finite and >= 0");
}

double quantum_for(const PlannerOptions& options, double requirement) {
  return options.quantum > 0.0 ? options.quantum : default_quantum(requirement);
}

// Fills the per-step trace of `plan.actions` from the start of `map`.
void trace(RoutePlan& plan, const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
           const PlannerOptions& options) {
  const StateEncoder encoder(map.cols, requirement, quantum_for(options, requirement));
  Node node{map.start, options.initial_heading, requirement};
  double time = 0.0;
  plan.cells.assign(1, map.start);
  plan.steps.clear();
  for (Action a : plan.actions) {
    const Move m = apply(node, a, map, traffic, options.transfer_scale);
    node = m.next;
    time += m.time;
    plan.cells.push_back(node.cell);
    plan.steps.push_back({a, {node.cell, node.heading, encoder.bucket(node.remaining)}, time, node.remaining});
  }
  plan.total_time = time;
  plan.total_hops = static_cast<int>(plan.actions.size());
  plan.data_transferred = requirement - node.remaining;
  plan.feasible = node.cell == map.destination && node.remaining == 0.0;
}

struct Label {
  double cost;
  Node node;
  std::vector<Action> path;
};

RoutePlan search(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                 const PlannerOptions& options, CostModel model) {
  check_inputs(map, traffic, requirement);

  std::vector<Label> labels;
  const auto worse = [&labels](std::size_t a, std::size_t b) {
    const Label& la = labels[a];
    const Label& lb = labels[b];
    if (la.cost != lb.cost) return la.cost > lb.cost;
    return lb.path < la.path;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> open(worse);

  // Remaining-data values already expanded per (cell, heading). Pops come in
  // non-decreasing cost, so any settled entry with remaining <= r dominates.
  std::vector<std::vector<double>> settled(static_cast<std::size_t>(map.rows * map.cols * 4));
  const auto slot = [&map](const Node& n) {
    return static_cast<std::size_t>((n.cell.row * map.cols + n.cell.col) * 4 + static_cast<int>(n.heading));
  };
  const auto dominated = [&](const Node& n) {
    const auto& s = settled[slot(n)];
    return std::any_of(s.begin(), s.end(), [&](double r) { return r <= n.remaining; });
  };

  labels.push_back({0.0, {map.start, options.initial_heading, requirement}, {}});
  open.push(0);

  RoutePlan plan;
  while (!open.empty()) {
    const std::size_t id = open.top();
    open.pop();
    const Node node = labels[id].node;
    if (dominated(node)) continue;
    if (plan.expanded >= options.node_budget) {
      plan.budget_exhausted = true;
      return plan;
    }
    ++plan.expanded;
    if (node.cell == map.destination && node.remaining == 0.0) {
      plan.actions = labels[id].path;
      trace(plan, map, traffic, requirement, options);
      return plan;
    }
    settled[slot(node)].push_back(node.remaining);

    for (Action a : kActions) {
      const Move m = apply(node, a, map, traffic, options.transfer_scale);
      if (dominated(m.next)) continue;
      const double step_cost = model == CostModel::trip_time ? m.time : 1.0;
      std::vector<Action> path = labels[id].path;
      path.push_back(a);
      labels.push_back({labels[id].cost + step_cost, m.next, std::move(path)});
      open.push(labels.size() - 1);
    }
  }
  return plan;
}

}  // namespace

RoutePlan optimal_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                        const PlannerOptions& options) {
  return search(map, traffic, requirement, options, CostModel::trip_time);
}

RoutePlan bandwidth_unaware_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                                  const PlannerOptions& options) {
  RoutePlan plan = search(map, traffic, 0.0, options, CostModel::trip_time);
  if (plan.budget_exhausted || plan.actions.empty()) return plan;
  trace(plan, map, traffic, requirement, options);
  return plan;
}

RoutePlan traffic_unaware_route(const BandwidthMap& map, const TrafficGrid& traffic, double requirement,
                                const PlannerOptions& options) {
  return search(map, traffic, requirement, options, CostModel::hops);
}

RoutePlan brute_force_optimal(const BandwidthMap& map, const TrafficGrid& traffic, double requirement, int max_hops,
                              const PlannerOptions& options) {
  check_inputs(map, traffic, requirement);
  if (map.rows > 5 || map.cols > 5) throw RefusalError("brute_force_optimal refuses grids larger than 5x5");
  if (max_hops > 20 || max_hops < 0) throw RefusalError("brute_force_optimal refuses max_hops outside [0, 20]");

  const double min_delay = traffic.delay.minCoeff();
  const auto manhattan = [](Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); };
  // Admissible lower bound on the time still needed from `s`.
  const auto lower_bound = [&](const EpisodeState& s) {
    if (s.requirement_met) return manhattan(s.cell, map.destination) * min_delay;
    int best = std::numeric_limits<int>::max();
    for (const Cell& h : map.high_bw) best = std::min(best, manhattan(s.cell, h) + manhattan(h, map.destination));
    return best == std::numeric_limits<int>::max() ? std::numeric_limits<double>::infinity() : best * min_delay;
  };

  const RewardConfig reward;
  const Dynamics dynamics{max_hops + 1, options.transfer_scale};
  double best_time = std::numeric_limits<double>::infinity();
  std::vector<Action> best_path;
  std::vector<Action> path;
  std::size_t visited = 0;

  const auto dfs = [&](auto&& self, const EpisodeState& s) -> void {
    ++visited;
    if (static_cast<int>(path.size()) == max_hops) return;
    for (Action a : kActions) {
      const StepOutcome out = step(s, a, map, traffic, reward, dynamics);
      const EpisodeState& n = out.next_state;
      if (n.trip_time + lower_bound(n) >= best_time) continue;
      path.push_back(a);
      if (n.cell == map.destination && n.requirement_met) {
        best_time = n.trip_time;
        best_path = path;
      } else {
        self(self, n);
      }
      path.pop_back();
    }
  };
  dfs(dfs, start_state(map, requirement, options.initial_heading));

  RoutePlan plan;
  plan.expanded = visited;
  if (!std::isfinite(best_time)) return plan;
  plan.actions = std::move(best_path);
  trace(plan, map, traffic, requirement, options);
  plan.total_time = best_time;
  return plan;
}

void write_plan_csv(std::ostream& out, const RoutePlan& plan) {
  out << "step,action,row,col,time_after,data_after\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    out << i + 1 << ',' << to_string(s.action) << ',' << s.state.cell.row << ',' << s.state.cell.col << ','
        << text::format(s.time_after) << ',' << text::format(s.data_after) << '\n';
  }
}

void write_plan_summary(std::ostream& out, const RoutePlan& plan) {
  out << (plan.feasible ? text::format(plan.total_time) : std::string("inf")) << ',' << plan.total_hops << ','
      << (plan.feasible ? "true" : "false") << '\n';
}

}  // namespace bwroute
