// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "bwroute/agents.hpp"
#include "bwroute/bench.hpp"
#include "bwroute/planner.hpp"
#include "bwroute/rng.hpp"
#include "bwroute/traffic.hpp"
#include "oracles/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace bwroute;
namespace fs = std::filesystem;

namespace {

const std::string kData = BWROUTE_DATA_DIR;
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Instance {
  BandwidthMap map;
  TrafficGrid traffic;
  Heading heading = Heading::north;
  double requirement = 0.0;
};

// Plans checked by the replay criterion, collected while the other criteria run.
struct ReplayCase {
  Instance inst;
  RoutePlan plan;
};
std::vector<ReplayCase> replay_cases;

PlannerOptions facing(Heading h) {
  PlannerOptions o;
  o.initial_heading = h;
  return o;
}

std::string curve_text(const TrainingCurve& curve) {
  std::ostringstream out;
  write_curve_csv(out, curve);
  return out.str();
}

EnvConfig env_for(std::vector<BandwidthMap> maps, const TrafficGrid& traffic, double requirement, RewardMode mode) {
  EnvConfig env;
  env.maps = std::move(maps);
  env.traffic = traffic;
  env.requirement = requirement;
  env.reward.mode = mode;
  return env;
}

LearnerConfig learner_for(Algorithm algorithm, std::uint64_t seed) {
  LearnerConfig l;
  l.algorithm = algorithm;
  l.seed = seed;
  l.training_steps = 200'000;
  return l;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Verdict ac1_oracle_matches_brute_force() {
  Rng rng = make_rng(101);
  int mismatches = 0, feasible = 0;
  for (int i = 0; i < 200; ++i) {
    ref::RandomInstance r = ref::random_instance(rng, 4, 4, 0, 3);
    const double requirement = static_cast<double>(i % 3);
    const RoutePlan opt = optimal_route(r.map, r.traffic, requirement, facing(r.heading));
    const RoutePlan brute = brute_force_optimal(r.map, r.traffic, requirement, 20, facing(r.heading));
    if (opt.feasible != brute.feasible || opt.total_time != brute.total_time) ++mismatches;
    feasible += opt.feasible ? 1 : 0;
    const Instance inst{r.map, r.traffic, r.heading, requirement};
    replay_cases.push_back({inst, opt});
    replay_cases.push_back({inst, brute});
  }
  return {mismatches == 0,
          std::to_string(200 - mismatches) + "/200 exact matches (" + std::to_string(feasible) + " feasible)"};
}

// Final greedy trip times for one learner across the five seeds.
std::vector<double> final_times(Algorithm algorithm, RewardMode mode) {
  const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
  const BandwidthMap map = load_bandwidth_map(kData + "/maps/hbw4/map_0.map");
  std::vector<double> out;
  for (std::uint64_t seed : kSeeds) {
    const TrainResult r = train(env_for({map}, traffic, 1.0, mode), learner_for(algorithm, seed));
    out.push_back(r.curve.back().success_rate > 0 ? r.curve.back().mean_trip_time : std::nan(""));
  }
  return out;
}

struct ConvergenceRuns {
  std::vector<double> q_step, q_cum, ac_step, ac_cum;
  double optimum = 0.0;
};

const ConvergenceRuns& convergence_runs() {
  static const ConvergenceRuns runs = [] {
    ConvergenceRuns r;
    const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
    const BandwidthMap map = load_bandwidth_map(kData + "/maps/hbw4/map_0.map");
    r.optimum = optimal_route(map, traffic, 1.0).total_time;
    r.q_cum = final_times(Algorithm::q_learning, RewardMode::cumulative);
    r.q_step = final_times(Algorithm::q_learning, RewardMode::step);
    r.ac_cum = final_times(Algorithm::actor_critic, RewardMode::cumulative);
    r.ac_step = final_times(Algorithm::actor_critic, RewardMode::step);
    return r;
  }();
  return runs;
}

int within(const std::vector<double>& times, const std::vector<double>& targets) {
  int n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::isfinite(times[i]) && std::abs(times[i] - targets[i]) <= 0.05 * targets[i]) ++n;
  }
  return n;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

Verdict ac2_learners_reach_optimum() {
  const ConvergenceRuns& r = convergence_runs();
  const std::vector<double> target(5, r.optimum);
  std::string detail = "optimum " + fmt(r.optimum);
  bool pass = true;
  for (const auto& [name, times] : {std::pair{"q_learning", &r.q_cum}, std::pair{"actor_critic", &r.ac_cum}}) {
    const int n = within(*times, target);
    pass = pass && n >= 4;
    detail += "; " + std::string(name) + " " + std::to_string(n) + "/5 within 5% [" + list(*times) + "]";
  }
  return {pass, detail};
}

Verdict ac3_monotonicity() {
  Rng rng = make_rng(303);
  int violations = 0;
  for (int i = 0; i < 50; ++i) {
    const ref::RandomInstance r = ref::random_instance(rng, 7, 7, 1, 5, false);
    double prev = -1.0;
    for (double requirement : {0.0, 1.0, 2.0, 3.0}) {
      const double t = optimal_route(r.map, r.traffic, requirement, facing(r.heading)).total_time;
      if (t < prev) ++violations;
      prev = t;
    }
    std::vector<Cell> free;
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 7; ++col) {
        const Cell c{row, col};
        if (!r.map.is_high_bw(c) && c != r.map.start && c != r.map.destination) free.push_back(c);
      }
    }
    std::vector<Cell> more = r.map.high_bw;
    more.push_back(free[uniform_index(rng, free.size())]);
    const BandwidthMap bigger(7, 7, r.map.start, r.map.destination, more, r.map.map_id);
    for (double requirement : {1.0, 2.0, 3.0}) {
      const double before = optimal_route(r.map, r.traffic, requirement, facing(r.heading)).total_time;
      const double after = optimal_route(bigger, r.traffic, requirement, facing(r.heading)).total_time;
      if (after > before) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 50 maps"};
}

Verdict ac4_baseline_sandwich() {
  Rng rng = make_rng(404);
  int checked = 0, violations = 0, draws = 0;
  while (checked < 50) {
    ++draws;
    const ref::RandomInstance r = ref::random_instance(rng, 7, 7, 1, 6);
    const double requirement = 1.0;
    const RoutePlan opt = optimal_route(r.map, r.traffic, requirement, facing(r.heading));
    if (!opt.feasible) continue;
    ++checked;
    const RoutePlan bu = bandwidth_unaware_route(r.map, r.traffic, requirement, facing(r.heading));
    const RoutePlan tu = traffic_unaware_route(r.map, r.traffic, requirement, facing(r.heading));
    if (!(bu.total_time <= opt.total_time && opt.total_time <= tu.total_time)) ++violations;
    const Instance inst{r.map, r.traffic, r.heading, requirement};
    for (const RoutePlan* p : {&opt, &bu, &tu}) replay_cases.push_back({inst, *p});
  }
  return {violations == 0, std::to_string(50 - violations) + "/50 ordered (" + std::to_string(draws) + " draws)"};
}

// Maps from the shipped generator family whose time-optimal route touches no
// high-bandwidth cell.
std::vector<BandwidthMap> maps_missing_high_bw(const TrafficGrid& traffic, int count) {
  std::vector<BandwidthMap> out;
  for (std::uint64_t seed = 1; static_cast<int>(out.size()) < count; ++seed) {
    bench::GeneratorSpec spec;
    spec.num_maps = 1;
    spec.seed = seed;
    BandwidthMap m = bench::generate_maps(spec, traffic, 1.0).front();
    const RoutePlan fastest = bandwidth_unaware_route(m, traffic, 1.0);
    if (std::none_of(fastest.cells.begin(), fastest.cells.end(), [&](Cell c) { return m.is_high_bw(c); })) {
      m.map_id = static_cast<int>(out.size());
      out.push_back(m);
    }
  }
  return out;
}

Verdict ac5_bandwidth_unaware_agent_fails() {
  const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
  const std::vector<BandwidthMap> maps = maps_missing_high_bw(traffic, 3);
  double base = 0.0, ablated = 0.0;
  for (std::uint64_t seed : kSeeds) {
    EnvConfig env = env_for(maps, traffic, 1.0, RewardMode::cumulative);
    base += train(env, learner_for(Algorithm::actor_critic, seed)).curve.back().success_rate;
    env.reward = make_baseline_reward(BaselineKind::bandwidth_unaware, env.reward);
    ablated += train(env, learner_for(Algorithm::actor_critic, seed)).curve.back().success_rate;
  }
  base /= 5.0;
  ablated /= 5.0;
  return {base - ablated >= 0.3,
          "success base " + fmt(base) + " vs bandwidth_unaware " + fmt(ablated) + " (gap " + fmt(base - ablated) +
              ", need >= 0.3)"};
}

Verdict ac6_reward_modes_agree() {
  const ConvergenceRuns& r = convergence_runs();
  const int q = within(r.q_step, r.q_cum);
  const int ac = within(r.ac_step, r.ac_cum);
  return {q >= 4 && ac >= 4, "q_learning " + std::to_string(q) + "/5, actor_critic " + std::to_string(ac) +
                                 "/5 seeds with step vs cumulative within 5%"};
}

Verdict ac7_replay() {
  int mismatches = 0;
  for (const ReplayCase& c : replay_cases) {
    EpisodeState s = start_state(c.inst.map, c.inst.requirement, c.inst.heading);
    Dynamics dynamics;
    dynamics.step_limit = 1 << 20;
    for (Action a : c.plan.actions) s = step(s, a, c.inst.map, c.inst.traffic, {}, dynamics).next_state;
    const bool arrived = s.cell == c.inst.map.destination && s.requirement_met;
    const bool routed = !c.plan.actions.empty();
    if (arrived != c.plan.feasible || (routed && s.trip_time != c.plan.total_time)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(replay_cases.size() - static_cast<std::size_t>(mismatches)) + "/" +
                               std::to_string(replay_cases.size()) + " plans replayed exactly"};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Verdict ac8_determinism() {
  const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
  const BandwidthMap map = load_bandwidth_map(kData + "/maps/hbw4/map_0.map");
  int differing = 0, compared = 0;
  for (Algorithm algorithm : {Algorithm::q_learning, Algorithm::actor_critic}) {
    LearnerConfig l = learner_for(algorithm, 9);
    l.training_steps = 50'000;
    const EnvConfig env = env_for({map}, traffic, 1.0, RewardMode::step);
    ++compared;
    if (curve_text(train(env, l).curve) != curve_text(train(env, l).curve)) ++differing;
  }
  // End to end through the experiment runner, with different worker counts.
  const fs::path root = fs::temp_directory_path() / "bwroute_acceptance_determinism";
  fs::remove_all(root);
  bench::ExperimentConfig config = bench::load_config(kData + "/../configs/reward_modes.json");
  config.training_steps = 20'000;
  config.output_dir = root / "a";
  const bench::ExperimentResult a = bench::run_experiment(config, {4, false});
  config.output_dir = root / "b";
  const bench::ExperimentResult b = bench::run_experiment(config, {1, false});
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    ++compared;
    if (slurp(a.runs[i].curve_path) != slurp(b.runs[i].curve_path)) ++differing;
  }
  fs::remove_all(root);
  return {differing == 0, std::to_string(compared - differing) + "/" + std::to_string(compared) +
                              " curve CSVs byte-identical"};
}

Verdict ac9_thresholds() {
  const double in[] = {0, 1099, 1100, 2199, 2200, 2899, 2900, 4000};
  const double want[] = {1.5, 1.5, 2.0, 2.0, 2.5, 2.5, 3.0, 3.0};
  std::string got;
  bool pass = true;
  for (int i = 0; i < 8; ++i) {
    const double v = categorize_traffic(in[i]);
    pass = pass && v == want[i];
    got += (i ? " " : "") + fmt(v);
  }
  return {pass, "got {" + got + "}"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"AC-1 oracle equals brute force", ac1_oracle_matches_brute_force},
      {"AC-2 learners reach the optimum", ac2_learners_reach_optimum},
      {"AC-3 oracle monotonicity", ac3_monotonicity},
      {"AC-4 baseline sandwich", ac4_baseline_sandwich},
      {"AC-5 bandwidth-unaware agent failure", ac5_bandwidth_unaware_agent_fails},
      {"AC-6 reward modes agree", ac6_reward_modes_agree},
      {"AC-7 plan replay", ac7_replay},
      {"AC-8 determinism", ac8_determinism},
      {"AC-9 delay thresholds", ac9_thresholds},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
