#include "bwroute/bench.hpp"
#include "bwroute/error.hpp"
#include "bwroute/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace bwroute::bench {

namespace {

std::string fmt(double v) { return std::isfinite(v) ? text::format(v) : (std::isnan(v) ? "nan" : "inf"); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

EnvConfig make_env(const ExperimentConfig& c, const std::vector<BandwidthMap>& maps, const TrafficGrid& traffic,
                   RewardMode mode, std::optional<BaselineKind> baseline) {
  EnvConfig env;
  env.maps = maps;
  env.traffic = traffic;
  env.requirement = c.requirement;
  env.reward = c.reward;
  env.reward.mode = mode;
  if (baseline) env.reward = make_baseline_reward(*baseline, env.reward);
  env.dynamics = c.dynamics;
  env.initial_heading = c.initial_heading;
  env.quantum = c.quantum;
  return env;
}

double gap_pct(double value, double oracle) {
  if (!std::isfinite(value) || !std::isfinite(oracle) || oracle <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - oracle) / oracle;
}

// Runs `task(i)` for i in [0, n) on `jobs` threads. Exceptions are the task's
// responsibility.
template <typename Task>
void parallel_for(std::size_t n, int jobs, Task task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
}

}  // namespace

TrafficGrid resolve_traffic(const ExperimentConfig& config) {
  if (config.traffic.grid_file) return load_traffic_grid(*config.traffic.grid_file);
  if (config.traffic.heatmap_csv) return bin_heatmap(load_heatmap_csv(*config.traffic.heatmap_csv), config.traffic.ingest);
  return bin_heatmap(synthesize_heatmap(config.traffic.ingest, *config.traffic.synthetic_seed), config.traffic.ingest);
}

std::vector<BandwidthMap> resolve_maps(const ExperimentConfig& config, const TrafficGrid& traffic) {
  if (config.generator) return generate_maps(*config.generator, traffic, config.requirement, config.dynamics.transfer_scale);
  std::vector<BandwidthMap> maps;
  for (std::size_t i = 0; i < config.map_files.size(); ++i) {
    maps.push_back(load_bandwidth_map(config.map_files[i], static_cast<int>(i)));
  }
  return maps;
}

TrainingCurve mean_curve(const std::vector<TrainingCurve>& curves) {
  TrainingCurve out;
  if (curves.empty()) return out;
  std::size_t n = curves.front().size();
  for (const auto& c : curves) n = std::min(n, c.size());
  for (std::size_t i = 0; i < n; ++i) {
    CurvePoint p;
    p.step = curves.front()[i].step;
    double sum = 0.0;
    double rate = 0.0;
    int finite = 0;
    for (const auto& c : curves) {
      rate += c[i].success_rate;
      if (!std::isnan(c[i].mean_trip_time)) {
        sum += c[i].mean_trip_time;
        ++finite;
      }
    }
    p.mean_trip_time = finite ? sum / finite : std::numeric_limits<double>::quiet_NaN();
    p.success_rate = rate / static_cast<double>(curves.size());
    out.push_back(p);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const TrafficGrid traffic = resolve_traffic(config);
  const std::vector<BandwidthMap> maps = resolve_maps(config, traffic);
  make_env(config, maps, traffic, RewardMode::cumulative, std::nullopt).validate();

  ExperimentResult result;
  result.output_dir = config.output_dir;
  fs::create_directories(config.output_dir);
  {
    ExperimentConfig echo = config;
    echo.output_dir = fs::absolute(config.output_dir);
    open_out(config.output_dir / "config.json") << to_json(echo);
  }
  save_traffic_grid(config.output_dir / "traffic.grid", traffic);
  write_maps(config.output_dir / "maps", maps);

  PlannerOptions planner;
  planner.quantum = config.quantum;
  planner.initial_heading = config.initial_heading;
  planner.transfer_scale = config.dynamics.transfer_scale;
  double oracle_sum = 0.0;
  for (const auto& map : maps) {
    OracleRow row{map.map_id, optimal_route(map, traffic, config.requirement, planner), {}, {}};
    if (config.baselines.planners) {
      row.bandwidth_unaware = bandwidth_unaware_route(map, traffic, config.requirement, planner);
      row.traffic_unaware = traffic_unaware_route(map, traffic, config.requirement, planner);
    }
    oracle_sum += row.optimal.total_time;
    result.oracle.push_back(std::move(row));
  }
  result.oracle_mean_time = oracle_sum / static_cast<double>(maps.size());
  {
    auto out = open_out(config.output_dir / "oracle.csv");
    out << "map_id,optimal_time,optimal_hops,optimal_feasible";
    if (config.baselines.planners) {
      out << ",bandwidth_unaware_time,bandwidth_unaware_feasible,traffic_unaware_time,traffic_unaware_hops";
    }
    out << '\n';
    for (const auto& row : result.oracle) {
      out << row.map_id << ',' << fmt(row.optimal.total_time) << ',' << row.optimal.total_hops << ','
          << (row.optimal.feasible ? "true" : "false");
      if (config.baselines.planners) {
        out << ',' << fmt(row.bandwidth_unaware.total_time) << ','
            << (row.bandwidth_unaware.feasible ? "true" : "false") << ',' << fmt(row.traffic_unaware.total_time)
            << ',' << row.traffic_unaware.total_hops;
      }
      out << '\n';
    }
  }

  std::vector<std::optional<BaselineKind>> variants{std::nullopt};
  if (config.baselines.bandwidth_unaware) variants.emplace_back(BaselineKind::bandwidth_unaware);
  if (config.baselines.traffic_unaware) variants.emplace_back(BaselineKind::traffic_unaware);
  for (const auto& learner : config.learners) {
    for (RewardMode mode : config.reward_modes) {
      for (const auto& variant : variants) {
        for (std::uint64_t seed : config.seeds) {
          RunRecord run;
          run.algorithm = learner.config.algorithm;
          run.mode = mode;
          run.baseline = variant;
          run.seed = seed;
          run.label = std::string(to_string(run.algorithm)) + "-" + std::string(to_string(mode));
          if (variant) run.label += "-" + std::string(to_string(*variant));
          run.curve_path = config.output_dir / "runs" / run.label / ("seed_" + std::to_string(seed)) / "curve.csv";
          result.runs.push_back(std::move(run));
        }
      }
    }
  }

  const std::size_t per_learner = config.reward_modes.size() * variants.size() * config.seeds.size();
  parallel_for(result.runs.size(), options.jobs, [&](std::size_t i) {
    RunRecord& run = result.runs[i];
    const auto started = std::chrono::steady_clock::now();
    try {
      LearnerConfig learner = config.learners[i / per_learner].config;
      learner.seed = run.seed;
      learner.training_steps = config.training_steps;
      const EnvConfig env = make_env(config, maps, traffic, run.mode, run.baseline);
      TrainResult trained = train(env, learner, config.eval_cadence);
      run.curve = std::move(trained.curve);
      run.final_eval = evaluate_greedy(trained.table, env);
      fs::create_directories(run.curve_path.parent_path());
      auto out = open_out(run.curve_path);
      write_curve_csv(out, run.curve);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  {
    auto out = open_out(config.output_dir / "summary.csv");
    out << "label,algorithm,reward_mode,variant,seed,final_trip_time,success_rate,oracle_time,oracle_gap_pct\n";
    for (const auto& run : result.runs) {
      if (!run.error.empty()) continue;
      out << run.label << ',' << to_string(run.algorithm) << ',' << to_string(run.mode) << ','
          << (run.baseline ? to_string(*run.baseline) : std::string_view("base")) << ',' << run.seed << ','
          << fmt(run.final_eval.mean_trip_time) << ',' << fmt(run.final_eval.success_rate) << ','
          << fmt(result.oracle_mean_time) << ',' << fmt(gap_pct(run.final_eval.mean_trip_time, result.oracle_mean_time))
          << '\n';
    }
  }
  {
    auto out = open_out(config.output_dir / "timing.csv");
    out << "label,seed,wall_clock_s,status\n";
    for (const auto& run : result.runs) {
      out << run.label << ',' << run.seed << ',' << text::format(run.wall_seconds) << ','
          << (run.error.empty() ? "ok" : "failed: " + run.error) << '\n';
    }
  }
  if (!result.runs.empty()) plot_bundle(config.output_dir, options.timestamp);

  for (const auto& run : result.runs) {
    if (!run.error.empty()) throw std::runtime_error("run " + run.label + " seed " + std::to_string(run.seed) + " failed: " + run.error);
  }
  return result;
}

fs::path plot_bundle(const fs::path& dir, bool timestamp) {
  Chart chart;
  std::string name = dir.filename().string();
  if (std::ifstream cfg(dir / "config.json"); cfg) {
    std::stringstream buf;
    buf << cfg.rdbuf();
    try {
      name = parse_config(buf.str(), dir).name;
    } catch (const ConfigError&) {
      // Inputs named by the echoed config may have moved; the title is all we need.
    }
  }
  chart.title = name + ": trip completion time vs training";

  if (std::ifstream oracle(dir / "oracle.csv"); oracle) {
    std::string line;
    std::getline(oracle, line);
    double sum = 0.0;
    int n = 0;
    while (std::getline(oracle, line)) {
      const auto fields = text::split(line, ',');
      if (fields.size() < 2) continue;
      const auto v = text::parse<double>(fields[1]);
      sum += v ? *v : std::numeric_limits<double>::infinity();
      ++n;
    }
    if (n > 0 && std::isfinite(sum)) chart.references.push_back({"oracle optimum", sum / n});
  }

  std::vector<fs::path> labels;
  if (fs::is_directory(dir / "runs")) {
    for (const auto& entry : fs::directory_iterator(dir / "runs")) {
      if (entry.is_directory()) labels.push_back(entry.path());
    }
  }
  std::sort(labels.begin(), labels.end());
  for (std::size_t li = 0; li < labels.size(); ++li) {
    const std::string label = labels[li].filename().string();
    std::vector<std::pair<std::uint64_t, fs::path>> seeds;
    for (const auto& entry : fs::directory_iterator(labels[li])) {
      const std::string leaf = entry.path().filename().string();
      if (!entry.is_directory() || !leaf.starts_with("seed_")) continue;
      const auto seed = text::parse<std::uint64_t>(std::string_view(leaf).substr(5));
      if (seed && fs::exists(entry.path() / "curve.csv")) seeds.emplace_back(*seed, entry.path() / "curve.csv");
    }
    std::sort(seeds.begin(), seeds.end());
    std::vector<TrainingCurve> curves;
    for (const auto& [seed, path] : seeds) {
      std::ifstream in(path);
      curves.push_back(read_curve_csv(in));
      Series s;
      s.label = label + " seed " + std::to_string(seed);
      s.color = palette(li);
      s.width = 1.0;
      s.opacity = 0.35;
      s.in_legend = false;
      for (const auto& p : curves.back()) {
        s.x.push_back(static_cast<double>(p.step));
        s.y.push_back(p.mean_trip_time);
      }
      chart.series.push_back(std::move(s));
    }
    if (curves.empty()) continue;
    Series mean;
    mean.label = label + " (mean of " + std::to_string(curves.size()) + " seeds)";
    mean.color = palette(li);
    mean.width = 2.5;
    for (const auto& p : mean_curve(curves)) {
      mean.x.push_back(static_cast<double>(p.step));
      mean.y.push_back(p.mean_trip_time);
    }
    chart.series.push_back(std::move(mean));
  }
  const fs::path out = dir / "convergence.svg";
  save_svg(out, chart, timestamp);
  return out;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const SweepSpec& sweep, const std::string& value) {
  sweep.validate();
  ExperimentConfig c = base;
  c.sweep.reset();
  c.output_dir = base.output_dir / (sweep.parameter + "_" + value);
  c.name = base.name + " " + sweep.parameter + "=" + value;
  const auto as_int = [&]() {
    const auto v = text::parse<int>(value);
    if (!v) throw ConfigError("sweep value '" + value + "' for " + sweep.parameter + " must be an integer");
    return *v;
  };
  if (sweep.parameter == "num_high_bw" || sweep.parameter == "num_maps") {
    if (!c.generator) throw ConfigError("sweeping " + sweep.parameter + " needs maps.generate");
    (sweep.parameter == "num_high_bw" ? c.generator->num_high_bw : c.generator->num_maps) = as_int();
  } else if (sweep.parameter == "requirement") {
    const auto v = text::parse<double>(value);
    if (!v) throw ConfigError("sweep value '" + value + "' for requirement must be a number");
    c.requirement = *v;
  } else if (sweep.parameter == "reward_mode") {
    c.reward_modes = {parse_reward_mode(value)};
  } else if (sweep.parameter == "algorithm") {
    LearnerSpec learner = c.learners.empty() ? LearnerSpec{} : c.learners.front();
    learner.config.algorithm = parse_algorithm(value);
    c.learners = {learner};
  }
  c.validate();
  return c;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepSpec& sweep, const RunOptions& options) {
  base.validate();
  sweep.validate();
  std::vector<ExperimentConfig> configs;
  for (const auto& v : sweep.values) configs.push_back(apply_sweep_value(base, sweep, v));

  SweepResult result;
  result.output_dir = base.output_dir;
  result.values = sweep.values;
  fs::create_directories(base.output_dir);
  for (const auto& c : configs) result.experiments.push_back(run_experiment(c, options));

  Chart chart;
  chart.title = base.name + ": sweep over " + sweep.parameter;
  auto out = open_out(base.output_dir / "sweep.csv");
  out << sweep.parameter << ",label,mean_final_trip_time,mean_success_rate,oracle_time,mean_oracle_gap_pct\n";
  std::size_t color = 0;
  for (std::size_t vi = 0; vi < result.values.size(); ++vi) {
    const ExperimentResult& ex = result.experiments[vi];
    std::map<std::string, std::vector<const RunRecord*>> by_label;
    for (const auto& run : ex.runs) by_label[run.label].push_back(&run);
    for (const auto& [label, runs] : by_label) {
      double time_sum = 0.0;
      double rate_sum = 0.0;
      int finite = 0;
      std::vector<TrainingCurve> curves;
      for (const RunRecord* run : runs) {
        rate_sum += run->final_eval.success_rate;
        if (!std::isnan(run->final_eval.mean_trip_time)) {
          time_sum += run->final_eval.mean_trip_time;
          ++finite;
        }
        curves.push_back(run->curve);
      }
      const double mean_time = finite ? time_sum / finite : std::numeric_limits<double>::quiet_NaN();
      out << result.values[vi] << ',' << label << ',' << fmt(mean_time) << ','
          << fmt(rate_sum / static_cast<double>(runs.size())) << ',' << fmt(ex.oracle_mean_time) << ','
          << fmt(gap_pct(mean_time, ex.oracle_mean_time)) << '\n';

      Series s;
      s.label = sweep.parameter + "=" + result.values[vi] + " " + label;
      s.color = palette(color);
      s.width = 2.0;
      for (const auto& p : mean_curve(curves)) {
        s.x.push_back(static_cast<double>(p.step));
        s.y.push_back(p.mean_trip_time);
      }
      chart.series.push_back(std::move(s));
      ++color;
    }
    if (std::isfinite(ex.oracle_mean_time)) {
      chart.references.push_back({"oracle " + sweep.parameter + "=" + result.values[vi], ex.oracle_mean_time,
                                  palette(color - 1)});
    }
  }
  save_svg(base.output_dir / "sweep.svg", chart, options.timestamp);
  return result;
}

}  // namespace bwroute::bench
