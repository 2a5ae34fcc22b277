#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bwroute/bench.hpp"
#include "bwroute/error.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

using namespace bwroute;
using namespace bwroute::bench;

namespace {

const std::string kData = BWROUTE_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bwroute_test_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string small_config(const fs::path& out, const std::string& extra = "") {
  return R"({
    "name": "small",
    "traffic": { "grid": ")" + kData + R"(/traffic_7x7.grid" },
    "maps": { "files": [")" + kData + R"(/maps/hbw4/map_0.map", ")" + kData + R"(/maps/hbw4/map_1.map"] },
    "requirement": 1,
    "reward_modes": ["step", "cumulative"],
    "learners": [{ "algorithm": "q_learning" }, { "algorithm": "actor_critic", "learning_rate": 0.2 }],
    "training_steps": 4000,
    "eval_cadence": 1000,
    "seeds": [1, 2],
    "output_dir": ")" + out.string() + "\"" + extra + "}";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BWROUTE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(small_config("/tmp/x"));
  CHECK(c.name == "small");
  CHECK(c.map_files.size() == 2);
  CHECK(c.reward_modes == std::vector<RewardMode>{RewardMode::step, RewardMode::cumulative});
  REQUIRE(c.learners.size() == 2);
  CHECK(c.learners[1].config.learning_rate == 0.2);
  CHECK(c.learners[1].config.critic_rate == 0.1);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(c.training_steps == 4000);
  CHECK(c.dynamics.step_limit == 200);
  CHECK(c.reward == RewardConfig{});
}

TEST_CASE("unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config(small_config("/tmp/x", R"(, "learning_rat": 1)")),
                       doctest::Contains("learning_rat"), ConfigError);
  const std::string nested = R"({"name": "n", "traffic": {"grid": ")" + kData +
                             R"(/traffic_7x7.grid", "rotation": 3}, "maps": {"files": [")" + kData +
                             R"(/maps/hbw4/map_0.map"]}, "learners": [{"algorithm": "q_learning"}]})";
  CHECK_THROWS_WITH_AS(parse_config(nested), doctest::Contains("traffic.rotation"), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(small_config("/tmp/x", R"(, "seeds_extra": 0)")), doctest::Contains("seeds_extra"),
                       ConfigError);
  std::string empty_seeds = small_config("/tmp/x");
  empty_seeds.replace(empty_seeds.find("[1, 2]"), 6, "[]");
  CHECK_THROWS_WITH_AS(parse_config(empty_seeds), doctest::Contains("seeds"), ConfigError);
  std::string missing = small_config("/tmp/x");
  missing.replace(missing.find("map_1.map"), 9, "map_9.map");
  CHECK_THROWS_WITH_AS(parse_config(missing), doctest::Contains("not found"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(small_config("/tmp/x", R"(, "baselines": {"planners": false}, "learners": [])")),
                       doctest::Contains("learner"), ConfigError);
  ExperimentConfig c = parse_config(small_config("/tmp/x"));
  c.training_steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  SweepSpec s{"num_high_bw", {"3"}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {"colour", {"1", "2"}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const ExperimentConfig c = load_config(fs::path(kData) / ".." / "configs" / "default.json");
  CHECK(fs::exists(*c.traffic.grid_file));
  CHECK(c.map_files.size() == 3);
  CHECK(c.seeds.size() == 5);
  REQUIRE(c.learners.size() == 1);
  CHECK(c.learners[0].config.algorithm == Algorithm::actor_critic);
  CHECK(c.reward_modes == std::vector<RewardMode>{RewardMode::cumulative});
}

TEST_CASE("config round trip") {
  for (const char* name : {"default", "reward_modes", "baselines", "sweep_num_high_bw", "sweep_requirement",
                           "sweep_num_maps"}) {
    CAPTURE(name);
    const ExperimentConfig c = load_config(fs::path(kData) / ".." / "configs" / (std::string(name) + ".json"));
    const std::string once = to_json(c);
    const std::string twice = to_json(parse_config(once));
    CHECK(once == twice);
  }
  ExperimentConfig c = parse_config(small_config("/tmp/x", R"(, "reward": {"punishment_scale": 0.5, "step_penalty": 0.25},
      "quantum": 0.005, "initial_heading": "east", "step_limit": 150, "transfer_scale": 0.75)"));
  const ExperimentConfig back = parse_config(to_json(c));
  CHECK(back.reward == c.reward);
  CHECK(back.quantum == 0.005);
  CHECK(back.initial_heading == Heading::east);
  CHECK(back.dynamics.step_limit == 150);
  CHECK(back.dynamics.transfer_scale == 0.75);
}

TEST_CASE("map generation") {
  const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
  GeneratorSpec spec;
  spec.num_maps = 5;
  const auto a = generate_maps(spec, traffic, 1.0);
  const auto b = generate_maps(spec, traffic, 1.0);
  REQUIRE(a.size() == 5);
  std::set<std::vector<Cell>> layouts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].high_bw == b[i].high_bw);
    CHECK(a[i].high_bw.size() == 4);
    CHECK(a[i].map_id == static_cast<int>(i));
    CHECK_FALSE(a[i].is_high_bw(spec.start));
    CHECK_FALSE(a[i].is_high_bw(spec.destination));
    CHECK(optimal_route(a[i], traffic, 1.0).feasible);
    layouts.insert(a[i].high_bw);
  }
  CHECK(layouts.size() == 5);

  // The first maps of a family do not depend on the count.
  GeneratorSpec three = spec;
  three.num_maps = 3;
  const auto c = generate_maps(three, traffic, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i].high_bw == a[i].high_bw);

  // Shipped maps are this generator's output.
  for (int k : {3, 4, 5}) {
    GeneratorSpec s = spec;
    s.num_high_bw = k;
    const auto maps = generate_maps(s, traffic, 1.0);
    for (int i = 0; i < 5; ++i) {
      const auto shipped =
          load_bandwidth_map(kData + "/maps/hbw" + std::to_string(k) + "/map_" + std::to_string(i) + ".map");
      CHECK(shipped.high_bw == maps[static_cast<std::size_t>(i)].high_bw);
    }
  }

  const fs::path dir = scratch("genmaps");
  const auto paths = write_maps(dir, a);
  REQUIRE(paths.size() == 5);
  CHECK(paths[0].filename() == "map_0.map");
  const auto again = write_maps(dir / "again", b);
  for (std::size_t i = 0; i < paths.size(); ++i) CHECK(slurp(paths[i]) == slurp(again[i]));
}

TEST_CASE("map generation edge cases") {
  const TrafficGrid traffic = load_traffic_grid(kData + "/traffic_7x7.grid");
  GeneratorSpec spec;
  spec.num_high_bw = 47;
  spec.num_maps = 1;
  const auto full = generate_maps(spec, traffic, 1.0);
  CHECK(full[0].high_bw.size() == 47);
  spec.num_high_bw = 48;
  CHECK_THROWS_AS(generate_maps(spec, traffic, 1.0), ConfigError);
  // Only one saturated layout exists, so a second distinct one cannot be drawn.
  spec.num_high_bw = 47;
  spec.num_maps = 2;
  spec.max_attempts = 20;
  CHECK_THROWS_AS(generate_maps(spec, traffic, 1.0), ConfigError);
  spec = {};
  spec.num_high_bw = 0;
  CHECK_THROWS_AS(generate_maps(spec, traffic, 1.0), ConfigError);  // requirement 1 is never met
  spec.num_maps = 1;
  CHECK(generate_maps(spec, traffic, 0.0).size() == 1);
}

TEST_CASE("mean curve ignores NaN") {
  const TrainingCurve a{{10, 4.0, 1.0}, {20, std::nan(""), 0.0}, {30, 3.0, 1.0}};
  const TrainingCurve b{{10, 6.0, 0.5}, {20, 5.0, 1.0}};
  const TrainingCurve m = mean_curve({a, b});
  REQUIRE(m.size() == 2);
  CHECK(m[0].mean_trip_time == 5.0);
  CHECK(m[0].success_rate == 0.75);
  CHECK(m[1].mean_trip_time == 5.0);
  CHECK(std::isnan(mean_curve({a}).at(1).mean_trip_time));
}

TEST_CASE("svg rendering") {
  Chart chart;
  chart.title = "a < b & c";
  Series s;
  s.label = "run \"1\"";
  s.x = {0, 1, 2, 3};
  s.y = {5, std::nan(""), 4, 3};
  chart.series.push_back(s);
  chart.references.push_back({"oracle", 2.5});
  std::ostringstream out;
  render_svg(out, chart, false);
  const std::string svg = out.str();
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("run &quot;1&quot;") != std::string::npos);
  CHECK(svg.find("trip completion time") != std::string::npos);
  CHECK(svg.find("environment steps") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("<!--") == std::string::npos);
  // The NaN splits the series into two polylines.
  std::size_t lines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  CHECK(lines == 2);
  std::ostringstream stamped;
  render_svg(stamped, chart, true);
  CHECK(stamped.str().find("<!-- generated") != std::string::npos);
  std::ostringstream again;
  render_svg(again, chart, false);
  CHECK(again.str() == svg);
}

TEST_CASE("experiment bundle") {
  const fs::path out = scratch("experiment");
  ExperimentConfig c = parse_config(small_config(out / "a"));
  const ExperimentResult r = run_experiment(c, {2, false});
  CHECK(r.runs.size() == 8);
  for (const char* f : {"config.json", "traffic.grid", "oracle.csv", "summary.csv", "timing.csv", "convergence.svg",
                        "maps/map_0.map", "maps/map_1.map"}) {
    CHECK(fs::exists(out / "a" / f));
  }
  const double q = default_quantum(c.requirement);
  for (const auto& run : r.runs) {
    CHECK(run.error.empty());
    CHECK(fs::exists(run.curve_path));
    std::ifstream in(run.curve_path);
    const TrainingCurve curve = read_curve_csv(in);
    CHECK(curve.size() == static_cast<std::size_t>(c.training_steps / c.eval_cadence));
    if (run.final_eval.success_rate > 0) CHECK(run.final_eval.mean_trip_time >= r.oracle_mean_time - q);
  }
  CHECK(slurp(out / "a" / "summary.csv").rfind("label,algorithm,reward_mode,variant,seed,final_trip_time", 0) == 0);
  CHECK(r.oracle.size() == 2);
  for (const auto& row : r.oracle) {
    CHECK(row.bandwidth_unaware.total_time <= row.optimal.total_time);
    CHECK(row.optimal.total_time <= row.traffic_unaware.total_time);
  }

  // Same config, different worker count: byte-identical CSVs.
  c.output_dir = out / "b";
  const ExperimentResult r2 = run_experiment(c, {1, false});
  for (std::size_t i = 0; i < r.runs.size(); ++i) CHECK(slurp(r.runs[i].curve_path) == slurp(r2.runs[i].curve_path));
  CHECK(slurp(out / "a" / "summary.csv") == slurp(out / "b" / "summary.csv"));
  CHECK(slurp(out / "a" / "oracle.csv") == slurp(out / "b" / "oracle.csv"));
  CHECK(slurp(out / "a" / "convergence.svg") == slurp(out / "b" / "convergence.svg"));

  // The echoed config re-validates and reproduces the run.
  ExperimentConfig echoed = load_config(out / "a" / "config.json");
  echoed.output_dir = out / "c";
  const ExperimentResult r3 = run_experiment(echoed, {1, false});
  for (std::size_t i = 0; i < r.runs.size(); ++i) CHECK(slurp(r.runs[i].curve_path) == slurp(r3.runs[i].curve_path));

  // Re-rendering from disk gives the same picture.
  const std::string before = slurp(out / "a" / "convergence.svg");
  plot_bundle(out / "a", false);
  CHECK(slurp(out / "a" / "convergence.svg") == before);
}

TEST_CASE("baseline variants get their own run directories") {
  const fs::path out = scratch("variants");
  ExperimentConfig c = parse_config(small_config(out, R"(, "baselines": {"bandwidth_unaware": true, "traffic_unaware": true})"));
  c.learners.resize(1);
  c.reward_modes = {RewardMode::cumulative};
  c.seeds = {1};
  const ExperimentResult r = run_experiment(c, {3, false});
  REQUIRE(r.runs.size() == 3);
  CHECK(fs::exists(out / "runs" / "q_learning-cumulative" / "seed_1" / "curve.csv"));
  CHECK(fs::exists(out / "runs" / "q_learning-cumulative-bandwidth_unaware" / "seed_1" / "curve.csv"));
  CHECK(fs::exists(out / "runs" / "q_learning-cumulative-traffic_unaware" / "seed_1" / "curve.csv"));
}

TEST_CASE("a failed run keeps partial results and raises") {
  const fs::path out = scratch("failure");
  ExperimentConfig c = parse_config(small_config(out));
  c.seeds = {1};
  // A plain file where the run directories should go.
  std::ofstream(out / "runs") << "blocked";
  CHECK_THROWS_AS(run_experiment(c, {1, false}), std::runtime_error);
  CHECK(fs::exists(out / "oracle.csv"));
  CHECK(fs::exists(out / "timing.csv"));
  CHECK(slurp(out / "timing.csv").find("failed") != std::string::npos);
}

TEST_CASE("sweeps") {
  const fs::path out = scratch("sweep");
  ExperimentConfig base = load_config(fs::path(kData) / ".." / "configs" / "sweep_num_high_bw.json");
  base.output_dir = out / "hbw";
  base.training_steps = 2000;
  base.seeds = {1};
  const SweepResult hbw = run_sweep(base, *base.sweep, {2, false});
  REQUIRE(hbw.experiments.size() == 3);
  CHECK(hbw.experiments[0].oracle_mean_time >= hbw.experiments[1].oracle_mean_time);
  CHECK(hbw.experiments[1].oracle_mean_time >= hbw.experiments[2].oracle_mean_time);
  CHECK(fs::exists(out / "hbw" / "num_high_bw_3" / "summary.csv"));
  CHECK(fs::exists(out / "hbw" / "sweep.csv"));
  CHECK(fs::exists(out / "hbw" / "sweep.svg"));

  ExperimentConfig req = load_config(fs::path(kData) / ".." / "configs" / "sweep_requirement.json");
  req.output_dir = out / "req";
  req.training_steps = 2000;
  req.seeds = {1};
  const SweepResult rr = run_sweep(req, *req.sweep, {2, false});
  REQUIRE(rr.experiments.size() == 3);
  CHECK(rr.experiments[0].oracle_mean_time <= rr.experiments[1].oracle_mean_time);
  CHECK(rr.experiments[1].oracle_mean_time <= rr.experiments[2].oracle_mean_time);

  const ExperimentConfig modes = apply_sweep_value(base, {"reward_mode", {"step", "cumulative"}}, "step");
  CHECK(modes.reward_modes == std::vector<RewardMode>{RewardMode::step});
  const ExperimentConfig alg = apply_sweep_value(base, {"algorithm", {"q_learning", "actor_critic"}}, "q_learning");
  CHECK(alg.learners.at(0).config.algorithm == Algorithm::q_learning);
  CHECK_THROWS_AS(apply_sweep_value(base, {"num_maps", {"1", "x"}}, "x"), ConfigError);
  ExperimentConfig files = parse_config(small_config(out / "files"));
  CHECK_THROWS_AS(apply_sweep_value(files, {"num_high_bw", {"3", "4"}}, "3"), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const fs::path out = scratch("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);

  std::ofstream(out / "unknown.json") << small_config(out / "u", R"(, "colour": "red")");
  CHECK(run_cli("train " + (out / "unknown.json").string()) == 2);

  std::ofstream(out / "ok.json") << small_config(out / "run");
  fs::create_directories(out / "blocked");
  std::ofstream(out / "blocked" / "runs") << "x";
  CHECK(run_cli("train " + (out / "ok.json").string() + " --seed 3 --out " + (out / "blocked").string()) == 1);

  CHECK(run_cli("train " + (out / "ok.json").string() + " --seed 3 --no-timestamp --jobs 2") == 0);
  CHECK(fs::exists(out / "run" / "runs" / "q_learning-step" / "seed_3" / "curve.csv"));
  CHECK_FALSE(fs::exists(out / "run" / "runs" / "q_learning-step" / "seed_1"));
  CHECK(run_cli("plot " + (out / "run").string() + " --no-timestamp") == 0);

  const std::string grid = kData + "/traffic_7x7.grid";
  CHECK(run_cli("genmaps --traffic " + grid + " --high-bw 4 --count 2 --seed 7 --out " + (out / "maps").string()) == 0);
  CHECK(slurp(out / "maps" / "map_1.map") == slurp(kData + "/maps/hbw4/map_1.map"));
  CHECK(run_cli("genmaps --traffic " + grid + " --high-bw 48 --out " + (out / "maps2").string()) == 2);
  CHECK(run_cli("solve --map " + kData + "/maps/hbw4/map_0.map --traffic " + grid + " --out " +
                (out / "plans").string()) == 0);
  CHECK(slurp(out / "plans" / "optimal.csv").rfind("step,action,row,col,time_after,data_after\n", 0) == 0);
  CHECK(run_cli("synth-heatmap --seed 2022 --rotation 28 --out " + (out / "heat.csv").string()) == 0);
  CHECK(slurp(out / "heat.csv") == slurp(kData + "/synthetic_heatmap.csv"));
  CHECK(run_cli("ingest " + (out / "heat.csv").string() + " --rotation 28 --out " + (out / "t.grid").string()) == 0);
  CHECK(slurp(out / "t.grid") == slurp(grid));
  std::ofstream(out / "bad.csv") << "x,y,traversals\n1,2,three\n";
  CHECK(run_cli("ingest " + (out / "bad.csv").string()) == 2);
}
