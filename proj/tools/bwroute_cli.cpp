// bwroute: command-line front end for ingestion, map generation, planning,
// training runs, sweeps and plot re-rendering.

#include "bwroute/bench.hpp"
#include "bwroute/error.hpp"
#include "bwroute/text.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace bwroute;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<fs::path> out;
  bool no_timestamp = false;
};

struct IngestArgs {
  double rotation = 0.0;
  std::vector<double> crop{0.0, 0.0, 7.0, 7.0};
  int rows = 7;
  int cols = 7;

  IngestSpec spec() const {
    IngestSpec s;
    s.rotation_deg = rotation;
    s.crop = {crop[0], crop[1], crop[2], crop[3]};
    s.rows = rows;
    s.cols = cols;
    s.validate();
    return s;
  }
};

void add_ingest_options(CLI::App* cmd, IngestArgs& args) {
  cmd->add_option("--rotation", args.rotation, "rotation about the crop centroid, degrees")->capture_default_str();
  cmd->add_option("--crop", args.crop, "crop box min_x,min_y,max_x,max_y")->expected(4)->delimiter(',');
  cmd->add_option("--rows", args.rows)->capture_default_str();
  cmd->add_option("--cols", args.cols)->capture_default_str();
}

Cell parse_cell(const std::string& arg) {
  const auto parts = text::split(arg, ',');
  const auto r = parts.size() == 2 ? text::parse<int>(parts[0]) : std::nullopt;
  const auto c = parts.size() == 2 ? text::parse<int>(parts[1]) : std::nullopt;
  if (!r || !c) throw ConfigError("expected a cell as row,col, got '" + arg + "'");
  return {*r, *c};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void print_summary(std::string_view name, const RoutePlan& plan) {
  std::cout << name << ": ";
  write_plan_summary(std::cout, plan);
}

bench::ExperimentConfig load_with_overrides(const fs::path& path, const Globals& g) {
  bench::ExperimentConfig config = bench::load_config(path);
  if (g.seed) config.seeds = {*g.seed};
  if (g.out) config.output_dir = *g.out;
  return config;
}

void report(const bench::ExperimentResult& result) {
  std::cout << "oracle mean trip time " << text::format(result.oracle_mean_time) << '\n';
  for (const auto& run : result.runs) {
    std::cout << run.label << " seed " << run.seed << ": trip time " << text::format(run.final_eval.mean_trip_time)
              << ", success " << text::format(run.final_eval.success_rate) << '\n';
  }
  std::cout << "results in " << result.output_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandwidth-aware route planning benchmark"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "seed override (generator seed, or a single training seed)");
  app.add_option("--jobs", g.jobs, "parallel training runs")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "output file or directory");
  app.add_flag("--no-timestamp", g.no_timestamp, "omit the generation time from SVG output");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "bin a traversal heatmap CSV into a traffic grid file");
  fs::path heatmap_path;
  IngestArgs ingest_args;
  ingest->add_option("heatmap", heatmap_path, "CSV with header x,y,traversals")->required();
  add_ingest_options(ingest, ingest_args);

  // synth-heatmap
  auto* synth = app.add_subcommand("synth-heatmap", "write a synthetic traversal heatmap CSV");
  IngestArgs synth_args;
  add_ingest_options(synth, synth_args);

  // genmaps
  auto* genmaps = app.add_subcommand("genmaps", "sample high-bandwidth allocations");
  fs::path gen_traffic;
  bench::GeneratorSpec gen;
  std::string gen_start = "6,0";
  std::string gen_dest = "0,6";
  double gen_requirement = 1.0;
  double gen_scale = 1.0;
  genmaps->add_option("--traffic", gen_traffic, "traffic grid file")->required()->check(CLI::ExistingFile);
  genmaps->add_option("--rows", gen.rows)->capture_default_str();
  genmaps->add_option("--cols", gen.cols)->capture_default_str();
  genmaps->add_option("--start", gen_start, "row,col")->capture_default_str();
  genmaps->add_option("--dest", gen_dest, "row,col")->capture_default_str();
  genmaps->add_option("--high-bw", gen.num_high_bw, "high-bandwidth cells per map")->capture_default_str();
  genmaps->add_option("--count", gen.num_maps, "number of maps")->capture_default_str();
  genmaps->add_option("--requirement", gen_requirement, "maps that cannot meet it are redrawn")->capture_default_str();
  genmaps->add_option("--transfer-scale", gen_scale)->capture_default_str();
  genmaps->add_option("--max-attempts", gen.max_attempts)->capture_default_str();

  // solve
  auto* solve = app.add_subcommand("solve", "run the oracle and baseline planners on one map");
  fs::path solve_map;
  fs::path solve_traffic;
  double solve_requirement = 1.0;
  PlannerOptions solve_opts;
  std::string solve_heading = "north";
  int brute_hops = 0;
  solve->add_option("--map", solve_map)->required()->check(CLI::ExistingFile);
  solve->add_option("--traffic", solve_traffic)->required()->check(CLI::ExistingFile);
  solve->add_option("--requirement", solve_requirement)->capture_default_str();
  solve->add_option("--quantum", solve_opts.quantum, "data bucket width (default requirement/100)");
  solve->add_option("--transfer-scale", solve_opts.transfer_scale)->capture_default_str();
  solve->add_option("--heading", solve_heading, "initial heading")->capture_default_str();
  solve->add_option("--node-budget", solve_opts.node_budget)->capture_default_str();
  solve->add_option("--brute-force", brute_hops, "also enumerate up to this many hops (small grids only)");

  // train
  auto* train_cmd = app.add_subcommand("train", "run an experiment config");
  fs::path train_config;
  train_cmd->add_option("config", train_config)->required()->check(CLI::ExistingFile);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment config once per sweep value");
  fs::path sweep_config;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  sweep_cmd->add_option("config", sweep_config)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--parameter", sweep_param, "num_high_bw | num_maps | requirement | reward_mode | algorithm");
  sweep_cmd->add_option("--values", sweep_values)->delimiter(',');

  // plot
  auto* plot = app.add_subcommand("plot", "re-render SVG plots from a result directory");
  fs::path plot_dir;
  plot->add_option("results", plot_dir, "directory written by train (or one subdirectory of a sweep)")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const bool timestamp = !g.no_timestamp;

  try {
    if (*ingest) {
      const TrafficGrid grid = bin_heatmap(load_heatmap_csv(heatmap_path), ingest_args.spec());
      if (g.out) {
        save_traffic_grid(*g.out, grid);
        std::cout << "wrote " << g.out->string() << '\n';
      } else {
        write_traffic_grid(std::cout, grid);
      }
    } else if (*synth) {
      const auto points = synthesize_heatmap(synth_args.spec(), g.seed.value_or(2022));
      if (g.out) {
        auto out = open_out(*g.out);
        write_heatmap_csv(out, points);
        std::cout << "wrote " << points.size() << " points to " << g.out->string() << '\n';
      } else {
        write_heatmap_csv(std::cout, points);
      }
    } else if (*genmaps) {
      gen.start = parse_cell(gen_start);
      gen.destination = parse_cell(gen_dest);
      if (g.seed) gen.seed = *g.seed;
      const auto maps = bench::generate_maps(gen, load_traffic_grid(gen_traffic), gen_requirement, gen_scale);
      for (const auto& p : bench::write_maps(g.out.value_or("maps"), maps)) std::cout << "wrote " << p.string() << '\n';
    } else if (*solve) {
      solve_opts.initial_heading = parse_heading(solve_heading);
      const BandwidthMap map = load_bandwidth_map(solve_map);
      const TrafficGrid traffic = load_traffic_grid(solve_traffic);
      const std::vector<std::pair<std::string, RoutePlan>> plans{
          {"optimal", optimal_route(map, traffic, solve_requirement, solve_opts)},
          {"bandwidth_unaware", bandwidth_unaware_route(map, traffic, solve_requirement, solve_opts)},
          {"traffic_unaware", traffic_unaware_route(map, traffic, solve_requirement, solve_opts)},
      };
      std::cout << "# total_time,total_hops,feasible\n";
      for (const auto& [name, plan] : plans) print_summary(name, plan);
      if (brute_hops > 0) {
        print_summary("brute_force", brute_force_optimal(map, traffic, solve_requirement, brute_hops, solve_opts));
      }
      if (g.out) {
        fs::create_directories(*g.out);
        for (const auto& [name, plan] : plans) {
          auto csv = open_out(*g.out / (name + ".csv"));
          write_plan_csv(csv, plan);
          auto summary = open_out(*g.out / (name + ".summary"));
          write_plan_summary(summary, plan);
        }
        std::cout << "plans in " << g.out->string() << '\n';
      }
    } else if (*train_cmd) {
      report(bench::run_experiment(load_with_overrides(train_config, g), {g.jobs, timestamp}));
    } else if (*sweep_cmd) {
      const bench::ExperimentConfig config = load_with_overrides(sweep_config, g);
      bench::SweepSpec sweep;
      if (config.sweep) sweep = *config.sweep;
      if (!sweep_param.empty()) sweep.parameter = sweep_param;
      if (!sweep_values.empty()) sweep.values = sweep_values;
      if (sweep.parameter.empty()) throw ConfigError("sweep: no parameter given on the command line or in the config");
      const auto result = bench::run_sweep(config, sweep, {g.jobs, timestamp});
      for (const auto& ex : result.experiments) report(ex);
      std::cout << "sweep table in " << (result.output_dir / "sweep.csv").string() << '\n';
    } else if (*plot) {
      std::cout << "wrote " << bench::plot_bundle(plot_dir, timestamp).string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
