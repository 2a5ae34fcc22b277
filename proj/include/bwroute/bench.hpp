#pragma once

#include "bwroute/agents.hpp"
#include "bwroute/gridworld.hpp"
#include "bwroute/planner.hpp"
#include "bwroute/traffic.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bwroute::bench {

namespace fs = std::filesystem;

/// Seeded map family: `num_maps` distinct allocations of `num_high_bw` cells.
struct GeneratorSpec {
  int rows = 7;
  int cols = 7;
  Cell start{6, 0};
  Cell destination{0, 6};
  int num_high_bw = 4;
  int num_maps = 3;
  std::uint64_t seed = 7;
  int max_attempts = 1000;  // per map, before giving up
};

/// Draws maps one at a time, so the first n maps of a family do not depend
/// on how many are requested. Maps on which `requirement` cannot be met are
/// rejected and redrawn. Throws ConfigError when k is too large or the
/// attempt budget runs out.
std::vector<BandwidthMap> generate_maps(const GeneratorSpec& spec, const TrafficGrid& traffic, double requirement,
                                        double transfer_scale = 1.0);

/// Writes map_<i>.map files into `dir` and returns their paths.
std::vector<fs::path> write_maps(const fs::path& dir, const std::vector<BandwidthMap>& maps);

struct TrafficSource {
  std::optional<fs::path> grid_file;
  std::optional<fs::path> heatmap_csv;
  std::optional<std::uint64_t> synthetic_seed;
  IngestSpec ingest;  // for heatmap / synthetic sources
};

struct LearnerSpec {
  LearnerConfig config;  // seed and training_steps are filled per run
};

struct BaselineToggles {
  bool bandwidth_unaware = false;
  bool traffic_unaware = false;
  bool planners = true;
};

struct SweepSpec {
  std::string parameter;  // num_high_bw | num_maps | requirement | reward_mode | algorithm
  std::vector<std::string> values;

  void validate() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TrafficSource traffic;
  std::vector<fs::path> map_files;
  std::optional<GeneratorSpec> generator;
  double requirement = 1.0;
  std::vector<RewardMode> reward_modes{RewardMode::cumulative};
  RewardConfig reward;  // constants; mode is taken from reward_modes
  std::vector<LearnerSpec> learners;
  long training_steps = 200'000;
  long eval_cadence = 1000;
  Dynamics dynamics;
  Heading initial_heading = Heading::north;
  double quantum = 0.0;
  BaselineToggles baselines;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  fs::path output_dir = "results";
  std::optional<SweepSpec> sweep;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses JSON text. Relative paths resolve against `base_dir`. Unknown keys
/// are rejected by name.
ExperimentConfig parse_config(std::string_view json_text, const fs::path& base_dir = {});
ExperimentConfig load_config(const fs::path& path);
/// Lossless JSON rendering; parse_config(to_json(c)) == c up to path resolution.
std::string to_json(const ExperimentConfig& config);

struct RunOptions {
  int jobs = 1;
  bool timestamp = true;
};

struct RunRecord {
  std::string label;  // algorithm-mode[-baseline]
  Algorithm algorithm;
  RewardMode mode;
  std::optional<BaselineKind> baseline;
  std::uint64_t seed;
  TrainingCurve curve;
  Evaluation final_eval;
  double wall_seconds = 0.0;
  fs::path curve_path;
  std::string error;  // non-empty if the run failed
};

struct OracleRow {
  int map_id;
  RoutePlan optimal;
  RoutePlan bandwidth_unaware;
  RoutePlan traffic_unaware;
};

struct ExperimentResult {
  fs::path output_dir;
  std::vector<OracleRow> oracle;
  double oracle_mean_time = 0.0;  // mean optimal total_time over the map set
  std::vector<RunRecord> runs;
};

/// Resolves traffic and maps for `config`.
TrafficGrid resolve_traffic(const ExperimentConfig& config);
std::vector<BandwidthMap> resolve_maps(const ExperimentConfig& config, const TrafficGrid& traffic);

/// Trains/evaluates every (seed x learner x reward mode x variant), writes
/// curves, summary, oracle table, timings and a convergence plot under
/// config.output_dir. Throws ConfigError on validation failure and
/// std::runtime_error after writing partial results if any run failed.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Re-renders <dir>/convergence.svg from the curve CSVs and oracle table of
/// a result bundle: thin per-seed lines, a mean line per run label and the
/// oracle optimum as a dashed reference.
fs::path plot_bundle(const fs::path& dir, bool timestamp);

struct SweepResult {
  fs::path output_dir;
  std::vector<std::string> values;
  std::vector<ExperimentResult> experiments;
};

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const SweepSpec& sweep, const std::string& value);
SweepResult run_sweep(const ExperimentConfig& base, const SweepSpec& sweep, const RunOptions& options = {});

// --- SVG line charts -------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  std::string color = "#1f77b4";
  double width = 1.5;
  double opacity = 1.0;
  bool in_legend = true;
};

struct ReferenceLine {
  std::string label;
  double y;
  std::string color = "#d62728";
};

struct Chart {
  std::string title;
  std::string x_label = "training iterations (environment steps)";
  std::string y_label = "trip completion time";
  std::vector<Series> series;
  std::vector<ReferenceLine> references;
  int width = 800;
  int height = 500;
};

void render_svg(std::ostream& out, const Chart& chart, bool timestamp);
void save_svg(const fs::path& path, const Chart& chart, bool timestamp);
std::string palette(std::size_t index);

/// Mean over curves at each step, ignoring NaN entries.
TrainingCurve mean_curve(const std::vector<TrainingCurve>& curves);

}  // namespace bwroute::bench
