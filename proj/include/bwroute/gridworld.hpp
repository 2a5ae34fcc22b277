#pragma once

#include "bwroute/rng.hpp"
#include "bwroute/traffic.hpp"

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace bwroute {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Clockwise order, so turning right is +1 (mod 4). North is decreasing row.
enum class Heading : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

/// Heading-relative moves. Left and right turn 90 degrees, then advance one cell.
enum class Action : std::uint8_t { forward = 0, left = 1, right = 2 };

inline constexpr std::array<Action, 3> kActions{Action::forward, Action::left, Action::right};

Heading turn(Heading heading, Action action);
Cell advance(Cell cell, Heading heading);
std::string_view to_string(Heading heading);
std::string_view to_string(Action action);
Heading parse_heading(std::string_view name);

/// One bandwidth allocation: binary high/low bandwidth per cell, plus the
/// fixed trip endpoints.
struct BandwidthMap {
  int rows = 0;
  int cols = 0;
  std::vector<Cell> high_bw;  // sorted, unique
  Cell start;
  Cell destination;
  int map_id = 0;

  BandwidthMap() = default;
  BandwidthMap(int rows, int cols, Cell start, Cell destination, std::vector<Cell> high_bw, int map_id = 0);

  bool contains(Cell c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
  bool is_high_bw(Cell c) const { return contains(c) && mask_(c.row, c.col); }
  /// Throws ConfigError.
  void validate() const;

 private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
};

BandwidthMap read_bandwidth_map(std::istream& in, int map_id = 0);
BandwidthMap load_bandwidth_map(const std::filesystem::path& path, int map_id = 0);
void write_bandwidth_map(std::ostream& out, const BandwidthMap& map);
void save_bandwidth_map(const std::filesystem::path& path, const BandwidthMap& map);

enum class RewardMode : std::uint8_t { step, cumulative };
std::string_view to_string(RewardMode mode);
RewardMode parse_reward_mode(std::string_view name);

/// Reward constants. Defaults are the step/cumulative reward functions as
/// published; `step_penalty` is a flat per-step cost that is zero unless the
/// traffic-unaware ablation switches it on.
struct RewardConfig {
  RewardMode mode = RewardMode::cumulative;
  double high_bw_step_reward = 1.0;  // step mode only
  double requirement_bonus = 3.0;    // cumulative mode only
  double destination_reward = 10.0;
  double punishment_scale = 1.0;  // multiplies density / mean_density
  double step_penalty = 0.0;

  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

struct EpisodeState {
  Cell cell;
  Heading heading = Heading::north;
  double data_remaining = 0.0;
  double trip_time = 0.0;
  int steps = 0;
  bool requirement_met = false;
  int active_map = 0;
};

struct StepOutcome {
  EpisodeState next_state;
  double reward = 0.0;
  bool terminal = false;
  double transferred_this_step = 0.0;
};

/// Static parameters of the transition function that are not part of a map.
struct Dynamics {
  int step_limit = 200;
  double transfer_scale = 1.0;
};

inline constexpr double kDensityFloor = 1e-9;

/// Data moved by one visit to a high-bandwidth cell:
/// (mean_density / max(density, floor)) * delay * scale.
double transfer_amount(Cell cell, const TrafficGrid& traffic, double scale = 1.0);

/// Places the agent at the start of one uniformly drawn map.
EpisodeState reset(std::span<const BandwidthMap> maps, const TrafficGrid& traffic, double requirement, Rng& rng,
                   Heading initial_heading = Heading::north);

/// Starts an episode on `map` without sampling.
EpisodeState start_state(const BandwidthMap& map, double requirement, Heading initial_heading = Heading::north);

/// The deterministic transition. Throws UsageError if `state` is already
/// terminal (destination reached with the requirement met, or step limit hit).
StepOutcome step(const EpisodeState& state, Action action, const BandwidthMap& map, const TrafficGrid& traffic,
                 const RewardConfig& reward, const Dynamics& dynamics = {});

bool is_terminal(const EpisodeState& state, const BandwidthMap& map, const Dynamics& dynamics);

/// Packed tabular key: map_id (16 bits) | cell index (20) | heading (2) | data bucket (26).
using StateKey = std::uint64_t;

/// Quantizes EpisodeState onto a finite key space. The data bucket is
/// ceil(data_remaining / q), capped at ceil(requirement / q).
class StateEncoder {
 public:
  StateEncoder(int cols, double requirement, double quantum);

  StateKey encode(const EpisodeState& state) const;
  int bucket(double data_remaining) const;
  int max_bucket() const { return max_bucket_; }
  double quantum() const { return quantum_; }

  struct Fields {
    int map_id;
    int cell_index;
    Heading heading;
    int bucket;
  };
  static Fields decode(StateKey key);
  static constexpr std::string_view kSchema = "map_id:16 cell:20 heading:2 bucket:26";

 private:
  int cols_;
  double quantum_;
  int max_bucket_;
};

/// Default data resolution: requirement / 100 (1 when the requirement is 0).
double default_quantum(double requirement);

/// Everything an agent needs to run episodes.
struct EnvConfig {
  std::vector<BandwidthMap> maps;
  TrafficGrid traffic;
  double requirement = 1.0;
  RewardConfig reward;
  Dynamics dynamics;
  Heading initial_heading = Heading::north;
  double quantum = 0.0;  // <= 0 means default_quantum(requirement)

  void validate() const;
  double effective_quantum() const { return quantum > 0.0 ? quantum : default_quantum(requirement); }
};

/// Stateful wrapper around reset()/step() that owns the sampling RNG.
class Environment {
 public:
  Environment(EnvConfig config, std::uint64_t seed);

  const EpisodeState& reset();
  const EpisodeState& reset_on(int map_index);
  StepOutcome step(Action action);

  const EpisodeState& state() const { return state_; }
  const BandwidthMap& active_map() const { return config_.maps[static_cast<std::size_t>(map_index_)]; }
  const EnvConfig& config() const { return config_; }
  bool done() const { return done_; }

 private:
  EnvConfig config_;
  Rng rng_;
  EpisodeState state_;
  int map_index_ = 0;
  bool done_ = true;
};

/// One row of the optional per-step debug trace.
struct TraceRow {
  int step;
  Cell cell;
  Heading heading;
  Action action;
  double reward;
  double trip_time;
  double data_remaining;
};
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

}  // namespace bwroute
