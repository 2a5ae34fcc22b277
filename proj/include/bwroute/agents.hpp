#pragma once

#include "bwroute/gridworld.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bwroute {

enum class Algorithm : std::uint8_t { q_learning, actor_critic };
std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::actor_critic;
  double learning_rate = 0.1;  // Q step size, or actor step size
  double critic_rate = 0.1;
  // Epsilon-greedy schedule for Q-learning. The actor-critic explores through
  // its softmax policy instead.
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long decay_steps = 0;  // <= 0: half of training_steps
  long training_steps = 200'000;
  std::uint64_t seed = 1;
  static constexpr double discount = 1.0;

  void validate() const;
  long effective_decay_steps() const { return decay_steps > 0 ? decay_steps : training_steps / 2; }
  /// Linear decay from epsilon_start to epsilon_end, then flat.
  double epsilon_at(long step) const;
};

/// Enough to rebuild the StateEncoder a table's keys came from.
struct TableKeySpace {
  int cols = 1;
  double requirement = 0.0;
  double quantum = 1.0;
};

/// Tabular storage. For Q-learning `action_values` are Q(s, .); for the
/// actor-critic they are softmax preferences and `state_value` is the critic.
/// Keys never written read as zeros.
class ValueTable {
 public:
  struct Entry {
    Eigen::Array3d action_values = Eigen::Array3d::Zero();
    double state_value = 0.0;
  };

  using KeySpace = TableKeySpace;

  explicit ValueTable(Algorithm algorithm = Algorithm::q_learning, KeySpace keys = {});

  Algorithm algorithm() const { return algorithm_; }
  const KeySpace& key_space() const { return keys_; }
  StateEncoder encoder() const { return StateEncoder(keys_.cols, keys_.requirement, keys_.quantum); }

  const Entry* find(StateKey key) const;
  Entry& at(StateKey key);
  Eigen::Array3d action_values(StateKey key) const;
  double state_value(StateKey key) const;

  /// Argmax with ties to the lower action (forward < left < right).
  Action greedy_action(StateKey key) const;
  /// Softmax over the stored preferences.
  Eigen::Array3d policy(StateKey key) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Largest magnitude over all stored values.
  double max_abs() const;
  bool all_finite() const;

  /// Text checkpoint, entries sorted by key.
  void save(std::ostream& out) const;
  static ValueTable load(std::istream& in);

  bool operator==(const ValueTable& other) const;

 private:
  Algorithm algorithm_;
  KeySpace keys_;
  std::unordered_map<StateKey, Entry> entries_;
};

Eigen::Array3d softmax(const Eigen::Array3d& preferences);

struct CurvePoint {
  long step = 0;
  double mean_trip_time = 0.0;  // NaN when no evaluation episode succeeded
  double success_rate = 0.0;
};
using TrainingCurve = std::vector<CurvePoint>;

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);
TrainingCurve read_curve_csv(std::istream& in);

struct MapEvaluation {
  int map_id = 0;
  bool success = false;
  double trip_time = 0.0;  // step-limit sentinel on failure
  int steps = 0;
};

struct Evaluation {
  double mean_trip_time = 0.0;  // over successful episodes only; NaN if none
  double success_rate = 0.0;
  std::vector<MapEvaluation> per_map;
};

/// Greedy (epsilon = 0) rollouts from every map in the set.
Evaluation evaluate_greedy(const ValueTable& table, const EnvConfig& env, int episodes_per_map = 1);

/// Greedy rollout on one map, optionally recording a trace.
MapEvaluation rollout_greedy(const ValueTable& table, const EnvConfig& env, int map_index,
                             std::vector<TraceRow>* trace = nullptr);

struct TrainResult {
  ValueTable table;
  TrainingCurve curve;
  long episodes = 0;
};

/// Episodic training for `learner.training_steps` environment steps, with a
/// greedy evaluation every `cadence` steps. Deterministic for a given seed.
TrainResult train(const EnvConfig& env, const LearnerConfig& learner, long cadence = 1000);

enum class BaselineKind : std::uint8_t { bandwidth_unaware, traffic_unaware };
std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline(std::string_view name);

/// bandwidth_unaware: no reward for transfer (the destination reward still
/// requires the requirement). traffic_unaware: no density punishment, a flat
/// -1 per step instead.
RewardConfig make_baseline_reward(BaselineKind kind, RewardConfig base);

}  // namespace bwroute
