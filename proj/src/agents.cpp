#include "bwroute/agents.hpp"

#include "bwroute/error.hpp"
#include "bwroute/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace bwroute {

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::q_learning ? "q_learning" : "actor_critic";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "q_learning") return Algorithm::q_learning;
  if (name == "actor_critic") return Algorithm::actor_critic;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0, 1]");
  if (!(critic_rate > 0.0 && critic_rate <= 1.0)) throw ConfigError("critic_rate must be in (0, 1]");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("epsilon_start must be in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) throw ConfigError("epsilon_end must be in [0, 1]");
  if (training_steps < 1) throw ConfigError("training_steps must be positive");
}

double LearnerConfig::epsilon_at(long step) const {
  const long horizon = effective_decay_steps();
  if (horizon <= 0 || step >= horizon) return epsilon_end;
  const double frac = static_cast<double>(step) / static_cast<double>(horizon);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

ValueTable::ValueTable(Algorithm algorithm, KeySpace keys) : algorithm_(algorithm), keys_(keys) {}

const ValueTable::Entry* ValueTable::find(StateKey key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

ValueTable::Entry& ValueTable::at(StateKey key) { return entries_[key]; }

Eigen::Array3d ValueTable::action_values(StateKey key) const {
  const Entry* e = find(key);
  return e ? e->action_values : Eigen::Array3d::Zero();
}

double ValueTable::state_value(StateKey key) const {
  const Entry* e = find(key);
  return e ? e->state_value : 0.0;
}

Action ValueTable::greedy_action(StateKey key) const {
  const Eigen::Array3d v = action_values(key);
  int best = 0;
  for (int a = 1; a < 3; ++a) {
    if (v[a] > v[best]) best = a;
  }
  return static_cast<Action>(best);
}

Eigen::Array3d softmax(const Eigen::Array3d& preferences) {
  const Eigen::Array3d e = (preferences - preferences.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::Array3d ValueTable::policy(StateKey key) const { return softmax(action_values(key)); }

double ValueTable::max_abs() const {
  double m = 0.0;
  for (const auto& [key, e] : entries_) {
    m = std::max({m, e.action_values.abs().maxCoeff(), std::abs(e.state_value)});
  }
  return m;
}

bool ValueTable::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& kv) {
    return kv.second.action_values.allFinite() && std::isfinite(kv.second.state_value);
  });
}

bool ValueTable::operator==(const ValueTable& other) const {
  if (algorithm_ != other.algorithm_ || entries_.size() != other.entries_.size()) return false;
  for (const auto& [key, e] : entries_) {
    const Entry* o = other.find(key);
    if (!o || (o->action_values != e.action_values).any() || o->state_value != e.state_value) return false;
  }
  return keys_.cols == other.keys_.cols && keys_.requirement == other.keys_.requirement &&
         keys_.quantum == other.keys_.quantum;
}

namespace {
constexpr std::string_view kCheckpointMagic = "bwroute-value-table 1";
}

void ValueTable::save(std::ostream& out) const {
  std::vector<StateKey> keys;
  keys.reserve(entries_.size());
  for (const auto& kv : entries_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());

  out << kCheckpointMagic << '\n';
  out << "algorithm " << to_string(algorithm_) << '\n';
  out << "key_schema " << StateEncoder::kSchema << '\n';
  out << "cols " << keys_.cols << '\n';
  out << "requirement " << text::format(keys_.requirement) << '\n';
  out << "quantum " << text::format(keys_.quantum) << '\n';
  out << "entries " << keys.size() << '\n';
  out << "# map_id cell heading bucket | v_forward v_left v_right state_value\n";
  for (StateKey key : keys) {
    const auto f = StateEncoder::decode(key);
    const Entry& e = entries_.at(key);
    out << f.map_id << ' ' << f.cell_index << ' ' << static_cast<int>(f.heading) << ' ' << f.bucket << " | "
        << text::format(e.action_values[0]) << ' ' << text::format(e.action_values[1]) << ' '
        << text::format(e.action_values[2]) << ' ' << text::format(e.state_value) << '\n';
  }
}

ValueTable ValueTable::load(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  const auto next = [&](std::string_view keyword) -> std::string {
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated before `" + std::string(keyword) + "`", row + 1);
    ++row;
    if (keyword.empty()) return line;
    const auto tok = text::tokens(line);
    if (tok.size() < 2 || tok[0] != keyword) {
      throw ParseError("checkpoint line " + std::to_string(row) + ": expected `" + std::string(keyword) + "`", row);
    }
    return line.substr(static_cast<std::size_t>(tok[1].data() - line.data()));
  };
  if (text::trim(next("")) != kCheckpointMagic) throw ParseError("not a value-table checkpoint", 1);
  const Algorithm algorithm = parse_algorithm(text::trim(next("algorithm")));
  if (text::trim(next("key_schema")) != StateEncoder::kSchema) throw ParseError("unsupported key schema", row);
  KeySpace keys;
  const auto num = [&](std::string_view kw) {
    const auto v = text::parse<double>(next(kw));
    if (!v) throw ParseError("checkpoint line " + std::to_string(row) + ": bad number", row);
    return *v;
  };
  keys.cols = static_cast<int>(num("cols"));
  keys.requirement = num("requirement");
  keys.quantum = num("quantum");
  const auto count = static_cast<std::size_t>(num("entries"));
  next("");  // column legend

  ValueTable table(algorithm, keys);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string entry = next("");
    const auto tok = text::tokens(entry);
    if (tok.size() != 9 || tok[4] != "|") throw ParseError("checkpoint line " + std::to_string(row) + ": malformed entry", row);
    std::array<double, 8> v{};
    for (std::size_t j = 0, k = 0; j < tok.size(); ++j) {
      if (j == 4) continue;
      const auto parsed = text::parse<double>(tok[j]);
      if (!parsed) throw ParseError("checkpoint line " + std::to_string(row) + ": bad number", row);
      v[k++] = *parsed;
    }
    const StateKey key = (static_cast<StateKey>(v[0]) << 48) | (static_cast<StateKey>(v[1]) << 28) |
                         (static_cast<StateKey>(v[2]) << 26) | static_cast<StateKey>(v[3]);
    Entry& e = table.at(key);
    e.action_values << v[4], v[5], v[6];
    e.state_value = v[7];
  }
  return table;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "step,mean_trip_time,success_rate\n";
  for (const auto& p : curve) {
    out << p.step << ',' << (std::isnan(p.mean_trip_time) ? std::string("nan") : text::format(p.mean_trip_time))
        << ',' << text::format(p.success_rate) << '\n';
  }
}

TrainingCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "step,mean_trip_time,success_rate") {
    throw ParseError("curve CSV: expected header step,mean_trip_time,success_rate", 1);
  }
  TrainingCurve curve;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != 3) throw ParseError("curve CSV row " + std::to_string(row) + ": expected 3 fields", row);
    CurvePoint p;
    const auto s = text::parse<long>(f[0]);
    const auto rate = text::parse<double>(f[2]);
    if (!s || !rate) throw ParseError("curve CSV row " + std::to_string(row) + ": bad number", row);
    p.step = *s;
    p.success_rate = *rate;
    if (text::trim(f[1]) == "nan") {
      p.mean_trip_time = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto t = text::parse<double>(f[1]);
      if (!t) throw ParseError("curve CSV row " + std::to_string(row) + ": bad number", row);
      p.mean_trip_time = *t;
    }
    curve.push_back(p);
  }
  return curve;
}

MapEvaluation rollout_greedy(const ValueTable& table, const EnvConfig& env, int map_index, std::vector<TraceRow>* trace) {
  const BandwidthMap& map = env.maps.at(static_cast<std::size_t>(map_index));
  const StateEncoder encoder(map.cols, env.requirement, env.effective_quantum());
  EpisodeState s = start_state(map, env.requirement, env.initial_heading);
  bool arrived = false;
  while (!is_terminal(s, map, env.dynamics)) {
    const Action a = table.greedy_action(encoder.encode(s));
    const StepOutcome out = step(s, a, map, env.traffic, env.reward, env.dynamics);
    s = out.next_state;
    arrived = s.cell == map.destination && s.requirement_met;
    if (trace) trace->push_back({s.steps, s.cell, s.heading, a, out.reward, s.trip_time, s.data_remaining});
  }
  MapEvaluation result;
  result.map_id = map.map_id;
  result.success = arrived;
  result.steps = s.steps;
  result.trip_time = arrived ? s.trip_time : static_cast<double>(env.dynamics.step_limit);
  return result;
}

Evaluation evaluate_greedy(const ValueTable& table, const EnvConfig& env, int episodes_per_map) {
  env.validate();
  Evaluation ev;
  double time_sum = 0.0;
  int successes = 0;
  int episodes = 0;
  for (int m = 0; m < static_cast<int>(env.maps.size()); ++m) {
    for (int k = 0; k < episodes_per_map; ++k) {
      const MapEvaluation r = rollout_greedy(table, env, m);
      ++episodes;
      if (r.success) {
        ++successes;
        time_sum += r.trip_time;
      }
      if (k == 0) ev.per_map.push_back(r);
    }
  }
  ev.success_rate = episodes ? static_cast<double>(successes) / episodes : 0.0;
  ev.mean_trip_time = successes ? time_sum / successes : std::numeric_limits<double>::quiet_NaN();
  return ev;
}

namespace {

Action sample_action(const Eigen::Array3d& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<Action>(a);
  }
  return Action::right;
}

}  // namespace

TrainResult train(const EnvConfig& env_config, const LearnerConfig& learner, long cadence) {
  env_config.validate();
  learner.validate();
  if (cadence < 1) throw ConfigError("evaluation cadence must be positive");

  const int cols = env_config.maps.front().cols;
  const ValueTable::KeySpace keys{cols, env_config.requirement, env_config.effective_quantum()};
  TrainResult result{ValueTable(learner.algorithm, keys), {}, 0};
  ValueTable& table = result.table;
  const StateEncoder encoder = table.encoder();

  Environment env(env_config, learner.seed);
  Rng rng = make_rng(learner.seed, 2);
  EpisodeState state = env.reset();
  StateKey key = encoder.encode(state);

  for (long t = 0; t < learner.training_steps; ++t) {
    // Q-learning explores epsilon-greedily; the actor-critic samples its own
    // softmax policy, which keeps the policy-gradient update on-policy.
    Action action;
    if (learner.algorithm == Algorithm::actor_critic) {
      action = sample_action(table.policy(key), rng);
    } else if (uniform01(rng) < learner.epsilon_at(t)) {
      action = static_cast<Action>(uniform_index(rng, 3));
    } else {
      action = table.greedy_action(key);
    }

    const StepOutcome out = env.step(action);
    const EpisodeState& next = out.next_state;
    const StateKey next_key = encoder.encode(next);
    // Only arrival ends the return; a step-limit cut still bootstraps.
    const bool absorbing = next.cell == env.active_map().destination && next.requirement_met;
    const int a = static_cast<int>(action);

    if (learner.algorithm == Algorithm::q_learning) {
      const double bootstrap = absorbing ? 0.0 : table.action_values(next_key).maxCoeff();
      auto& q = table.at(key).action_values;
      q[a] += learner.learning_rate * (out.reward + LearnerConfig::discount * bootstrap - q[a]);
    } else {
      const double bootstrap = absorbing ? 0.0 : table.state_value(next_key);
      auto& entry = table.at(key);
      const double td_error = out.reward + LearnerConfig::discount * bootstrap - entry.state_value;
      entry.state_value += learner.critic_rate * td_error;
      Eigen::Array3d grad = -softmax(entry.action_values);
      grad[a] += 1.0;
      entry.action_values += learner.learning_rate * td_error * grad;
    }

    if (out.terminal) {
      ++result.episodes;
      state = env.reset();
    } else {
      state = next;
    }
    key = encoder.encode(state);

    if ((t + 1) % cadence == 0) {
      const Evaluation ev = evaluate_greedy(table, env_config);
      result.curve.push_back({t + 1, ev.mean_trip_time, ev.success_rate});
    }
  }
  return result;
}

std::string_view to_string(BaselineKind kind) {
  return kind == BaselineKind::bandwidth_unaware ? "bandwidth_unaware" : "traffic_unaware";
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "bandwidth_unaware") return BaselineKind::bandwidth_unaware;
  if (name == "traffic_unaware") return BaselineKind::traffic_unaware;
  throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

RewardConfig make_baseline_reward(BaselineKind kind, RewardConfig base) {
  base.validate();
  switch (kind) {
    case BaselineKind::bandwidth_unaware:
      base.high_bw_step_reward = 0.0;
      base.requirement_bonus = 0.0;
      break;
    case BaselineKind::traffic_unaware:
      base.punishment_scale = 0.0;
      base.step_penalty = 1.0;
      break;
  }
  return base;
}

}  // namespace bwroute
