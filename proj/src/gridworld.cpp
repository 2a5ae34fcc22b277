#include "bwroute/gridworld.hpp"

#include "bwroute/error.hpp"
#include "bwroute/text.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace bwroute {

Heading turn(Heading heading, Action action) {
  const int h = static_cast<int>(heading);
  switch (action) {
    case Action::forward: return heading;
    case Action::left: return static_cast<Heading>((h + 3) % 4);
    case Action::right: return static_cast<Heading>((h + 1) % 4);
  }
  return heading;
}

Cell advance(Cell cell, Heading heading) {
  switch (heading) {
    case Heading::north: return {cell.row - 1, cell.col};
    case Heading::east: return {cell.row, cell.col + 1};
    case Heading::south: return {cell.row + 1, cell.col};
    case Heading::west: return {cell.row, cell.col - 1};
  }
  return cell;
}

std::string_view to_string(Heading heading) {
  static constexpr std::array<std::string_view, 4> kNames{"north", "east", "south", "west"};
  return kNames[static_cast<std::size_t>(heading)];
}

std::string_view to_string(Action action) {
  static constexpr std::array<std::string_view, 3> kNames{"forward", "left", "right"};
  return kNames[static_cast<std::size_t>(action)];
}

Heading parse_heading(std::string_view name) {
  for (int h = 0; h < 4; ++h) {
    if (to_string(static_cast<Heading>(h)) == name) return static_cast<Heading>(h);
  }
  throw ConfigError("unknown heading '" + std::string(name) + "'");
}

std::string_view to_string(RewardMode mode) { return mode == RewardMode::step ? "step" : "cumulative"; }

RewardMode parse_reward_mode(std::string_view name) {
  if (name == "step") return RewardMode::step;
  if (name == "cumulative") return RewardMode::cumulative;
  throw ConfigError("unknown reward mode '" + std::string(name) + "'");
}

BandwidthMap::BandwidthMap(int rows, int cols, Cell start, Cell destination, std::vector<Cell> high_bw, int map_id)
    : rows(rows), cols(cols), high_bw(std::move(high_bw)), start(start), destination(destination), map_id(map_id) {
  std::sort(this->high_bw.begin(), this->high_bw.end());
  this->high_bw.erase(std::unique(this->high_bw.begin(), this->high_bw.end()), this->high_bw.end());
  validate();
  mask_.setConstant(rows, cols, false);
  for (const Cell& c : this->high_bw) mask_(c.row, c.col) = true;
}

void BandwidthMap::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("map must have at least one row and column");
  if (!contains(start)) throw ConfigError("map start lies outside the grid");
  if (!contains(destination)) throw ConfigError("map destination lies outside the grid");
  if (start == destination) throw ConfigError("map start and destination must differ");
  for (const Cell& c : high_bw) {
    if (!contains(c)) {
      throw ConfigError("high-bandwidth cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                        ") lies outside the grid");
    }
  }
}

void RewardConfig::validate() const {
  if (!(destination_reward > 0.0)) throw ConfigError("destination_reward must be positive");
  for (double v : {high_bw_step_reward, requirement_bonus, destination_reward, punishment_scale, step_penalty}) {
    if (!std::isfinite(v)) throw ConfigError("reward constants must be finite");
  }
}

double transfer_amount(Cell cell, const TrafficGrid& traffic, double scale) {
  const double density = std::max(traffic.density(cell.row, cell.col), kDensityFloor);
  return traffic.mean_density / density * traffic.delay(cell.row, cell.col) * scale;
}

EpisodeState start_state(const BandwidthMap& map, double requirement, Heading initial_heading) {
  EpisodeState s;
  s.cell = map.start;
  s.heading = initial_heading;
  s.data_remaining = requirement;
  s.requirement_met = requirement == 0.0;
  s.active_map = map.map_id;
  return s;
}

namespace {

void check_consistent(std::span<const BandwidthMap> maps, const TrafficGrid& traffic, double requirement) {
  if (maps.empty()) throw ConfigError("map set is empty");
  if (!(requirement >= 0.0) || !std::isfinite(requirement)) throw ConfigError("requirement must be finite and >= 0");
  for (const auto& m : maps) {
    if (m.rows != traffic.rows() || m.cols != traffic.cols()) {
      throw ConfigError("map " + std::to_string(m.map_id) + " is " + std::to_string(m.rows) + "x" +
                        std::to_string(m.cols) + " but traffic grid is " + std::to_string(traffic.rows()) + "x" +
                        std::to_string(traffic.cols()));
    }
  }
}

}  // namespace

EpisodeState reset(std::span<const BandwidthMap> maps, const TrafficGrid& traffic, double requirement, Rng& rng,
                   Heading initial_heading) {
  check_consistent(maps, traffic, requirement);
  const auto& map = maps[uniform_index(rng, maps.size())];
  return start_state(map, requirement, initial_heading);
}

bool is_terminal(const EpisodeState& state, const BandwidthMap& map, const Dynamics& dynamics) {
  return (state.cell == map.destination && state.requirement_met) || state.steps >= dynamics.step_limit;
}

StepOutcome step(const EpisodeState& state, Action action, const BandwidthMap& map, const TrafficGrid& traffic,
                 const RewardConfig& reward, const Dynamics& dynamics) {
  if (is_terminal(state, map, dynamics)) throw UsageError("step() called on a terminal state");

  StepOutcome out;
  EpisodeState& next = out.next_state;
  next = state;
  next.heading = turn(state.heading, action);
  const Cell target = advance(state.cell, next.heading);

  if (map.contains(target)) {
    next.cell = target;
    next.trip_time += traffic.delay(target.row, target.col);
    if (map.is_high_bw(target) && next.data_remaining > 0.0) {
      const double amount = transfer_amount(target, traffic, dynamics.transfer_scale);
      if (amount >= next.data_remaining) {
        out.transferred_this_step = next.data_remaining;
        next.data_remaining = 0.0;
      } else {
        out.transferred_this_step = amount;
        next.data_remaining -= amount;
      }
    }
  } else {
    // Bumping the edge: heading changes, the agent waits in its current cell.
    next.trip_time += traffic.delay(state.cell.row, state.cell.col);
  }
  next.steps += 1;
  next.requirement_met = next.data_remaining == 0.0;

  const Cell here = next.cell;
  double r = -reward.punishment_scale * traffic.density(here.row, here.col) / traffic.mean_density;
  r -= reward.step_penalty;
  if (reward.mode == RewardMode::step && out.transferred_this_step > 0.0) r += reward.high_bw_step_reward;
  if (reward.mode == RewardMode::cumulative && !state.requirement_met && next.requirement_met) {
    r += reward.requirement_bonus;
  }
  const bool arrived = here == map.destination && next.requirement_met;
  if (arrived) r += reward.destination_reward;
  out.reward = r;
  out.terminal = arrived || next.steps >= dynamics.step_limit;
  return out;
}

double default_quantum(double requirement) { return requirement > 0.0 ? requirement / 100.0 : 1.0; }

namespace {

// Absorbs representation error in ratios like 1.0 / 0.01.
constexpr double kBucketSlack = 1e-9;

int ceil_ratio(double value, double quantum) {
  const double r = value / quantum;
  return static_cast<int>(std::ceil(r - kBucketSlack * std::max(1.0, r)));
}

}  // namespace

StateEncoder::StateEncoder(int cols, double requirement, double quantum)
    : cols_(cols), quantum_(quantum), max_bucket_(0) {
  if (!(quantum > 0.0)) throw ConfigError("data quantum must be positive");
  if (cols < 1) throw ConfigError("encoder needs at least one column");
  max_bucket_ = std::max(0, ceil_ratio(requirement, quantum));
  if (max_bucket_ >= (1 << 26)) throw ConfigError("data quantum too fine for the state key");
}

int StateEncoder::bucket(double data_remaining) const {
  if (data_remaining <= 0.0) return 0;
  return std::clamp(ceil_ratio(data_remaining, quantum_), 1, std::max(1, max_bucket_));
}

StateKey StateEncoder::encode(const EpisodeState& s) const {
  const auto map_id = static_cast<std::uint64_t>(s.active_map) & 0xFFFFu;
  const auto cell = static_cast<std::uint64_t>(s.cell.row * cols_ + s.cell.col) & 0xFFFFFu;
  const auto heading = static_cast<std::uint64_t>(s.heading) & 0x3u;
  const auto data = static_cast<std::uint64_t>(bucket(s.data_remaining)) & 0x3FFFFFFu;
  return (map_id << 48) | (cell << 28) | (heading << 26) | data;
}

StateEncoder::Fields StateEncoder::decode(StateKey key) {
  return {static_cast<int>((key >> 48) & 0xFFFFu), static_cast<int>((key >> 28) & 0xFFFFFu),
          static_cast<Heading>((key >> 26) & 0x3u), static_cast<int>(key & 0x3FFFFFFu)};
}

void EnvConfig::validate() const {
  check_consistent(maps, traffic, requirement);
  reward.validate();
  if (dynamics.step_limit < 1) throw ConfigError("step_limit must be >= 1");
  if (!(dynamics.transfer_scale > 0.0)) throw ConfigError("transfer_scale must be positive");
  if (quantum < 0.0 || !std::isfinite(quantum)) throw ConfigError("quantum must be finite and >= 0");
}

Environment::Environment(EnvConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(make_rng(seed, 1)) {
  config_.validate();
}

const EpisodeState& Environment::reset() {
  map_index_ = static_cast<int>(uniform_index(rng_, config_.maps.size()));
  return reset_on(map_index_);
}

const EpisodeState& Environment::reset_on(int map_index) {
  if (map_index < 0 || map_index >= static_cast<int>(config_.maps.size())) throw UsageError("map index out of range");
  map_index_ = map_index;
  state_ = start_state(active_map(), config_.requirement, config_.initial_heading);
  done_ = false;
  return state_;
}

StepOutcome Environment::step(Action action) {
  if (done_) throw UsageError("episode finished; call reset()");
  StepOutcome out = bwroute::step(state_, action, active_map(), config_.traffic, config_.reward, config_.dynamics);
  state_ = out.next_state;
  done_ = out.terminal;
  return out;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "step,row,col,heading,action,reward,trip_time,data_remaining\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.cell.row << ',' << r.cell.col << ',' << to_string(r.heading) << ','
        << to_string(r.action) << ',' << text::format(r.reward) << ',' << text::format(r.trip_time) << ','
        << text::format(r.data_remaining) << '\n';
  }
}

}  // namespace bwroute
