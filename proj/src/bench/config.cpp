#include "bwroute/bench.hpp"
#include "bwroute/error.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace bwroute::bench {

namespace {

using json = nlohmann::ordered_json;

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(where() + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError(qualified(key) + " has the wrong type");
      }
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

Cell read_cell(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError("'" + name + "' must be [row, col]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

IngestSpec read_ingest(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  IngestSpec spec;
  r.read("rotation_deg", spec.rotation_deg);
  r.read("rows", spec.rows);
  r.read("cols", spec.cols);
  if (const json* crop = r.find("crop")) {
    if (!crop->is_array() || crop->size() != 4) throw ConfigError("'" + path + ".crop' must be [min_x, min_y, max_x, max_y]");
    spec.crop = {(*crop)[0].get<double>(), (*crop)[1].get<double>(), (*crop)[2].get<double>(), (*crop)[3].get<double>()};
  }
  r.finish();
  return spec;
}

json write_ingest(const IngestSpec& s) {
  return json{{"rotation_deg", s.rotation_deg},
              {"crop", {s.crop.min_x, s.crop.min_y, s.crop.max_x, s.crop.max_y}},
              {"rows", s.rows},
              {"cols", s.cols}};
}

LearnerSpec read_learner(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  LearnerSpec spec;
  std::string algorithm = "actor_critic";
  r.read("algorithm", algorithm);
  spec.config.algorithm = parse_algorithm(algorithm);
  r.read("learning_rate", spec.config.learning_rate);
  r.read("critic_rate", spec.config.critic_rate);
  r.read("epsilon_start", spec.config.epsilon_start);
  r.read("epsilon_end", spec.config.epsilon_end);
  r.read("decay_steps", spec.config.decay_steps);
  r.finish();
  return spec;
}

json write_learner(const LearnerSpec& s) {
  return json{{"algorithm", std::string(to_string(s.config.algorithm))},
              {"learning_rate", s.config.learning_rate},
              {"critic_rate", s.config.critic_rate},
              {"epsilon_start", s.config.epsilon_start},
              {"epsilon_end", s.config.epsilon_end},
              {"decay_steps", s.config.decay_steps}};
}

std::string value_to_string(const json& v, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return json(v).dump();
  throw ConfigError("'" + path + "' values must be numbers or strings");
}

}  // namespace

void SweepSpec::validate() const {
  static const std::set<std::string> kKnown{"num_high_bw", "num_maps", "requirement", "reward_mode", "algorithm"};
  if (!kKnown.count(parameter)) throw ConfigError("sweep parameter '" + parameter + "' is not recognized");
  if (values.size() < 2) throw ConfigError("sweep needs at least two values");
}

void ExperimentConfig::validate() const {
  const int sources = traffic.grid_file.has_value() + traffic.heatmap_csv.has_value() + traffic.synthetic_seed.has_value();
  if (sources != 1) throw ConfigError("traffic: exactly one of grid, heatmap, synthetic_seed is required");
  if (traffic.grid_file && !fs::exists(*traffic.grid_file)) {
    throw ConfigError("traffic.grid: file not found: " + traffic.grid_file->string());
  }
  if (traffic.heatmap_csv && !fs::exists(*traffic.heatmap_csv)) {
    throw ConfigError("traffic.heatmap: file not found: " + traffic.heatmap_csv->string());
  }
  if (!traffic.grid_file) traffic.ingest.validate();
  if (map_files.empty() == !generator.has_value()) throw ConfigError("maps: give either files or generate");
  for (const auto& f : map_files) {
    if (!fs::exists(f)) throw ConfigError("maps.files: file not found: " + f.string());
  }
  if (!(requirement >= 0.0)) throw ConfigError("requirement must be >= 0");
  if (reward_modes.empty()) throw ConfigError("reward_modes must not be empty");
  reward.validate();
  if (learners.empty() && !baselines.planners) throw ConfigError("enable at least one learner or the planners");
  for (const auto& l : learners) {
    LearnerConfig c = l.config;
    c.training_steps = training_steps;
    c.validate();
  }
  if (training_steps < 1) throw ConfigError("training_steps must be positive");
  if (eval_cadence < 1 || eval_cadence > training_steps) throw ConfigError("eval_cadence must be in [1, training_steps]");
  if (dynamics.step_limit < 1) throw ConfigError("step_limit must be >= 1");
  if (!(dynamics.transfer_scale > 0.0)) throw ConfigError("transfer_scale must be positive");
  if (quantum < 0.0) throw ConfigError("quantum must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (sweep) sweep->validate();
}

namespace {

ExperimentConfig parse_root(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  c.learners.clear();
  ObjectReader r(root, "");
  r.read("name", c.name);

  if (const json* t = r.find("traffic")) {
    ObjectReader tr(*t, "traffic");
    if (const json* g = tr.find("grid")) c.traffic.grid_file = resolve(base_dir, g->get<std::string>());
    if (const json* h = tr.find("heatmap")) c.traffic.heatmap_csv = resolve(base_dir, h->get<std::string>());
    if (const json* s = tr.find("synthetic_seed")) c.traffic.synthetic_seed = s->get<std::uint64_t>();
    if (const json* i = tr.find("ingest")) c.traffic.ingest = read_ingest(*i, "traffic.ingest");
    tr.finish();
  } else {
    throw ConfigError("missing key 'traffic'");
  }

  if (const json* m = r.find("maps")) {
    ObjectReader mr(*m, "maps");
    if (const json* files = mr.find("files")) {
      if (!files->is_array()) throw ConfigError("'maps.files' must be a list");
      for (const auto& f : *files) c.map_files.push_back(resolve(base_dir, f.get<std::string>()));
    }
    if (const json* g = mr.find("generate")) {
      ObjectReader gr(*g, "maps.generate");
      GeneratorSpec spec;
      gr.read("rows", spec.rows);
      gr.read("cols", spec.cols);
      if (const json* s = gr.find("start")) spec.start = read_cell(*s, "maps.generate.start");
      if (const json* d = gr.find("dest")) spec.destination = read_cell(*d, "maps.generate.dest");
      gr.read("num_high_bw", spec.num_high_bw);
      gr.read("num_maps", spec.num_maps);
      gr.read("seed", spec.seed);
      gr.read("max_attempts", spec.max_attempts);
      gr.finish();
      c.generator = spec;
    }
    mr.finish();
  } else {
    throw ConfigError("missing key 'maps'");
  }

  r.read("requirement", c.requirement);
  if (const json* modes = r.find("reward_modes")) {
    c.reward_modes.clear();
    if (!modes->is_array()) throw ConfigError("'reward_modes' must be a list");
    for (const auto& m : *modes) c.reward_modes.push_back(parse_reward_mode(m.get<std::string>()));
  }
  if (const json* rw = r.find("reward")) {
    ObjectReader rr(*rw, "reward");
    rr.read("high_bw_step_reward", c.reward.high_bw_step_reward);
    rr.read("requirement_bonus", c.reward.requirement_bonus);
    rr.read("destination_reward", c.reward.destination_reward);
    rr.read("punishment_scale", c.reward.punishment_scale);
    rr.read("step_penalty", c.reward.step_penalty);
    rr.finish();
  }
  if (const json* ls = r.find("learners")) {
    if (!ls->is_array()) throw ConfigError("'learners' must be a list");
    for (std::size_t i = 0; i < ls->size(); ++i) c.learners.push_back(read_learner((*ls)[i], "learners[" + std::to_string(i) + "]"));
  }
  r.read("training_steps", c.training_steps);
  r.read("eval_cadence", c.eval_cadence);
  r.read("step_limit", c.dynamics.step_limit);
  r.read("transfer_scale", c.dynamics.transfer_scale);
  if (const json* h = r.find("initial_heading")) c.initial_heading = parse_heading(h->get<std::string>());
  r.read("quantum", c.quantum);
  if (const json* b = r.find("baselines")) {
    ObjectReader br(*b, "baselines");
    br.read("bandwidth_unaware", c.baselines.bandwidth_unaware);
    br.read("traffic_unaware", c.baselines.traffic_unaware);
    br.read("planners", c.baselines.planners);
    br.finish();
  }
  r.read("seeds", c.seeds);
  if (const json* out = r.find("output_dir")) c.output_dir = resolve(base_dir, out->get<std::string>());
  if (const json* s = r.find("sweep")) {
    ObjectReader sr(*s, "sweep");
    SweepSpec sweep;
    sr.read("parameter", sweep.parameter);
    if (const json* values = sr.find("values")) {
      if (!values->is_array()) throw ConfigError("'sweep.values' must be a list");
      for (const auto& v : *values) sweep.values.push_back(value_to_string(v, "sweep.values"));
    }
    sr.finish();
    c.sweep = sweep;
  }
  r.finish();
  return c;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    c = parse_root(json_text, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), fs::absolute(path).parent_path());
}

std::string to_json(const ExperimentConfig& c) {
  json root;
  root["name"] = c.name;
  json traffic = json::object();
  if (c.traffic.grid_file) traffic["grid"] = c.traffic.grid_file->string();
  if (c.traffic.heatmap_csv) traffic["heatmap"] = c.traffic.heatmap_csv->string();
  if (c.traffic.synthetic_seed) traffic["synthetic_seed"] = *c.traffic.synthetic_seed;
  if (!c.traffic.grid_file) traffic["ingest"] = write_ingest(c.traffic.ingest);
  root["traffic"] = traffic;

  json maps = json::object();
  if (!c.map_files.empty()) {
    json files = json::array();
    for (const auto& f : c.map_files) files.push_back(f.string());
    maps["files"] = files;
  }
  if (c.generator) {
    const auto& g = *c.generator;
    maps["generate"] = json{{"rows", g.rows},
                            {"cols", g.cols},
                            {"start", {g.start.row, g.start.col}},
                            {"dest", {g.destination.row, g.destination.col}},
                            {"num_high_bw", g.num_high_bw},
                            {"num_maps", g.num_maps},
                            {"seed", g.seed},
                            {"max_attempts", g.max_attempts}};
  }
  root["maps"] = maps;
  root["requirement"] = c.requirement;
  json modes = json::array();
  for (RewardMode m : c.reward_modes) modes.push_back(std::string(to_string(m)));
  root["reward_modes"] = modes;
  root["reward"] = json{{"high_bw_step_reward", c.reward.high_bw_step_reward},
                        {"requirement_bonus", c.reward.requirement_bonus},
                        {"destination_reward", c.reward.destination_reward},
                        {"punishment_scale", c.reward.punishment_scale},
                        {"step_penalty", c.reward.step_penalty}};
  json learners = json::array();
  for (const auto& l : c.learners) learners.push_back(write_learner(l));
  root["learners"] = learners;
  root["training_steps"] = c.training_steps;
  root["eval_cadence"] = c.eval_cadence;
  root["step_limit"] = c.dynamics.step_limit;
  root["transfer_scale"] = c.dynamics.transfer_scale;
  root["initial_heading"] = std::string(to_string(c.initial_heading));
  root["quantum"] = c.quantum;
  root["baselines"] = json{{"bandwidth_unaware", c.baselines.bandwidth_unaware},
                           {"traffic_unaware", c.baselines.traffic_unaware},
                           {"planners", c.baselines.planners}};
  root["seeds"] = c.seeds;
  root["output_dir"] = c.output_dir.string();
  if (c.sweep) root["sweep"] = json{{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
  return root.dump(2) + "\n";
}

}  // namespace bwroute::bench
