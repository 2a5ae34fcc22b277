#include "bwroute/bench.hpp"
#include "bwroute/error.hpp"
#include "bwroute/rng.hpp"

#include <algorithm>

namespace bwroute::bench {

std::vector<BandwidthMap> generate_maps(const GeneratorSpec& spec, const TrafficGrid& traffic, double requirement,
                                        double transfer_scale) {
  if (spec.rows < 1 || spec.cols < 1) throw ConfigError("generator: grid must be at least 1x1");
  if (spec.num_maps < 1) throw ConfigError("generator: num_maps must be >= 1");
  const int free_cells = spec.rows * spec.cols - 2;
  if (spec.num_high_bw < 0 || spec.num_high_bw > free_cells) {
    throw ConfigError("generator: num_high_bw must be in [0, " + std::to_string(free_cells) + "]");
  }
  if (traffic.rows() != spec.rows || traffic.cols() != spec.cols) {
    throw ConfigError("generator: grid size differs from the traffic grid");
  }

  std::vector<Cell> candidates;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const Cell cell{r, c};
      if (cell != spec.start && cell != spec.destination) candidates.push_back(cell);
    }
  }

  Rng rng = make_rng(spec.seed, static_cast<std::uint64_t>(spec.num_high_bw) << 8);
  PlannerOptions planner;
  planner.transfer_scale = transfer_scale;

  std::vector<BandwidthMap> maps;
  for (int m = 0; m < spec.num_maps; ++m) {
    bool accepted = false;
    for (int attempt = 0; attempt < spec.max_attempts && !accepted; ++attempt) {
      // Partial Fisher-Yates.
      std::vector<Cell> pool = candidates;
      for (int i = 0; i < spec.num_high_bw; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + uniform_index(rng, pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      }
      pool.resize(static_cast<std::size_t>(spec.num_high_bw));
      BandwidthMap map(spec.rows, spec.cols, spec.start, spec.destination, std::move(pool), m);
      const bool duplicate =
          std::any_of(maps.begin(), maps.end(), [&](const BandwidthMap& other) { return other.high_bw == map.high_bw; });
      if (duplicate) continue;
      if (!optimal_route(map, traffic, requirement, planner).feasible) continue;
      maps.push_back(std::move(map));
      accepted = true;
    }
    if (!accepted) {
      throw ConfigError("generator: could not draw map " + std::to_string(m) + " after " +
                        std::to_string(spec.max_attempts) + " attempts (infeasible requirement or too few distinct layouts)");
    }
  }
  return maps;
}

std::vector<fs::path> write_maps(const fs::path& dir, const std::vector<BandwidthMap>& maps) {
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (const auto& map : maps) {
    paths.push_back(dir / ("map_" + std::to_string(map.map_id) + ".map"));
    save_bandwidth_map(paths.back(), map);
  }
  return paths;
}

}  // namespace bwroute::bench
