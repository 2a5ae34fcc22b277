#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace bwroute {

/// One row of an exported traversal heatmap.
struct HeatPoint {
  double x = 0.0;
  double y = 0.0;
  std::int64_t traversals = 0;
};

struct CropBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Eigen::Vector2d centroid() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
};

/// How raw points are mapped onto the grid: rotate about the crop-box
/// centroid, crop, then bin into rows x cols equal cells. Row 0 is the
/// min-y edge of the crop box, column 0 the min-x edge.
struct IngestSpec {
  double rotation_deg = 0.0;
  CropBox crop;
  int rows = 7;
  int cols = 7;

  /// Throws ConfigError.
  void validate() const;
};

/// Per-cell traffic densities and the delay indices derived from them.
struct TrafficGrid {
  Eigen::MatrixXd density;  // rows x cols, summed traversals
  Eigen::MatrixXd delay;    // categorize_traffic(density) elementwise
  double mean_density = 1.0;

  int rows() const { return static_cast<int>(density.rows()); }
  int cols() const { return static_cast<int>(density.cols()); }

  /// Derives delay indices and the mean. An all-zero grid gets mean_density 1.
  static TrafficGrid from_density(Eigen::MatrixXd density);
};

/// Delay index for a cell density: [0,1100) -> 1.5, [1100,2200) -> 2.0,
/// [2200,2900) -> 2.5, [2900,inf) -> 3.0. Throws InvalidInput on negative or
/// non-finite input.
double categorize_traffic(double density);

TrafficGrid bin_heatmap(std::span<const HeatPoint> points, const IngestSpec& spec);

std::vector<HeatPoint> read_heatmap_csv(std::istream& in);
std::vector<HeatPoint> load_heatmap_csv(const std::filesystem::path& path);
void write_heatmap_csv(std::ostream& out, std::span<const HeatPoint> points);

// Grid file: `rows cols` on the first line, then one line of densities per row.
TrafficGrid read_traffic_grid(std::istream& in);
TrafficGrid load_traffic_grid(const std::filesystem::path& path);
void write_traffic_grid(std::ostream& out, const TrafficGrid& grid);
void save_traffic_grid(const std::filesystem::path& path, const TrafficGrid& grid);

/// Synthetic downtown-style heatmap: a rows x cols street grid with busy
/// arterials, densities in [0, 4000], emitted in a frame rotated by
/// -rotation_deg about the centroid of `crop` so that ingesting with
/// `rotation_deg` realigns it.
std::vector<HeatPoint> synthesize_heatmap(const IngestSpec& spec, std::uint64_t seed);

}  // namespace bwroute
