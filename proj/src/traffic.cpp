#include "bwroute/traffic.hpp"

#include "bwroute/error.hpp"
#include "bwroute/rng.hpp"
#include "bwroute/text.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

namespace bwroute {

namespace {

constexpr double kMediumLowFrom = 1100.0;
constexpr double kMediumHighFrom = 2200.0;
constexpr double kHighFrom = 2900.0;

}  // namespace

double categorize_traffic(double density) {
  if (!std::isfinite(density) || density < 0.0) {
    throw InvalidInput("traffic density must be finite and non-negative, got " +
                       text::format(density));
  }
  if (density < kMediumLowFrom) return 1.5;
  if (density < kMediumHighFrom) return 2.0;
  if (density < kHighFrom) return 2.5;
  return 3.0;
}

TrafficGrid TrafficGrid::from_density(Eigen::MatrixXd density) {
  TrafficGrid grid;
  grid.delay = density.unaryExpr([](double d) { return categorize_traffic(d); });
  const double total = density.sum();
  grid.mean_density = total > 0.0 ? total / static_cast<double>(density.size()) : 1.0;
  grid.density = std::move(density);
  return grid;
}

void IngestSpec::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("ingest grid must have at least one row and column");
  if (!(crop.width() > 0.0) || !(crop.height() > 0.0)) {
    throw ConfigError("crop box must have positive width and height");
  }
  if (!std::isfinite(rotation_deg)) throw ConfigError("rotation must be finite");
}

TrafficGrid bin_heatmap(std::span<const HeatPoint> points, const IngestSpec& spec) {
  spec.validate();
  const Eigen::Vector2d pivot = spec.crop.centroid();
  const Eigen::Rotation2Dd rotation(spec.rotation_deg * std::numbers::pi / 180.0);
  const bool identity = spec.rotation_deg == 0.0;

  Eigen::MatrixXd density = Eigen::MatrixXd::Zero(spec.rows, spec.cols);
  for (const HeatPoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("heat point has non-finite coordinate");
    if (p.traversals < 0) throw InvalidInput("heat point has negative traversals");
    Eigen::Vector2d q(p.x, p.y);
    if (!identity) q = pivot + rotation * (q - pivot);
    // Half-open box; a point on an interior cell edge goes to the higher bin.
    if (q.x() < spec.crop.min_x || q.x() >= spec.crop.max_x) continue;
    if (q.y() < spec.crop.min_y || q.y() >= spec.crop.max_y) continue;
    const int col = std::min(spec.cols - 1, static_cast<int>(std::floor((q.x() - spec.crop.min_x) *
                                                                       spec.cols / spec.crop.width())));
    const int row = std::min(spec.rows - 1, static_cast<int>(std::floor((q.y() - spec.crop.min_y) *
                                                                       spec.rows / spec.crop.height())));
    density(row, col) += static_cast<double>(p.traversals);
  }
  return TrafficGrid::from_density(std::move(density));
}

std::vector<HeatPoint> read_heatmap_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("heatmap CSV is empty; expected header x,y,traversals", 1);
  // Tolerate a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (text::trim(line) != "x,y,traversals") {
    throw ParseError("heatmap CSV row 1: expected header x,y,traversals", 1);
  }
  std::vector<HeatPoint> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    const auto fail = [row](const std::string& why) -> ParseError {
      return ParseError("heatmap CSV row " + std::to_string(row) + ": " + why, row);
    };
    if (fields.size() != 3) throw fail("expected 3 fields, got " + std::to_string(fields.size()));
    const auto x = text::parse<double>(fields[0]);
    const auto y = text::parse<double>(fields[1]);
    const auto n = text::parse<std::int64_t>(fields[2]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) throw fail("malformed coordinate");
    if (!n) throw fail("malformed traversal count");
    if (*n < 0) throw fail("negative traversal count");
    points.push_back({*x, *y, *n});
  }
  return points;
}

std::vector<HeatPoint> load_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open heatmap CSV " + path.string(), 0);
  return read_heatmap_csv(in);
}

void write_heatmap_csv(std::ostream& out, std::span<const HeatPoint> points) {
  out << "x,y,traversals\n";
  for (const auto& p : points) out << text::format(p.x) << ',' << text::format(p.y) << ',' << p.traversals << '\n';
}

TrafficGrid read_traffic_grid(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  const auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++row;
      const auto t = text::trim(line);
      if (!t.empty() && t.front() != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("traffic grid file is empty", 1);
  const auto dims = text::tokens(line);
  const auto rows = dims.size() == 2 ? text::parse<int>(dims[0]) : std::nullopt;
  const auto cols = dims.size() == 2 ? text::parse<int>(dims[1]) : std::nullopt;
  if (!rows || !cols || *rows < 1 || *cols < 1) throw ParseError("traffic grid: first line must be `rows cols`", row);

  Eigen::MatrixXd density(*rows, *cols);
  for (int r = 0; r < *rows; ++r) {
    if (!next_line()) throw ParseError("traffic grid: expected " + std::to_string(*rows) + " density rows", row + 1);
    const auto values = text::tokens(line);
    if (static_cast<int>(values.size()) != *cols) {
      throw ParseError("traffic grid line " + std::to_string(row) + ": expected " + std::to_string(*cols) + " values", row);
    }
    for (int c = 0; c < *cols; ++c) {
      const auto v = text::parse<double>(values[c]);
      if (!v || !std::isfinite(*v) || *v < 0.0) {
        throw ParseError("traffic grid line " + std::to_string(row) + ": bad density", row);
      }
      density(r, c) = *v;
    }
  }
  return TrafficGrid::from_density(std::move(density));
}

TrafficGrid load_traffic_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open traffic grid " + path.string(), 0);
  return read_traffic_grid(in);
}

void write_traffic_grid(std::ostream& out, const TrafficGrid& grid) {
  out << grid.rows() << ' ' << grid.cols() << '\n';
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (c) out << ' ';
      out << text::format(grid.density(r, c));
    }
    out << '\n';
  }
}

void save_traffic_grid(const std::filesystem::path& path, const TrafficGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write traffic grid " + path.string());
  write_traffic_grid(out, grid);
}

std::vector<HeatPoint> synthesize_heatmap(const IngestSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, 0x68656174);
  const double cell_w = spec.crop.width() / spec.cols;
  const double cell_h = spec.crop.height() / spec.rows;
  const Eigen::Vector2d pivot = spec.crop.centroid();
  const Eigen::Rotation2Dd unrotate(-spec.rotation_deg * std::numbers::pi / 180.0);

  // Two arterial rows and one arterial column carry most of the traffic, with
  // a quieter residential background.
  const int arterial_row_a = spec.rows / 3;
  const int arterial_row_b = (2 * spec.rows) / 3;
  const int arterial_col = spec.cols / 2;

  std::vector<HeatPoint> points;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      double target = 300.0 + 1500.0 * uniform01(rng);
      if (r == arterial_row_a || r == arterial_row_b) target += 1200.0 + 800.0 * uniform01(rng);
      if (c == arterial_col) target += 1000.0 + 900.0 * uniform01(rng);
      target = std::min(target, 4000.0);
      // Split the cell total across a few pings kept well inside the cell.
      const int pings = 3 + static_cast<int>(uniform_index(rng, 4));
      std::int64_t remaining = static_cast<std::int64_t>(std::llround(target));
      for (int k = 0; k < pings; ++k) {
        const std::int64_t share = k + 1 == pings ? remaining : remaining / (pings - k);
        remaining -= share;
        const double fx = 0.2 + 0.6 * uniform01(rng);
        const double fy = 0.2 + 0.6 * uniform01(rng);
        Eigen::Vector2d aligned(spec.crop.min_x + (c + fx) * cell_w, spec.crop.min_y + (r + fy) * cell_h);
        const Eigen::Vector2d raw = pivot + unrotate * (aligned - pivot);
        points.push_back({raw.x(), raw.y(), share});
      }
    }
  }
  // Traffic outside the area of interest, discarded by the crop.
  for (int k = 0; k < 4 * spec.rows; ++k) {
    const double x = spec.crop.max_x + spec.crop.width() * (0.1 + uniform01(rng));
    const double y = spec.crop.min_y + spec.crop.height() * uniform01(rng);
    const Eigen::Vector2d raw = pivot + unrotate * (Eigen::Vector2d(x, y) - pivot);
    points.push_back({raw.x(), raw.y(), static_cast<std::int64_t>(uniform_index(rng, 3000))});
  }
  return points;
}

}  // namespace bwroute
