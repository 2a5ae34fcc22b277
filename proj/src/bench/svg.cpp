#include "bwroute/bench.hpp"
#include "bwroute/text.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace bwroute::bench {

std::string palette(std::size_t index) {
  static constexpr std::array<const char*, 10> kColors{"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                                       "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#d62728"};
  return kColors[index % kColors.size()];
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  return os.str();
}

// 1-2-5 tick spacing giving roughly `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::string tick_label(double v) {
  if (std::abs(v) >= 10000.0 && std::fmod(v, 1000.0) == 0.0) return text::format(v / 1000.0) + "k";
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

void render_svg(std::ostream& out, const Chart& chart, bool timestamp) {
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
  const double plot_w = chart.width - kLeft - kRight;
  const double plot_h = chart.height - kTop - kBottom;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      if (std::isfinite(s.y[i])) {
        y_min = std::min(y_min, s.y[i]);
        y_max = std::max(y_max, s.y[i]);
      }
    }
  }
  for (const auto& r : chart.references) {
    y_min = std::min(y_min, r.y);
    y_max = std::max(y_max, r.y);
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
  if (!std::isfinite(y_min)) y_min = 0, y_max = 1;
  x_min = std::min(0.0, x_min);
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max - y_min < 1e-9) y_min -= 1, y_max += 1;
  const double y_step = nice_step(y_max - y_min, 6);
  y_min = std::floor(y_min / y_step) * y_step;
  y_max = std::ceil(y_max / y_step) * y_step;
  const double x_step = nice_step(x_max - x_min, 8);

  const auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << chart.height
      << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  if (timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    out << "<!-- generated " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << " -->\n";
  }
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << chart.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(chart.title) << "</text>\n";

  // Grid and ticks.
  for (double y = y_min; y <= y_max + 1e-9 * y_step; y += y_step) {
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(kLeft + plot_w) << "\" y2=\""
        << num(py(y)) << "\" stroke=\"#e5e5e5\"/>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << tick_label(y)
        << "</text>\n";
  }
  for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-9 * x_step; x += x_step) {
    out << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(x)) << "\" y2=\""
        << num(kTop + plot_h) << "\" stroke=\"#f0f0f0\"/>\n";
    out << "<text x=\"" << num(px(x)) << "\" y=\"" << num(kTop + plot_h + 16) << "\" text-anchor=\"middle\">"
        << tick_label(x) << "</text>\n";
  }
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
      << num(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << chart.height - 12 << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
  out << "<text transform=\"translate(18 " << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";

  for (const auto& r : chart.references) {
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(r.y)) << "\" x2=\"" << num(kLeft + plot_w)
        << "\" y2=\"" << num(py(r.y)) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
  }

  for (const auto& s : chart.series) {
    std::string points;
    const auto flush = [&] {
      if (points.empty()) return;
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\"";
      if (s.opacity < 1.0) out << " stroke-opacity=\"" << s.opacity << "\"";
      out << " points=\"" << points << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    flush();
  }

  // Legend.
  double ly = kTop + 14;
  const double lx = kLeft + plot_w - 250;
  for (const auto& s : chart.series) {
    if (!s.in_legend) continue;
    out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\"/>\n";
    out << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    ly += 16;
  }
  for (const auto& r : chart.references) {
    out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6 4\"/>\n";
    out << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly) << "\">" << escape(r.label) << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
}

void save_svg(const fs::path& path, const Chart& chart, bool timestamp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  render_svg(out, chart, timestamp);
}

}  // namespace bwroute::bench
