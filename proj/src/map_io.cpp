#include "bwroute/error.hpp"
#include "bwroute/gridworld.hpp"
#include "bwroute/text.hpp"

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

namespace bwroute {

// Map file:
//   rows cols
//   start r c
//   dest r c
//   highbw k
//   r c        (k lines)
BandwidthMap read_bandwidth_map(std::istream& in, int map_id) {
  std::vector<std::string> lines;
  std::vector<std::size_t> line_no;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.emplace_back(t);
    line_no.push_back(n);
  }
  std::size_t idx = 0;
  const auto fields = [&](std::string_view keyword, std::size_t count) {
    if (idx >= lines.size()) throw ParseError("map file ends early; expected " + std::string(keyword), idx + 1);
    auto tok = text::tokens(lines[idx]);
    std::size_t first = 0;
    if (!keyword.empty()) {
      if (tok.empty() || tok[0] != keyword) {
        throw ParseError("map file line " + std::to_string(line_no[idx]) + ": expected `" + std::string(keyword) + "`",
                         line_no[idx]);
      }
      first = 1;
    }
    if (tok.size() != first + count) {
      throw ParseError("map file line " + std::to_string(line_no[idx]) + ": wrong number of fields", line_no[idx]);
    }
    std::vector<int> values;
    for (std::size_t i = first; i < tok.size(); ++i) {
      const auto v = text::parse<int>(tok[i]);
      if (!v) throw ParseError("map file line " + std::to_string(line_no[idx]) + ": not an integer", line_no[idx]);
      values.push_back(*v);
    }
    ++idx;
    return values;
  };

  const auto dims = fields("", 2);
  const auto start = fields("start", 2);
  const auto dest = fields("dest", 2);
  const auto count = fields("highbw", 1);
  if (count[0] < 0) throw ParseError("map file: negative highbw count", line_no[idx - 1]);
  std::vector<Cell> cells;
  for (int i = 0; i < count[0]; ++i) {
    const auto rc = fields("", 2);
    cells.push_back({rc[0], rc[1]});
  }
  if (idx != lines.size()) throw ParseError("map file line " + std::to_string(line_no[idx]) + ": trailing content", line_no[idx]);
  return BandwidthMap(dims[0], dims[1], {start[0], start[1]}, {dest[0], dest[1]}, std::move(cells), map_id);
}

BandwidthMap load_bandwidth_map(const std::filesystem::path& path, int map_id) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open map file " + path.string(), 0);
  try {
    return read_bandwidth_map(in, map_id);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.row());
  }
}

void write_bandwidth_map(std::ostream& out, const BandwidthMap& map) {
  out << map.rows << ' ' << map.cols << '\n';
  out << "start " << map.start.row << ' ' << map.start.col << '\n';
  out << "dest " << map.destination.row << ' ' << map.destination.col << '\n';
  out << "highbw " << map.high_bw.size() << '\n';
  for (const Cell& c : map.high_bw) out << c.row << ' ' << c.col << '\n';
}

void save_bandwidth_map(const std::filesystem::path& path, const BandwidthMap& map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file " + path.string());
  write_bandwidth_map(out, map);
}

}  // namespace bwroute
