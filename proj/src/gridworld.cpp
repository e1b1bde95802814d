#include "gx/gridworld.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gx/common.hpp"
#include "gx/pgm.hpp"

namespace gx {

std::pair<int, int> heading_delta(Heading h) {
  switch (h) {
    case Heading::North: return {-1, 0};
    case Heading::East: return {0, 1};
    case Heading::South: return {1, 0};
    case Heading::West: return {0, -1};
  }
  return {0, 0};
}

bool operator==(const GroundTruthMap& a, const GroundTruthMap& b) {
  return a.height == b.height && a.width == b.width && a.cells == b.cells;
}

BeliefMap BeliefMap::unknown(int h, int w) {
  BeliefMap b;
  b.height = h;
  b.width = w;
  b.cells.assign(static_cast<std::size_t>(h) * w, Cell::Unknown);
  return b;
}

void BeliefMap::mark(int r, int c, Cell v) {
  Cell& cur = cells[static_cast<std::size_t>(r) * width + c];
  if (cur == Cell::Unknown) {
    cur = v;
    ++known_count;
  } else if (cur != v) {
    throw std::logic_error("belief cell marked with conflicting value");
  }
}

MoveResult apply_action(const GroundTruthMap& map, const Pose& pose, Action a) {
  MoveResult out{pose, false};
  switch (a) {
    case Action::Forward: {
      auto [dr, dc] = heading_delta(pose.heading);
      int r = pose.row + dr, c = pose.col + dc;
      if (map.occupied(r, c)) {
        out.collided = true;
      } else {
        out.pose.row = r;
        out.pose.col = c;
      }
      break;
    }
    case Action::TurnLeft: out.pose.heading = turn_left(pose.heading); break;
    case Action::TurnRight: out.pose.heading = turn_right(pose.heading); break;
  }
  return out;
}

GroundTruthMap parse_map(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&](bool required) -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] == ';') continue;
      return true;
    }
    if (required) throw UsageError("map: unexpected end of input at line " + std::to_string(lineno));
    return false;
  };

  next_line(true);
  if (line != "GRIDMAP v1") throw UsageError("map: bad header, expected 'GRIDMAP v1'");
  next_line(true);
  GroundTruthMap m;
  {
    std::istringstream dims(line);
    if (!(dims >> m.height >> m.width) || m.height <= 0 || m.width <= 0)
      throw UsageError("map: bad dimensions line '" + line + "'");
    std::string extra;
    if (dims >> extra) throw UsageError("map: trailing tokens in dimensions line");
  }
  m.cells.reserve(static_cast<std::size_t>(m.height) * m.width);
  for (int r = 0; r < m.height; ++r) {
    next_line(true);
    if (static_cast<int>(line.size()) != m.width)
      throw UsageError("map: row " + std::to_string(r) + " has length " +
                       std::to_string(line.size()) + ", expected " + std::to_string(m.width));
    for (char ch : line) {
      if (ch == '#') {
        m.cells.push_back(Cell::Occupied);
      } else if (ch == '.') {
        m.cells.push_back(Cell::Free);
        ++m.free_count;
      } else {
        throw UsageError(std::string("map: invalid character '") + ch + "' in row " +
                         std::to_string(r));
      }
    }
  }
  if (next_line(false)) throw UsageError("map: trailing content after last row");
  if (m.free_count == 0) throw UsageError("map: no free cells");
  return m;
}

std::string save_map(const GroundTruthMap& map) {
  std::ostringstream out;
  out << "GRIDMAP v1\n" << map.height << " " << map.width << "\n";
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) out << (map.at(r, c) == Cell::Occupied ? '#' : '.');
    out << '\n';
  }
  return out.str();
}

GroundTruthMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open map file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

std::vector<std::pair<int, int>> free_cells(const GroundTruthMap& map) {
  std::vector<std::pair<int, int>> out;
  out.reserve(map.free_count);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c)
      if (map.at(r, c) == Cell::Free) out.emplace_back(r, c);
  return out;
}

namespace {

int flood_fill_count(const GroundTruthMap& map, int r0, int c0) {
  std::vector<std::uint8_t> seen(map.cells.size(), 0);
  std::vector<std::pair<int, int>> stack{{r0, c0}};
  seen[static_cast<std::size_t>(r0) * map.width + c0] = 1;
  int count = 0;
  while (!stack.empty()) {
    auto [r, c] = stack.back();
    stack.pop_back();
    ++count;
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (map.occupied(nr, nc)) continue;
      std::uint8_t& s = seen[static_cast<std::size_t>(nr) * map.width + nc];
      if (s) continue;
      s = 1;
      stack.emplace_back(nr, nc);
    }
  }
  return count;
}

}  // namespace

bool free_cells_connected(const GroundTruthMap& map) {
  if (map.free_count == 0) return true;
  auto cells = free_cells(map);
  return flood_fill_count(map, cells[0].first, cells[0].second) == map.free_count;
}

Pose random_free_pose(const GroundTruthMap& map, Rng& rng) {
  auto cells = free_cells(map);
  if (cells.empty()) throw RuntimeFailure("random_free_pose: map has no free cells");
  auto [r, c] = cells[rng.uniform_int(static_cast<int>(cells.size()))];
  Pose p;
  p.row = r;
  p.col = c;
  p.heading = static_cast<Heading>(rng.uniform_int(4));
  return p;
}

GroundTruthMap place_obstacles(const GroundTruthMap& base, int count, std::pair<int, int> start,
                               Rng& rng) {
  if (count < 0) throw UsageError("place_obstacles: negative count");
  GroundTruthMap m = base;
  m.observable_count = 0;
  if (count == 0) return m;
  if (!m.in_bounds(start.first, start.second) || m.at(start.first, start.second) != Cell::Free)
    throw UsageError("place_obstacles: start cell is not free");

  auto eligible = [&](int r, int c) {
    if (m.at(r, c) != Cell::Free) return false;
    if (std::abs(r - start.first) <= 1 && std::abs(c - start.second) <= 1) return false;
    return true;
  };
  int eligible_count = 0;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (eligible(r, c)) ++eligible_count;
  if (count > eligible_count)
    throw UsageError("place_obstacles: map too small for " + std::to_string(count) + " obstacles");

  for (int placed = 0; placed < count; ++placed) {
    bool ok = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto cells = free_cells(m);
      auto [r, c] = cells[rng.uniform_int(static_cast<int>(cells.size()))];
      if (!eligible(r, c)) continue;
      std::size_t i = static_cast<std::size_t>(r) * m.width + c;
      m.cells[i] = Cell::Occupied;
      --m.free_count;
      if (free_cells_connected(m)) {
        ok = true;
        break;
      }
      m.cells[i] = Cell::Free;
      ++m.free_count;
    }
    if (!ok) throw RuntimeFailure("place_obstacles: no valid placement after 1000 attempts");
  }
  return m;
}

void export_map_pgm(const GroundTruthMap& map, const std::string& path) {
  std::vector<std::uint8_t> px(map.cells.size());
  for (std::size_t i = 0; i < map.cells.size(); ++i)
    px[i] = map.cells[i] == Cell::Occupied ? 0 : 255;
  write_pgm(path, map.height, map.width, px);
}

void export_belief_pgm(const BeliefMap& belief, const std::string& path) {
  std::vector<std::uint8_t> px(belief.cells.size());
  for (std::size_t i = 0; i < belief.cells.size(); ++i) {
    switch (belief.cells[i]) {
      case Cell::Free: px[i] = 255; break;
      case Cell::Unknown: px[i] = 128; break;
      case Cell::Occupied: px[i] = 0; break;
    }
  }
  write_pgm(path, belief.height, belief.width, px);
}

}  // namespace gx
