#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gx/rng.hpp"

namespace gx {

enum class Cell : std::uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

// Row 0 is the top of the map. North decreases row, East increases col.
enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline int heading_degrees(Heading h) { return 90 * static_cast<int>(h); }
inline Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
inline Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

// (drow, dcol) one cell ahead
std::pair<int, int> heading_delta(Heading h);

enum class Action : std::uint8_t { Forward = 0, TurnLeft = 1, TurnRight = 2 };
inline constexpr int kActionCount = 3;

struct Pose {
  int row = 0;
  int col = 0;
  Heading heading = Heading::North;
  bool operator==(const Pose&) const = default;
};

// Static occupancy grid. observable_count is the number of cells any lidar
// beam can ever see (filled in by the sensor layer, 0 until then).
struct GroundTruthMap {
  int height = 0;
  int width = 0;
  std::vector<Cell> cells;  // row-major, Free/Occupied only
  int free_count = 0;
  int observable_count = 0;

  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  Cell at(int r, int c) const { return cells[static_cast<std::size_t>(r) * width + c]; }
  // out-of-bounds reads as occupied so rays and moves stop at the grid edge
  bool occupied(int r, int c) const { return !in_bounds(r, c) || at(r, c) == Cell::Occupied; }
};

// layout equality (dims + cells); derived counts are not compared
bool operator==(const GroundTruthMap& a, const GroundTruthMap& b);

// What the agent has seen so far. Cells start Unknown and once marked must
// never change (the world is static).
struct BeliefMap {
  int height = 0;
  int width = 0;
  std::vector<Cell> cells;
  int known_count = 0;

  static BeliefMap unknown(int h, int w);
  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  Cell at(int r, int c) const { return cells[static_cast<std::size_t>(r) * width + c]; }
  void mark(int r, int c, Cell v);
};

struct MoveResult {
  Pose pose;
  bool collided = false;
};

// Forward moves one cell ahead or collides (pose unchanged); turns always
// succeed and never collide.
MoveResult apply_action(const GroundTruthMap& map, const Pose& pose, Action a);

// Text format:
//   GRIDMAP v1
//   <height> <width>
//   rows of '#' (occupied) and '.' (free)
// Lines starting with ';' are comments. Throws UsageError on malformed input.
GroundTruthMap parse_map(const std::string& text);
std::string save_map(const GroundTruthMap& map);
GroundTruthMap load_map_file(const std::string& path);

std::vector<std::pair<int, int>> free_cells(const GroundTruthMap& map);

// true when every free cell is 4-connected to every other free cell
bool free_cells_connected(const GroundTruthMap& map);

// Uniform over free cells, then uniform over the four headings.
Pose random_free_pose(const GroundTruthMap& map, Rng& rng);

// Adds `count` occupied cells, keeping the free space connected and leaving a
// clear Chebyshev-radius-1 neighborhood around `start`. Returns a new map
// with observable_count reset to 0. Throws UsageError if the map cannot fit
// that many obstacles, RuntimeFailure if placement keeps failing.
GroundTruthMap place_obstacles(const GroundTruthMap& base, int count, std::pair<int, int> start,
                               Rng& rng);

// PGM exports: ground truth free=255 occupied=0; belief free=255 unknown=128
// occupied=0.
void export_map_pgm(const GroundTruthMap& map, const std::string& path);
void export_belief_pgm(const BeliefMap& belief, const std::string& path);

}  // namespace gx
