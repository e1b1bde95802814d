#pragma once

#include <utility>
#include <vector>

#include "gx/gridworld.hpp"

namespace gx {

struct LidarConfig {
  int fov_degrees = 270;
  int resolution_degrees = 9;
  double max_range = 12.0;  // cells

  int beam_count() const { return fov_degrees / resolution_degrees + 1; }
  void validate() const;
};

// Beam i points at compass angle heading + (-fov/2 + i*resolution), where
// compass 0 = north and angles grow clockwise (N, E, S, W).
std::vector<double> beam_offsets(const LidarConfig& cfg);

struct RayHit {
  double distance = 0.0;  // to the entry point of the hit cell, or max_range
  bool hit = false;
  int hit_row = -1, hit_col = -1;  // may be out of bounds if the grid is open-edged
  std::vector<std::pair<int, int>> visited;  // free cells crossed, origin excluded, ray order
};

// Supercover grid walk from the center of the origin cell. angle_deg is in
// math convention: 0 = east (+col), 90 = north (-row), counterclockwise.
// A ray passing exactly through a cell corner touches both adjacent side
// cells: both are visited when free, and the ray stops at the corner when
// either is occupied. Cells entered at exactly max_range are out of reach.
RayHit cast_ray(const GroundTruthMap& map, const Pose& origin, double angle_deg, double max_range);

struct LidarScan {
  std::vector<double> ranges;  // beam_count entries
};

LidarScan scan(const GroundTruthMap& map, const Pose& pose, const LidarConfig& cfg);

// Casts all beams, marking crossed cells Free and hit cells Occupied in the
// belief (the pose cell itself is marked Free first).
LidarScan scan_and_integrate(const GroundTruthMap& map, const Pose& pose, const LidarConfig& cfg,
                             BeliefMap& belief);

// Number of cells some beam can see from some free cell under any of the four
// headings. This is the denominator of the exploration rate.
int compute_observable_count(const GroundTruthMap& map, const LidarConfig& cfg);
void refresh_observable_count(GroundTruthMap& map, const LidarConfig& cfg);

}  // namespace gx
