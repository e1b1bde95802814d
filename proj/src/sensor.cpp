#include "gx/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "gx/common.hpp"

namespace gx {

void LidarConfig::validate() const {
  if (fov_degrees <= 0 || fov_degrees > 360) throw UsageError("lidar: fov must be in (0,360]");
  if (resolution_degrees <= 0) throw UsageError("lidar: resolution must be positive");
  if (fov_degrees % resolution_degrees != 0)
    throw UsageError("lidar: fov must be a multiple of resolution");
  if (!(max_range > 0)) throw UsageError("lidar: max_range must be positive");
}

std::vector<double> beam_offsets(const LidarConfig& cfg) {
  std::vector<double> out(cfg.beam_count());
  for (int i = 0; i < cfg.beam_count(); ++i)
    out[i] = -cfg.fov_degrees / 2.0 + i * cfg.resolution_degrees;
  return out;
}

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// Direction for a math-convention angle. The angle is folded into [0,45]
// before calling cos/sin so every rotation/reflection of the same base angle
// gets bit-identical component magnitudes, and axis-aligned and diagonal
// rays come out exact. dy is in row units (positive = down).
void ray_direction(double angle_deg, double& dx, double& dy) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  int q = static_cast<int>(a / 90.0);
  if (q > 3) q = 3;
  double f = a - 90.0 * q;
  double c, s;
  if (f == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (f == 45.0) {
    c = s = std::sqrt(0.5);
  } else if (f < 45.0) {
    c = std::cos(f * kDegToRad);
    s = std::sin(f * kDegToRad);
  } else {
    c = std::sin((90.0 - f) * kDegToRad);
    s = std::cos((90.0 - f) * kDegToRad);
  }
  double x, y;  // y up
  switch (q) {
    case 0: x = c; y = s; break;
    case 1: x = -s; y = c; break;
    case 2: x = -c; y = -s; break;
    default: x = s; y = -c; break;
  }
  dx = x;
  dy = -y;
}

}  // namespace

RayHit cast_ray(const GroundTruthMap& map, const Pose& origin, double angle_deg,
                double max_range) {
  RayHit out;
  out.distance = max_range;
  if (map.occupied(origin.row, origin.col))
    throw std::logic_error("cast_ray: origin cell is not free");

  double dx, dy;
  ray_direction(angle_deg, dx, dy);
  double px = origin.col + 0.5, py = origin.row + 0.5;

  int ix = origin.col, iy = origin.row;
  int step_x = dx > 0 ? 1 : -1, step_y = dy > 0 ? 1 : -1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t_max_x = kInf, t_max_y = kInf, t_dx = kInf, t_dy = kInf;
  if (dx != 0) {
    t_max_x = ((dx > 0 ? ix + 1 : ix) - px) / dx;
    t_dx = 1.0 / std::abs(dx);
  }
  if (dy != 0) {
    t_max_y = ((dy > 0 ? iy + 1 : iy) - py) / dy;
    t_dy = 1.0 / std::abs(dy);
  }

  auto stop_at = [&](double t, int r, int c) {
    out.distance = t;
    out.hit = true;
    out.hit_row = r;
    out.hit_col = c;
  };

  for (;;) {
    if (t_max_x < t_max_y) {
      double t = t_max_x;
      if (t >= max_range) return out;
      ix += step_x;
      t_max_x += t_dx;
      if (map.occupied(iy, ix)) {
        stop_at(t, iy, ix);
        return out;
      }
      out.visited.emplace_back(iy, ix);
    } else if (t_max_y < t_max_x) {
      double t = t_max_y;
      if (t >= max_range) return out;
      iy += step_y;
      t_max_y += t_dy;
      if (map.occupied(iy, ix)) {
        stop_at(t, iy, ix);
        return out;
      }
      out.visited.emplace_back(iy, ix);
    } else {
      // exact corner crossing; touches both side cells
      double t = t_max_x;
      if (t >= max_range) return out;
      int ar = iy, ac = ix + step_x;
      int br = iy + step_y, bc = ix;
      bool hit_a = map.occupied(ar, ac), hit_b = map.occupied(br, bc);
      if (!hit_a) out.visited.emplace_back(ar, ac);
      if (!hit_b) out.visited.emplace_back(br, bc);
      if (hit_a || hit_b) {
        // both occupied: report the lexicographically smaller cell
        if (hit_a && hit_b) {
          auto cell = std::min(std::make_pair(ar, ac), std::make_pair(br, bc));
          stop_at(t, cell.first, cell.second);
        } else if (hit_a) {
          stop_at(t, ar, ac);
        } else {
          stop_at(t, br, bc);
        }
        return out;
      }
      ix += step_x;
      iy += step_y;
      t_max_x += t_dx;
      t_max_y += t_dy;
      if (map.occupied(iy, ix)) {
        stop_at(t, iy, ix);
        return out;
      }
      out.visited.emplace_back(iy, ix);
    }
  }
}

namespace {

// math-convention angle for a compass angle (compass 0 = north, clockwise)
double compass_to_math(double compass_deg) { return 90.0 - compass_deg; }

}  // namespace

LidarScan scan(const GroundTruthMap& map, const Pose& pose, const LidarConfig& cfg) {
  LidarScan s;
  auto offsets = beam_offsets(cfg);
  s.ranges.reserve(offsets.size());
  for (double off : offsets) {
    double a = compass_to_math(heading_degrees(pose.heading) + off);
    s.ranges.push_back(cast_ray(map, pose, a, cfg.max_range).distance);
  }
  return s;
}

LidarScan scan_and_integrate(const GroundTruthMap& map, const Pose& pose, const LidarConfig& cfg,
                             BeliefMap& belief) {
  LidarScan s;
  auto offsets = beam_offsets(cfg);
  s.ranges.reserve(offsets.size());
  belief.mark(pose.row, pose.col, Cell::Free);
  for (double off : offsets) {
    double a = compass_to_math(heading_degrees(pose.heading) + off);
    RayHit hit = cast_ray(map, pose, a, cfg.max_range);
    s.ranges.push_back(hit.distance);
    for (auto [r, c] : hit.visited) belief.mark(r, c, Cell::Free);
    if (hit.hit && belief.in_bounds(hit.hit_row, hit.hit_col))
      belief.mark(hit.hit_row, hit.hit_col, Cell::Occupied);
  }
  return s;
}

int compute_observable_count(const GroundTruthMap& map, const LidarConfig& cfg) {
  cfg.validate();
  // distinct beam angles over the four headings
  std::set<double> angles;
  for (int h = 0; h < 4; ++h)
    for (double off : beam_offsets(cfg)) {
      double a = std::fmod(90.0 * h + off, 360.0);
      if (a < 0) a += 360.0;
      angles.insert(a);
    }

  std::vector<std::uint8_t> seen(map.cells.size(), 0);
  int count = 0;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      if (map.at(r, c) != Cell::Free) continue;
      std::size_t i = static_cast<std::size_t>(r) * map.width + c;
      if (!seen[i]) {
        seen[i] = 1;
        ++count;
      }
      Pose p{r, c, Heading::North};
      for (double a : angles) {
        RayHit hit = cast_ray(map, p, compass_to_math(a), cfg.max_range);
        if (hit.hit && map.in_bounds(hit.hit_row, hit.hit_col)) {
          std::size_t j = static_cast<std::size_t>(hit.hit_row) * map.width + hit.hit_col;
          if (!seen[j]) {
            seen[j] = 1;
            ++count;
          }
        }
      }
    }
  }
  return count;
}

void refresh_observable_count(GroundTruthMap& map, const LidarConfig& cfg) {
  map.observable_count = compute_observable_count(map, cfg);
}

}  // namespace gx
