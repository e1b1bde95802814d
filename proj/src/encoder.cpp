#include "gx/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gx/common.hpp"
#include "gx/pgm.hpp"

namespace gx {

void EncoderConfig::validate() const {
  if (h <= 0 || w <= 0) throw UsageError("encoder: output dims must be positive");
  if (d < 1 || d > h || d > w) throw UsageError("encoder: marker must fit the output");
}

std::vector<double> encode_lem(const BeliefMap& belief, const Pose& pose,
                               const EncoderConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.h) * cfg.w);
  for (int i = 0; i < cfg.h; ++i) {
    for (int j = 0; j < cfg.w; ++j) {
      int r = pose.row + i - cfg.h / 2;
      int c = pose.col + j - cfg.w / 2;
      double v;
      if (!belief.in_bounds(r, c)) {
        v = 1.0;
      } else {
        switch (belief.at(r, c)) {
          case Cell::Occupied: v = 1.0; break;
          case Cell::Unknown: v = kGray; break;
          default: v = 0.0; break;
        }
      }
      out[static_cast<std::size_t>(i) * cfg.w + j] = v;
    }
  }
  return out;
}

std::vector<double> nearest_resize(const std::vector<double>& in, int h_in, int w_in, int h_out,
                                   int w_out) {
  std::vector<double> out(static_cast<std::size_t>(h_out) * w_out);
  for (int i = 0; i < h_out; ++i) {
    int si = static_cast<int>(static_cast<std::int64_t>(i) * h_in / h_out);
    for (int j = 0; j < w_out; ++j) {
      int sj = static_cast<int>(static_cast<std::int64_t>(j) * w_in / w_out);
      out[static_cast<std::size_t>(i) * w_out + j] = in[static_cast<std::size_t>(si) * w_in + sj];
    }
  }
  return out;
}

std::vector<double> encode_gem(const BeliefMap& belief, const Pose& pose,
                               const EncoderConfig& cfg) {
  int r0 = pose.row, r1 = pose.row, c0 = pose.col, c1 = pose.col;
  bool any = false;
  for (int r = 0; r < belief.height; ++r) {
    for (int c = 0; c < belief.width; ++c) {
      if (belief.at(r, c) == Cell::Unknown) continue;
      if (!any) {
        r0 = r1 = r;
        c0 = c1 = c;
        any = true;
      } else {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  }
  int bh = r1 - r0 + 1, bw = c1 - c0 + 1;
  std::vector<double> box(static_cast<std::size_t>(bh) * bw);
  for (int r = 0; r < bh; ++r)
    for (int c = 0; c < bw; ++c)
      box[static_cast<std::size_t>(r) * bw + c] =
          belief.at(r0 + r, c0 + c) == Cell::Unknown ? 0.0 : 1.0;

  std::vector<double> out = nearest_resize(box, bh, bw, cfg.h, cfg.w);

  int mr = static_cast<int>(static_cast<std::int64_t>(pose.row - r0) * cfg.h / bh);
  int mc = static_cast<int>(static_cast<std::int64_t>(pose.col - c0) * cfg.w / bw);
  for (int i = mr - cfg.d / 2; i < mr - cfg.d / 2 + cfg.d; ++i) {
    if (i < 0 || i >= cfg.h) continue;
    for (int j = mc - cfg.d / 2; j < mc - cfg.d / 2 + cfg.d; ++j) {
      if (j < 0 || j >= cfg.w) continue;
      out[static_cast<std::size_t>(i) * cfg.w + j] = kGray;
    }
  }
  return out;
}

Observation encode(const BeliefMap& belief, const Pose& pose, const LidarScan& scan,
                   const LidarConfig& lidar, const EncoderConfig& cfg) {
  Observation obs;
  obs.h = cfg.h;
  obs.w = cfg.w;
  obs.lem = encode_lem(belief, pose, cfg);
  obs.gem = encode_gem(belief, pose, cfg);
  obs.aux.reserve(scan.ranges.size() + 1);
  for (double r : scan.ranges) obs.aux.push_back(r / lidar.max_range);
  obs.aux.push_back(heading_degrees(pose.heading) / 360.0);
  return obs;
}

namespace {

std::vector<double> rot90cw(const std::vector<double>& in, int n) {
  std::vector<double> out(in.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = in[static_cast<std::size_t>(n - 1 - j) * n + i];
  return out;
}

}  // namespace

Observation rotate_observation(const Observation& obs, int k) {
  k = ((k % 4) + 4) % 4;
  Observation out = obs;
  if (k == 0) return out;
  if (obs.h != obs.w) throw std::logic_error("rotate_observation: channels must be square");
  for (int i = 0; i < k; ++i) {
    out.lem = rot90cw(out.lem, obs.h);
    out.gem = rot90cw(out.gem, obs.h);
  }
  double& heading = out.aux.back();
  heading = std::fmod(heading + 0.25 * k, 1.0);
  return out;
}

void dump_observation(const Observation& obs, const std::string& prefix) {
  auto to_px = [](const std::vector<double>& v) {
    std::vector<std::uint8_t> px(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      px[i] = static_cast<std::uint8_t>(std::lround(v[i] * 255.0));
    return px;
  };
  write_pgm(prefix + "_lem.pgm", obs.h, obs.w, to_px(obs.lem));
  write_pgm(prefix + "_gem.pgm", obs.h, obs.w, to_px(obs.gem));
  std::ofstream aux(prefix + "_aux.txt");
  if (!aux) throw RuntimeFailure("dump_observation: cannot open " + prefix + "_aux.txt");
  for (std::size_t i = 0; i < obs.aux.size(); ++i) {
    if (i) aux << ' ';
    aux << fmt_double(obs.aux[i]);
  }
  aux << '\n';
}

}  // namespace gx
