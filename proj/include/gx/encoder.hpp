#pragma once

#include <string>
#include <vector>

#include "gx/gridworld.hpp"
#include "gx/sensor.hpp"

namespace gx {

struct EncoderConfig {
  int h = 24;  // output height of both map channels
  int w = 24;  // output width
  int d = 3;   // pose marker edge length in the global channel

  void validate() const;
};

// Pixel values before the /255 normalization: free 0, marker/unknown 128,
// occupied (and anything binarized "known") 255.
inline constexpr double kGray = 128.0 / 255.0;

struct Observation {
  int h = 0, w = 0;
  std::vector<double> lem;  // local window, values in {0, 128/255, 1}
  std::vector<double> gem;  // resized explored region, values in {0, 128/255, 1}
  std::vector<double> aux;  // beam ranges / max_range, then heading/360
};

// Local egocentric map: h x w belief window with the agent at (h/2, w/2),
// out-of-map cells read as occupied. occupied=1, unknown=128/255, free=0.
std::vector<double> encode_lem(const BeliefMap& belief, const Pose& pose, const EncoderConfig& cfg);

// Global explored map: bounding box of known cells, binarized (known=255,
// unknown=0), nearest-neighbor resized to h x w, with a d x d marker of value
// 128 stamped at the agent (clipped at edges, overwriting map pixels).
std::vector<double> encode_gem(const BeliefMap& belief, const Pose& pose, const EncoderConfig& cfg);

// out(i,j) = in(floor(i*h_in/h_out), floor(j*w_in/w_out))
std::vector<double> nearest_resize(const std::vector<double>& in, int h_in, int w_in, int h_out,
                                   int w_out);

Observation encode(const BeliefMap& belief, const Pose& pose, const LidarScan& scan,
                   const LidarConfig& lidar, const EncoderConfig& cfg);

// Rotates the map channels clockwise k quarter turns and advances the
// orientation entry by 0.25*k (mod 1). Ranges are egocentric and unchanged.
// Requires square channels for odd k.
Observation rotate_observation(const Observation& obs, int k);

// writes <prefix>_lem.pgm, <prefix>_gem.pgm and <prefix>_aux.txt
void dump_observation(const Observation& obs, const std::string& prefix);

}  // namespace gx
