#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gx/encoder.hpp"
#include "gx/gridworld.hpp"
#include "gx/sensor.hpp"

namespace gx {

struct EnvConfig {
  std::string map_id = "level-1";
  int obstacle_count = 4;
  int max_steps = 1000;
  double success_threshold = 0.99;
  LidarConfig lidar;
  EncoderConfig encoder;

  void validate() const;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool terminated = false;  // collision or success
  bool truncated = false;   // step limit
  // info
  double rho = 0.0;
  int steps = 0;
  bool collided = false;
  bool succeeded = false;
};

// Exploration episode on one map. Per step the reward is the sum of
//   progress: clip(10*(rho^2 - rho_prev^2), 0, 1) when rho grew, else -0.005
//   success: +1 once rho reaches the threshold (terminates)
//   collision: -1 on a blocked forward move (terminates, no scan happens)
// where rho = known cells / observable cells.
class ExploreEnv {
 public:
  explicit ExploreEnv(EnvConfig cfg);

  // Draws the start pose uniformly over the base map's free cells and
  // headings, then scatters obstacles, then takes the initial scan.
  Observation reset(std::uint64_t seed);
  StepResult step(Action a);

  bool done() const { return done_; }
  double rho() const { return rho_; }
  int steps() const { return steps_; }
  const EnvConfig& config() const { return cfg_; }
  const GroundTruthMap& map() const { return map_; }
  const GroundTruthMap& base_map() const { return base_; }
  const BeliefMap& belief() const { return belief_; }
  const Pose& pose() const { return pose_; }
  Pose reset_pose() const { return reset_pose_; }
  const std::vector<std::pair<int, int>>& obstacles() const { return obstacles_; }
  const LidarScan& last_scan() const { return scan_; }

 private:
  Observation observe() const;

  EnvConfig cfg_;
  GroundTruthMap base_;
  GroundTruthMap map_;
  BeliefMap belief_;
  Pose pose_{};
  Pose reset_pose_{};
  std::vector<std::pair<int, int>> obstacles_;
  LidarScan scan_;
  double rho_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace gx
