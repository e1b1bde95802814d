#include "gx/env.hpp"

#include <algorithm>
#include <stdexcept>

#include "gx/common.hpp"
#include "gx/maps.hpp"

namespace gx {

void EnvConfig::validate() const {
  if (obstacle_count < 0) throw UsageError("env: obstacle_count must be >= 0");
  if (max_steps <= 0) throw UsageError("env: max_steps must be positive");
  if (!(success_threshold > 0.0) || success_threshold > 1.0)
    throw UsageError("env: success_threshold must be in (0,1]");
  lidar.validate();
  encoder.validate();
}

ExploreEnv::ExploreEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  base_ = gx::load_map(cfg_.map_id);
}

Observation ExploreEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  pose_ = random_free_pose(base_, rng);
  reset_pose_ = pose_;
  map_ = place_obstacles(base_, cfg_.obstacle_count, {pose_.row, pose_.col}, rng);
  refresh_observable_count(map_, cfg_.lidar);

  obstacles_.clear();
  for (int r = 0; r < map_.height; ++r)
    for (int c = 0; c < map_.width; ++c)
      if (map_.at(r, c) == Cell::Occupied && base_.at(r, c) == Cell::Free)
        obstacles_.emplace_back(r, c);

  belief_ = BeliefMap::unknown(map_.height, map_.width);
  scan_ = scan_and_integrate(map_, pose_, cfg_.lidar, belief_);
  rho_ = static_cast<double>(belief_.known_count) / map_.observable_count;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult ExploreEnv::step(Action a) {
  if (done_) throw std::logic_error("step on finished episode; call reset");
  StepResult res;
  ++steps_;

  double rho_prev = rho_;
  MoveResult mv = apply_action(map_, pose_, a);
  if (mv.collided) {
    // no scan: the agent stays put and the episode ends
    res.collided = true;
    res.terminated = true;
    res.reward = -1.0 - 0.005;
  } else {
    pose_ = mv.pose;
    scan_ = scan_and_integrate(map_, pose_, cfg_.lidar, belief_);
    rho_ = static_cast<double>(belief_.known_count) / map_.observable_count;
    double progress;
    if (rho_ > rho_prev) {
      progress = std::clamp(10.0 * (rho_ * rho_ - rho_prev * rho_prev), 0.0, 1.0);
    } else {
      progress = -0.005;
    }
    res.reward = progress;
    if (rho_ >= cfg_.success_threshold) {
      res.succeeded = true;
      res.terminated = true;
      res.reward += 1.0;
    }
  }
  res.truncated = !res.terminated && steps_ >= cfg_.max_steps;
  done_ = res.terminated || res.truncated;
  res.rho = rho_;
  res.steps = steps_;
  res.obs = observe();
  return res;
}

Observation ExploreEnv::observe() const {
  return encode(belief_, pose_, scan_, cfg_.lidar, cfg_.encoder);
}

}  // namespace gx
