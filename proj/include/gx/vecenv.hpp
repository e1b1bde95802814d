#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gx/env.hpp"
#include "gx/rng.hpp"
#include "gx/threadpool.hpp"

namespace gx {

struct SlotStep {
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  int level = 0;
  // set when the episode ended this step: the last observation of the old
  // episode (the slot's current observation is already the reset one)
  std::optional<Observation> final_obs;
  double episode_rho = 0.0;
  int episode_steps = 0;
};

// Fixed roster of environments stepped in lockstep, each tagged with the
// curriculum level it came from. Episodes auto-reset with seeds drawn from a
// per-slot stream, so results do not depend on thread count or on envs added
// later.
class VecEnv {
 public:
  explicit VecEnv(std::uint64_t master_seed, int threads = 1);

  // appends n fresh envs (tagged `level`) and resets them
  void add_envs(const EnvConfig& cfg, int level, int n);
  // drops all slots (slot seed streams are never reused)
  void clear();

  int slot_count() const { return static_cast<int>(slots_.size()); }
  int level_of(int slot) const { return slots_[slot].level; }
  const Observation& observation(int slot) const { return slots_[slot].obs; }
  const ExploreEnv& env(int slot) const { return *slots_[slot].env; }

  std::vector<SlotStep> step(const std::vector<Action>& actions);

 private:
  struct Slot {
    std::unique_ptr<ExploreEnv> env;
    std::unique_ptr<Rng> rng;  // reset-seed stream
    Observation obs;
    int level = 0;
  };

  std::uint64_t master_seed_;
  std::uint64_t slots_created_ = 0;
  std::vector<Slot> slots_;
  ThreadPool pool_;
};

}  // namespace gx
