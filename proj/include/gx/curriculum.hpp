#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gx/env.hpp"
#include "gx/vecenv.hpp"

namespace gx {

// exponential moving average of evaluation scores, seeded by the first sample
struct EmaTracker {
  double tau = 0.9;
  bool started = false;
  double value = 0.0;

  void add(double x) {
    value = started ? tau * value + (1.0 - tau) * x : x;
    started = true;
  }
};

// A stage switches once the newest level has at least kSwitchWindow
// evaluations and their trailing mean is strictly above kSwitchThreshold.
inline constexpr int kSwitchWindow = 10;
inline constexpr double kSwitchThreshold = 0.95;

bool should_switch(const std::vector<double>& newest_level_scores);

enum class CurriculumMode { Ccrl, Cl, Flat };

CurriculumMode parse_mode(const std::string& s);
std::string mode_name(CurriculumMode m);

// Pool layout for a stage (1-based): Ccrl accumulates levels 1..stage, Cl
// keeps only the newest level, Flat trains on every level from the start.
std::vector<int> stage_levels(CurriculumMode m, int stage, int level_count);

// Rebuilds or extends the pool to match stage_levels. For Ccrl this only
// appends the new level's envs; existing episodes keep running.
void apply_stage(VecEnv& pool, CurriculumMode m, int stage,
                 const std::vector<EnvConfig>& level_cfgs, int n_per_level);

struct Policy {
  virtual ~Policy() = default;
  virtual void on_episode_start(const ExploreEnv& env) { (void)env; }
  virtual Action act(const Observation& obs, const ExploreEnv& env) = 0;
};

struct EpisodeEval {
  double final_rho = 0.0;
  int steps = 0;
  bool success = false;
  bool collided = false;
  // first step at which rho reached 0.95, the coverage yardstick
  std::optional<int> explore_steps;
};

EpisodeEval run_episode(ExploreEnv& env, Policy& policy, std::uint64_t seed);

struct LevelEval {
  int level = 0;
  double mean_rho = 0.0;
  std::vector<EpisodeEval> episodes;
};

// Greedy evaluation episodes on one level; episode seeds derive from
// (master, eval_index, level, episode).
LevelEval evaluate_level(const EnvConfig& cfg, int level, Policy& policy, int episodes,
                         std::uint64_t master_seed, std::uint64_t eval_index);

}  // namespace gx
