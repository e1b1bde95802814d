#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gx/env.hpp"
#include "gx/ppo.hpp"

namespace gx {

// One flat `key = value` file drives a whole run; see serialize_config for
// the full key set. Unknown keys are errors.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string mode = "ccrl";  // ccrl | cl | flat
  std::string out_dir = "runs/out";
  std::vector<std::string> levels = {"level-1", "level-2", "level-3", "level-4", "level-5"};
  int n_per_level = 4;
  EnvConfig env;  // shared by all levels; map_id comes from `levels`
  PpoConfig ppo;
  int eval_interval = 5000;  // newest-level transitions between evaluations
  int eval_episodes = 3;
  std::int64_t budget = 2000000;  // total transition cap, 0 stops before training
  std::string final_stop = "criterion";  // criterion | ema | budget
  double final_stop_ema = 0.95;
  int checkpoint_interval = 50;  // updates
  int final_eval_episodes = 20;
  int threads = 1;

  void validate() const;
  std::vector<EnvConfig> level_env_configs() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// canonical form: fixed key order, shortest round-trippable numbers;
// parse_config(serialize_config(c)) reproduces c exactly
std::string serialize_config(const RunConfig& cfg);

}  // namespace gx
