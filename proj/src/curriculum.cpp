#include "gx/curriculum.hpp"

#include <stdexcept>

#include "gx/common.hpp"
#include "gx/rng.hpp"

namespace gx {

bool should_switch(const std::vector<double>& newest_level_scores) {
  if (newest_level_scores.size() < static_cast<std::size_t>(kSwitchWindow)) return false;
  double sum = 0.0;
  for (std::size_t i = newest_level_scores.size() - kSwitchWindow; i < newest_level_scores.size();
       ++i)
    sum += newest_level_scores[i];
  return sum / kSwitchWindow > kSwitchThreshold;
}

CurriculumMode parse_mode(const std::string& s) {
  if (s == "ccrl") return CurriculumMode::Ccrl;
  if (s == "cl") return CurriculumMode::Cl;
  if (s == "flat") return CurriculumMode::Flat;
  throw UsageError("unknown mode '" + s + "' (expected ccrl, cl or flat)");
}

std::string mode_name(CurriculumMode m) {
  switch (m) {
    case CurriculumMode::Ccrl: return "ccrl";
    case CurriculumMode::Cl: return "cl";
    default: return "flat";
  }
}

std::vector<int> stage_levels(CurriculumMode m, int stage, int level_count) {
  std::vector<int> out;
  switch (m) {
    case CurriculumMode::Ccrl:
      for (int l = 1; l <= stage; ++l) out.push_back(l);
      break;
    case CurriculumMode::Cl: out.push_back(stage); break;
    case CurriculumMode::Flat:
      for (int l = 1; l <= level_count; ++l) out.push_back(l);
      break;
  }
  return out;
}

void apply_stage(VecEnv& pool, CurriculumMode m, int stage,
                 const std::vector<EnvConfig>& level_cfgs, int n_per_level) {
  int level_count = static_cast<int>(level_cfgs.size());
  if (stage < 1 || stage > level_count) throw std::logic_error("apply_stage: stage out of range");
  if (m == CurriculumMode::Ccrl && pool.slot_count() > 0) {
    // union: only the new level joins
    pool.add_envs(level_cfgs[stage - 1], stage, n_per_level);
    return;
  }
  pool.clear();
  for (int l : stage_levels(m, stage, level_count))
    pool.add_envs(level_cfgs[l - 1], l, n_per_level);
}

EpisodeEval run_episode(ExploreEnv& env, Policy& policy, std::uint64_t seed) {
  Observation obs = env.reset(seed);
  policy.on_episode_start(env);
  EpisodeEval ev;
  if (env.rho() >= 0.95) ev.explore_steps = 0;
  while (!env.done()) {
    Action a = policy.act(obs, env);
    StepResult r = env.step(a);
    obs = std::move(r.obs);
    if (!ev.explore_steps && r.rho >= 0.95) ev.explore_steps = r.steps;
    if (r.terminated || r.truncated) {
      ev.final_rho = r.rho;
      ev.steps = r.steps;
      ev.success = r.succeeded;
      ev.collided = r.collided;
    }
  }
  return ev;
}

LevelEval evaluate_level(const EnvConfig& cfg, int level, Policy& policy, int episodes,
                         std::uint64_t master_seed, std::uint64_t eval_index) {
  LevelEval out;
  out.level = level;
  ExploreEnv env(cfg);
  double sum = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::uint64_t seed = derive_seed(master_seed, "EVAL",
                                     {eval_index, static_cast<std::uint64_t>(level),
                                      static_cast<std::uint64_t>(ep)});
    EpisodeEval ev = run_episode(env, policy, seed);
    sum += ev.final_rho;
    out.episodes.push_back(ev);
  }
  out.mean_rho = episodes > 0 ? sum / episodes : 0.0;
  return out;
}

}  // namespace gx
