#include "gx/vecenv.hpp"

#include <stdexcept>

namespace gx {

VecEnv::VecEnv(std::uint64_t master_seed, int threads)
    : master_seed_(master_seed), pool_(threads) {}

void VecEnv::add_envs(const EnvConfig& cfg, int level, int n) {
  for (int i = 0; i < n; ++i) {
    Slot s;
    s.env = std::make_unique<ExploreEnv>(cfg);
    s.rng = std::make_unique<Rng>(derive_seed(master_seed_, "SLOT", {slots_created_++}));
    s.level = level;
    s.obs = s.env->reset(s.rng->next_u64());
    slots_.push_back(std::move(s));
  }
}

void VecEnv::clear() { slots_.clear(); }

std::vector<SlotStep> VecEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != slots_.size())
    throw std::logic_error("VecEnv::step: one action per slot required");
  std::vector<SlotStep> out(slots_.size());
  pool_.for_chunks(static_cast<std::int64_t>(slots_.size()), 16,
                   [&](int, std::int64_t lo, std::int64_t hi) {
                     for (std::int64_t i = lo; i < hi; ++i) {
                       Slot& s = slots_[i];
                       StepResult r = s.env->step(actions[i]);
                       SlotStep& o = out[i];
                       o.reward = r.reward;
                       o.terminated = r.terminated;
                       o.truncated = r.truncated;
                       o.level = s.level;
                       if (r.terminated || r.truncated) {
                         o.final_obs = std::move(r.obs);
                         o.episode_rho = r.rho;
                         o.episode_steps = r.steps;
                         s.obs = s.env->reset(s.rng->next_u64());
                       } else {
                         s.obs = std::move(r.obs);
                       }
                     }
                   });
  return out;
}

}  // namespace gx
