#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gx/neuralnet.hpp"
#include "gx/vecenv.hpp"

namespace gx {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 4;
  int minibatches = 4;
  int rollout_len = 128;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double lr = 2.5e-4;
  double max_grad_norm = 0.5;
  bool augment = true;  // add a randomly quarter-rotated copy of each sample

  void validate() const;
};

// Transitions from one rollout, slot-major: index = slot * len + t.
struct RolloutBuffer {
  int slots = 0;
  int len = 0;
  std::vector<Observation> obs;
  std::vector<int> actions;
  std::vector<double> logp;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  // bootstrap value for each index: v(s_{t+1}), the pre-reset observation's
  // value when the episode was truncated, anything when terminated (gated off)
  std::vector<double> next_values;
  std::vector<int> levels;

  std::size_t size() const { return actions.size(); }
  std::size_t at(int slot, int t) const { return static_cast<std::size_t>(slot) * len + t; }
};

struct RolloutStats {
  std::map<int, std::int64_t> level_transitions;
  int episodes_ended = 0;
  double mean_episode_rho = 0.0;
};

// Steps every slot rollout_len times, sampling actions from the current
// policy. action_rng is consumed in slot order each step.
RolloutBuffer collect_rollout(VecEnv& pool, const Net& net, const Params& params, int rollout_len,
                              Rng& action_rng, ThreadPool& tp, RolloutStats* stats);

// delta_t = r_t + gamma * next_v_t * (1 - term_t) - v_t
// A_t     = delta_t + gamma * lambda * (1 - term_t) * A_{t+1}
// The recursion is cut by termination only; truncation just changes which
// value bootstraps delta.
void compute_gae_sequence(std::span<const double> rewards, std::span<const double> values,
                          std::span<const double> next_values,
                          std::span<const std::uint8_t> terminated, double gamma, double lambda,
                          std::span<double> adv, std::span<double> ret);

// per-slot segments of the buffer
void compute_gae(const RolloutBuffer& buf, double gamma, double lambda, std::vector<double>& adv,
                 std::vector<double>& ret);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;  // mean squared error, before value_coef
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over minibatches
};

// Clipped-surrogate update over the buffer. Advantages are normalized here
// (whole-buffer mean/std, eps 1e-8). update_rng drives the epoch shuffles and
// the augmentation rotations. Throws RuntimeFailure if the loss goes
// non-finite.
UpdateStats ppo_update(const Net& net, Params& params, AdamState& adam, const PpoConfig& cfg,
                       const RolloutBuffer& buf, const std::vector<double>& advantages,
                       const std::vector<double>& returns, Rng& update_rng, ThreadPool& tp);

// log-probs of the stored actions under `params` (ratio diagnostics)
std::vector<double> policy_log_probs(const Net& net, const Params& params,
                                     const RolloutBuffer& buf, ThreadPool& tp);

}  // namespace gx
