#include "gx/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "gx/common.hpp"

namespace gx {

void PpoConfig::validate() const {
  if (!(gamma >= 0 && gamma <= 1)) throw UsageError("ppo: gamma must be in [0,1]");
  if (!(lambda >= 0 && lambda <= 1)) throw UsageError("ppo: lambda must be in [0,1]");
  if (!(clip > 0)) throw UsageError("ppo: clip must be positive");
  if (epochs < 1 || minibatches < 1 || rollout_len < 1)
    throw UsageError("ppo: epochs, minibatches and rollout_len must be positive");
  if (!(lr >= 0)) throw UsageError("ppo: lr must be non-negative");
  if (!(max_grad_norm > 0)) throw UsageError("ppo: max_grad_norm must be positive");
}

namespace {

void fill_row(const Observation& obs, double* maps, double* aux) {
  std::memcpy(maps, obs.lem.data(), sizeof(double) * obs.lem.size());
  std::memcpy(maps + obs.lem.size(), obs.gem.data(), sizeof(double) * obs.gem.size());
  std::memcpy(aux, obs.aux.data(), sizeof(double) * obs.aux.size());
}

}  // namespace

RolloutBuffer collect_rollout(VecEnv& pool, const Net& net, const Params& params, int rollout_len,
                              Rng& action_rng, ThreadPool& tp, RolloutStats* stats) {
  const int slots = pool.slot_count();
  const int actions_n = net.config().actions;
  const int map_in = 2 * net.config().in_h * net.config().in_w;
  const int aux_in = net.config().aux_dim;

  RolloutBuffer buf;
  buf.slots = slots;
  buf.len = rollout_len;
  std::size_t total = static_cast<std::size_t>(slots) * rollout_len;
  buf.obs.resize(total);
  buf.actions.resize(total);
  buf.logp.resize(total);
  buf.rewards.resize(total);
  buf.values.resize(total);
  buf.terminated.assign(total, 0);
  buf.truncated.assign(total, 0);
  buf.next_values.assign(total, 0.0);
  buf.levels.resize(total);

  std::vector<double> maps(static_cast<std::size_t>(slots) * map_in);
  std::vector<double> aux(static_cast<std::size_t>(slots) * aux_in);
  std::vector<double> logits(static_cast<std::size_t>(slots) * actions_n);
  std::vector<double> values(slots);
  std::vector<Action> acts(slots);

  // (buffer index, final observation) pairs needing a bootstrap value
  std::vector<std::pair<std::size_t, Observation>> pending;
  double rho_sum = 0.0;
  int episodes = 0;
  PreparedWeights tw = net.prepare(params);

  for (int t = 0; t < rollout_len; ++t) {
    for (int s = 0; s < slots; ++s)
      fill_row(pool.observation(s), maps.data() + static_cast<std::size_t>(s) * map_in,
               aux.data() + static_cast<std::size_t>(s) * aux_in);
    net.forward(params, tw, maps.data(), aux.data(), slots, logits.data(), values.data(), tp);

    for (int s = 0; s < slots; ++s) {
      const double* row = logits.data() + static_cast<std::size_t>(s) * actions_n;
      int a = sample_from_logits(row, actions_n, action_rng);
      acts[s] = static_cast<Action>(a);
      std::size_t i = buf.at(s, t);
      buf.obs[i] = pool.observation(s);
      buf.actions[i] = a;
      buf.logp[i] = log_prob_from_logits(row, actions_n, a);
      buf.values[i] = values[s];
      buf.levels[i] = pool.level_of(s);
    }

    std::vector<SlotStep> res = pool.step(acts);
    for (int s = 0; s < slots; ++s) {
      std::size_t i = buf.at(s, t);
      buf.rewards[i] = res[s].reward;
      buf.terminated[i] = res[s].terminated ? 1 : 0;
      buf.truncated[i] = res[s].truncated ? 1 : 0;
      if (res[s].final_obs) {
        if (res[s].truncated) pending.emplace_back(i, std::move(*res[s].final_obs));
        rho_sum += res[s].episode_rho;
        ++episodes;
      }
    }
  }

  // bootstrap values: truncated entries use the pre-reset observation, the
  // rollout's last step uses the next live observation
  std::vector<std::pair<std::size_t, const Observation*>> tail;
  tail.reserve(pending.size() + slots);
  for (const auto& [i, obs] : pending) tail.emplace_back(i, &obs);
  for (int s = 0; s < slots; ++s) {
    std::size_t i = buf.at(s, rollout_len - 1);
    if (!buf.terminated[i] && !buf.truncated[i]) tail.emplace_back(i, &pool.observation(s));
  }
  if (!tail.empty()) {
    std::vector<double> tmaps(tail.size() * map_in);
    std::vector<double> taux(tail.size() * aux_in);
    std::vector<double> tlogits(tail.size() * actions_n);
    std::vector<double> tvalues(tail.size());
    for (std::size_t k = 0; k < tail.size(); ++k)
      fill_row(*tail[k].second, tmaps.data() + k * map_in, taux.data() + k * aux_in);
    net.forward(params, tw, tmaps.data(), taux.data(), static_cast<int>(tail.size()),
                tlogits.data(), tvalues.data(), tp);
    for (std::size_t k = 0; k < tail.size(); ++k) buf.next_values[tail[k].first] = tvalues[k];
  }
  // mid-rollout non-terminal boundaries: the next stored value
  for (int s = 0; s < slots; ++s)
    for (int t = 0; t + 1 < rollout_len; ++t) {
      std::size_t i = buf.at(s, t);
      if (!buf.terminated[i] && !buf.truncated[i]) buf.next_values[i] = buf.values[buf.at(s, t + 1)];
    }

  if (stats) {
    for (std::size_t i = 0; i < buf.size(); ++i) stats->level_transitions[buf.levels[i]] += 1;
    stats->episodes_ended = episodes;
    stats->mean_episode_rho = episodes > 0 ? rho_sum / episodes : 0.0;
  }
  return buf;
}

void compute_gae_sequence(std::span<const double> rewards, std::span<const double> values,
                          std::span<const double> next_values,
                          std::span<const std::uint8_t> terminated, double gamma, double lambda,
                          std::span<double> adv, std::span<double> ret) {
  const std::size_t n = rewards.size();
  double acc = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    double live = terminated[k] ? 0.0 : 1.0;
    double delta = rewards[k] + gamma * next_values[k] * live - values[k];
    acc = delta + gamma * lambda * live * acc;
    adv[k] = acc;
    ret[k] = acc + values[k];
  }
}

void compute_gae(const RolloutBuffer& buf, double gamma, double lambda, std::vector<double>& adv,
                 std::vector<double>& ret) {
  adv.assign(buf.size(), 0.0);
  ret.assign(buf.size(), 0.0);
  for (int s = 0; s < buf.slots; ++s) {
    std::size_t off = buf.at(s, 0);
    compute_gae_sequence({&buf.rewards[off], static_cast<std::size_t>(buf.len)},
                         {&buf.values[off], static_cast<std::size_t>(buf.len)},
                         {&buf.next_values[off], static_cast<std::size_t>(buf.len)},
                         {&buf.terminated[off], static_cast<std::size_t>(buf.len)}, gamma, lambda,
                         {&adv[off], static_cast<std::size_t>(buf.len)},
                         {&ret[off], static_cast<std::size_t>(buf.len)});
  }
}

UpdateStats ppo_update(const Net& net, Params& params, AdamState& adam, const PpoConfig& cfg,
                       const RolloutBuffer& buf, const std::vector<double>& advantages,
                       const std::vector<double>& returns, Rng& update_rng, ThreadPool& tp) {
  cfg.validate();
  const std::size_t n = buf.size();
  const int actions_n = net.config().actions;
  const int map_in = 2 * net.config().in_h * net.config().in_w;
  const int aux_in = net.config().aux_dim;

  // whole-buffer advantage normalization
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) adv[i] = (advantages[i] - mean) * inv_std;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateStats total;
  std::size_t total_rows = 0;
  int batches = 0;

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  Params grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    update_rng.shuffle(order);
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      std::size_t lo = mb * n / cfg.minibatches;
      std::size_t hi = (mb + 1) * n / cfg.minibatches;
      std::size_t base_rows = hi - lo;
      if (base_rows == 0) continue;
      int per = cfg.augment ? 2 : 1;
      std::size_t rows = base_rows * per;

      std::vector<double> maps(rows * map_in);
      std::vector<double> aux(rows * aux_in);
      std::vector<int> act(rows);
      std::vector<double> old_logp(rows), adv_row(rows), ret_row(rows);
      for (std::size_t r = 0; r < base_rows; ++r) {
        std::size_t src = order[lo + r];
        std::size_t dst = r * per;
        fill_row(buf.obs[src], maps.data() + dst * map_in, aux.data() + dst * aux_in);
        act[dst] = buf.actions[src];
        old_logp[dst] = buf.logp[src];
        adv_row[dst] = adv[src];
        ret_row[dst] = returns[src];
        if (cfg.augment) {
          int k = 1 + update_rng.uniform_int(3);
          Observation rot = rotate_observation(buf.obs[src], k);
          fill_row(rot, maps.data() + (dst + 1) * map_in, aux.data() + (dst + 1) * aux_in);
          act[dst + 1] = buf.actions[src];
          old_logp[dst + 1] = buf.logp[src];
          adv_row[dst + 1] = adv[src];
          ret_row[dst + 1] = returns[src];
        }
      }

      std::vector<double> st_pol(rows), st_val(rows), st_ent(rows), st_clip(rows), st_kl(rows);
      double inv_rows = 1.0 / static_cast<double>(rows);

      net.backprop(
          params, maps.data(), aux.data(), static_cast<int>(rows),
          [&](int row, const double* logits, double value, double* dlogits, double* dvalue) {
            double p[8];
            softmax(logits, actions_n, p);
            int a = act[row];
            double logp = log_prob_from_logits(logits, actions_n, a);
            double ratio = std::exp(logp - old_logp[row]);
            double a_hat = adv_row[row];
            double surr1 = ratio * a_hat;
            double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
            double surr2 = clipped * a_hat;
            double ent = entropy_from_logits(logits, actions_n);

            st_pol[row] = -std::min(surr1, surr2);
            st_ent[row] = ent;
            st_clip[row] = std::abs(ratio - 1.0) > cfg.clip ? 1.0 : 0.0;
            st_kl[row] = (ratio - 1.0) - (logp - old_logp[row]);
            double verr = value - ret_row[row];
            st_val[row] = verr * verr;

            if (surr1 <= surr2) {
              double coef = -a_hat * ratio * inv_rows;
              for (int i = 0; i < actions_n; ++i)
                dlogits[i] = coef * ((i == a ? 1.0 : 0.0) - p[i]);
            } else {
              for (int i = 0; i < actions_n; ++i) dlogits[i] = 0.0;
            }
            for (int i = 0; i < actions_n; ++i) {
              double lp = std::log(p[i]);
              dlogits[i] += cfg.entropy_coef * p[i] * (lp + ent) * inv_rows;
            }
            *dvalue = cfg.value_coef * 2.0 * verr * inv_rows;
          },
          grads, tp);

      double pol = 0, val = 0, ent = 0, clip_frac = 0, kl = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        pol += st_pol[r];
        val += st_val[r];
        ent += st_ent[r];
        clip_frac += st_clip[r];
        kl += st_kl[r];
      }
      double loss = pol * inv_rows + cfg.value_coef * val * inv_rows - cfg.entropy_coef * ent * inv_rows;
      if (!std::isfinite(loss))
        throw RuntimeFailure("ppo: non-finite loss (policy " + fmt_double(pol * inv_rows) +
                             ", value " + fmt_double(val * inv_rows) + ", entropy " +
                             fmt_double(ent * inv_rows) + ")");

      double gnorm = grad_l2_norm(grads);
      if (!std::isfinite(gnorm)) throw RuntimeFailure("ppo: non-finite gradient norm");
      if (gnorm > cfg.max_grad_norm) scale_grads(grads, cfg.max_grad_norm / gnorm);
      adam_step(params, grads, adam, adam_cfg);

      total.policy_loss += pol;
      total.value_loss += val;
      total.entropy += ent;
      total.clip_fraction += clip_frac;
      total.approx_kl += kl;
      total.grad_norm += gnorm;
      total_rows += rows;
      ++batches;
    }
  }

  if (total_rows > 0) {
    double inv = 1.0 / static_cast<double>(total_rows);
    total.policy_loss *= inv;
    total.value_loss *= inv;
    total.entropy *= inv;
    total.clip_fraction *= inv;
    total.approx_kl *= inv;
    total.grad_norm /= static_cast<double>(batches);
  }
  return total;
}

std::vector<double> policy_log_probs(const Net& net, const Params& params,
                                     const RolloutBuffer& buf, ThreadPool& tp) {
  const int actions_n = net.config().actions;
  const int map_in = 2 * net.config().in_h * net.config().in_w;
  const int aux_in = net.config().aux_dim;
  const std::size_t n = buf.size();
  std::vector<double> maps(n * map_in), aux(n * aux_in);
  for (std::size_t i = 0; i < n; ++i)
    fill_row(buf.obs[i], maps.data() + i * map_in, aux.data() + i * aux_in);
  std::vector<double> logits(n * actions_n), values(n), out(n);
  net.forward(params, maps.data(), aux.data(), static_cast<int>(n), logits.data(), values.data(),
              tp);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = log_prob_from_logits(logits.data() + i * actions_n, actions_n, buf.actions[i]);
  return out;
}

}  // namespace gx
