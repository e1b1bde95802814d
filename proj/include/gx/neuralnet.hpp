#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gx/rng.hpp"
#include "gx/threadpool.hpp"

namespace gx {

// Actor-critic over the two map channels plus the auxiliary vector:
//   maps (2 x H x W) -> conv 16@3x3/s2 -> conv 32@3x3/s2 -> fc 128
//   aux  (aux_dim)   -> fc 32
//   concat 160 -> fc 128 -> policy logits (actions) and value (1)
// ReLU activations, double precision throughout.
struct NetConfig {
  int in_h = 24;
  int in_w = 24;
  int aux_dim = 32;
  int actions = 3;

  void validate() const;
};

struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::vector<double> w;

  std::int64_t size() const { return static_cast<std::int64_t>(w.size()); }
};

struct Params {
  std::vector<ParamBlock> blocks;

  ParamBlock& block(const std::string& name);
  const ParamBlock& block(const std::string& name) const;
  std::int64_t param_count() const;
};

Params zero_like(const Params& p);

// Orthogonal init (gain sqrt(2) on hidden layers, 0.01 on the policy head,
// 1.0 on the value head), zero biases. Used by tests directly too.
void orthogonal_fill(std::vector<double>& w, int rows, int cols, double gain, Rng& rng);

// Column-major copies of the weight matrices, rebuilt whenever the params
// change. Callers doing many forward passes against frozen params (greedy
// evaluation, rollout collection) prepare once instead of per call.
struct PreparedWeights {
  std::vector<double> w1, w2, wm, wa, wt, wp, wv;
};

class Net {
 public:
  explicit Net(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  Params init(Rng& rng) const;

  PreparedWeights prepare(const Params& p) const;

  // maps: n x (2*in_h*in_w), per sample the local plane then the global one.
  // aux: n x aux_dim. logits: n x actions. values: n.
  // Work is split into 16 fixed chunks, so results do not depend on the
  // thread pool size.
  void forward(const Params& p, const double* maps, const double* aux, int n, double* logits,
               double* values, ThreadPool& pool) const;

  // same, with the weight transposes already built (tw = prepare(p))
  void forward(const Params& p, const PreparedWeights& tw, const double* maps, const double* aux,
               int n, double* logits, double* values, ThreadPool& pool) const;

  // Called once per row after the forward pass with that row's outputs;
  // writes the loss cotangents to dlogits (actions entries) and dvalue.
  // Rows are independent, so implementations may record per-row stats into
  // arrays indexed by `row` without locking.
  using CotangentFn =
      std::function<void(int row, const double* logits, double value, double* dlogits,
                         double* dvalue)>;

  // Forward plus backward in one pass. Parameter gradients land in `grads`
  // (reset here); chunk partials are folded in chunk order so the result is
  // independent of the thread count.
  void backprop(const Params& p, const double* maps, const double* aux, int n,
                const CotangentFn& fn, Params& grads, ThreadPool& pool) const;

  int conv1_h() const { return h1_; }
  int conv1_w() const { return w1_; }
  int conv2_h() const { return h2_; }
  int conv2_w() const { return w2_; }
  int flat_dim() const { return 32 * h2_ * w2_; }

 private:
  NetConfig cfg_;
  int h1_, w1_, h2_, w2_;
};

// stable softmax helpers over one logit row
void softmax(const double* logits, int n, double* probs);
double log_prob_from_logits(const double* logits, int n, int idx);
double entropy_from_logits(const double* logits, int n);
int argmax(const double* v, int n);  // ties resolve to the lowest index
int sample_from_logits(const double* logits, int n, Rng& rng);

struct AdamConfig {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t t = 0;
  std::vector<std::vector<double>> m, v;
};

AdamState make_adam_state(const Params& p);
void adam_step(Params& p, const Params& grads, AdamState& st, const AdamConfig& cfg);

double grad_l2_norm(const Params& grads);
void scale_grads(Params& grads, double s);

// Binary container, magic "GXNET v1". Round-trips bitwise.
void save_params(const Params& p, const std::string& path);
Params load_params(const std::string& path);

}  // namespace gx
