#include "gx/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "gx/common.hpp"

namespace gx {

void NetConfig::validate() const {
  if (in_h < 2 || in_w < 2) throw UsageError("net: map input must be at least 2x2");
  if (aux_dim < 1) throw UsageError("net: aux_dim must be positive");
  if (actions < 2 || actions > 8) throw UsageError("net: actions must be in [2,8]");
}

ParamBlock& Params::block(const std::string& name) {
  for (auto& b : blocks)
    if (b.name == name) return b;
  throw RuntimeFailure("no param block named " + name);
}

const ParamBlock& Params::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw RuntimeFailure("no param block named " + name);
}

std::int64_t Params::param_count() const {
  std::int64_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

Params zero_like(const Params& p) {
  Params out;
  out.blocks.reserve(p.blocks.size());
  for (const auto& b : p.blocks)
    out.blocks.push_back({b.name, b.shape, std::vector<double>(b.w.size(), 0.0)});
  return out;
}

void orthogonal_fill(std::vector<double>& w, int rows, int cols, double gain, Rng& rng) {
  // QR of a tall gaussian; transpose back if the matrix is wide. Column signs
  // fixed by the sign of R's diagonal so the result is a pure function of the
  // draws.
  int m = std::max(rows, cols), n = std::min(rows, cols);
  std::vector<double> a(static_cast<std::size_t>(m) * n);
  for (auto& x : a) x = rng.normal();

  std::vector<std::vector<double>> hh(n);
  std::vector<double> rdiag(n);
  for (int k = 0; k < n; ++k) {
    double norm = 0;
    for (int i = k; i < m; ++i) norm += a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(i) * n + k];
    norm = std::sqrt(norm);
    double akk = a[static_cast<std::size_t>(k) * n + k];
    double alpha = akk >= 0 ? -norm : norm;
    std::vector<double> v(m, 0.0);
    for (int i = k; i < m; ++i) v[i] = a[static_cast<std::size_t>(i) * n + k];
    v[k] -= alpha;
    double v2 = 0;
    for (int i = k; i < m; ++i) v2 += v[i] * v[i];
    if (v2 > 0) {
      for (int j = k; j < n; ++j) {
        double dot = 0;
        for (int i = k; i < m; ++i) dot += v[i] * a[static_cast<std::size_t>(i) * n + j];
        double f = 2.0 * dot / v2;
        for (int i = k; i < m; ++i) a[static_cast<std::size_t>(i) * n + j] -= f * v[i];
      }
    }
    hh[k] = std::move(v);
    rdiag[k] = a[static_cast<std::size_t>(k) * n + k];
  }

  std::vector<double> q(static_cast<std::size_t>(m) * n, 0.0);
  for (int j = 0; j < n; ++j) q[static_cast<std::size_t>(j) * n + j] = 1.0;
  for (int k = n - 1; k >= 0; --k) {
    const auto& v = hh[k];
    double v2 = 0;
    for (int i = k; i < m; ++i) v2 += v[i] * v[i];
    if (v2 == 0) continue;
    for (int j = 0; j < n; ++j) {
      double dot = 0;
      for (int i = k; i < m; ++i) dot += v[i] * q[static_cast<std::size_t>(i) * n + j];
      double f = 2.0 * dot / v2;
      for (int i = k; i < m; ++i) q[static_cast<std::size_t>(i) * n + j] -= f * v[i];
    }
  }
  for (int j = 0; j < n; ++j)
    if (rdiag[j] < 0)
      for (int i = 0; i < m; ++i) q[static_cast<std::size_t>(i) * n + j] *= -1.0;

  w.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  if (rows >= cols) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        w[static_cast<std::size_t>(i) * cols + j] = gain * q[static_cast<std::size_t>(i) * n + j];
  } else {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        w[static_cast<std::size_t>(i) * cols + j] = gain * q[static_cast<std::size_t>(j) * n + i];
  }
}

namespace {

constexpr int kChunks = 16;

int conv_out(int n) { return (n - 1) / 2 + 1; }  // kernel 3, stride 2, pad 1

// C[M x N] = A[M x K] * B[K x N] (+ bias per column). Plain axpy form: no
// reductions, so it vectorizes under strict FP semantics, and zero skipping
// pays off right after a ReLU.
void gemm_nn(int M, int N, int K, const double* A, const double* B, const double* bias,
             double* C) {
  for (int m = 0; m < M; ++m) {
    double* c = C + static_cast<std::size_t>(m) * N;
    if (bias)
      std::memcpy(c, bias, sizeof(double) * N);
    else
      std::memset(c, 0, sizeof(double) * N);
    const double* a = A + static_cast<std::size_t>(m) * K;
    for (int k = 0; k < K; ++k) {
      double s = a[k];
      if (s == 0.0) continue;
      const double* b = B + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += s * b[j];
    }
  }
}

// dW[N x K] += G^T X for G[M x N], X[M x K]
void wgrad_acc(int M, int N, int K, const double* G, const double* X, double* dW) {
  for (int m = 0; m < M; ++m) {
    const double* g = G + static_cast<std::size_t>(m) * N;
    const double* x = X + static_cast<std::size_t>(m) * K;
    for (int n = 0; n < N; ++n) {
      double s = g[n];
      if (s == 0.0) continue;
      double* w = dW + static_cast<std::size_t>(n) * K;
      for (int k = 0; k < K; ++k) w[k] += s * x[k];
    }
  }
}

void colsum_acc(int M, int N, const double* G, double* out) {
  for (int m = 0; m < M; ++m) {
    const double* g = G + static_cast<std::size_t>(m) * N;
    for (int n = 0; n < N; ++n) out[n] += g[n];
  }
}

std::vector<double> transposed(const std::vector<double>& w, int rows, int cols) {
  std::vector<double> t(w.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      t[static_cast<std::size_t>(c) * rows + r] = w[static_cast<std::size_t>(r) * cols + c];
  return t;
}

void relu(const std::vector<double>& z, std::vector<double>& a) {
  a.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_bwd(const std::vector<double>& z, std::vector<double>& d) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] <= 0.0) d[i] = 0.0;
}

// patch matrix for a 3x3/stride-2/pad-1 conv; input plane-major [ch][h][w]
void im2col_planes(const double* in, int ch_in, int h_in, int w_in, int h_out, int w_out,
                   double* p) {
  int kk = ch_in * 9;
  for (int i = 0; i < h_out; ++i) {
    for (int j = 0; j < w_out; ++j) {
      double* row = p + (static_cast<std::size_t>(i) * w_out + j) * kk;
      for (int ch = 0; ch < ch_in; ++ch) {
        const double* plane = in + static_cast<std::size_t>(ch) * h_in * w_in;
        for (int u = 0; u < 3; ++u) {
          int y = 2 * i + u - 1;
          for (int v = 0; v < 3; ++v) {
            int x = 2 * j + v - 1;
            row[ch * 9 + u * 3 + v] =
                (y < 0 || y >= h_in || x < 0 || x >= w_in)
                    ? 0.0
                    : plane[static_cast<std::size_t>(y) * w_in + x];
          }
        }
      }
    }
  }
}

// same, input position-major [(y*w_in+x)][ch]
void im2col_positions(const double* in, int ch_in, int h_in, int w_in, int h_out, int w_out,
                      double* p) {
  int kk = ch_in * 9;
  for (int i = 0; i < h_out; ++i) {
    for (int j = 0; j < w_out; ++j) {
      double* row = p + (static_cast<std::size_t>(i) * w_out + j) * kk;
      for (int u = 0; u < 3; ++u) {
        int y = 2 * i + u - 1;
        for (int v = 0; v < 3; ++v) {
          int x = 2 * j + v - 1;
          if (y < 0 || y >= h_in || x < 0 || x >= w_in) {
            for (int ch = 0; ch < ch_in; ++ch) row[ch * 9 + u * 3 + v] = 0.0;
          } else {
            const double* cell = in + (static_cast<std::size_t>(y) * w_in + x) * ch_in;
            for (int ch = 0; ch < ch_in; ++ch) row[ch * 9 + u * 3 + v] = cell[ch];
          }
        }
      }
    }
  }
}

// adjoint of im2col_positions: scatter-add patch grads back onto the input
void col2im_positions(const double* dp, int ch_in, int h_in, int w_in, int h_out, int w_out,
                      double* din) {
  int kk = ch_in * 9;
  for (int i = 0; i < h_out; ++i) {
    for (int j = 0; j < w_out; ++j) {
      const double* row = dp + (static_cast<std::size_t>(i) * w_out + j) * kk;
      for (int u = 0; u < 3; ++u) {
        int y = 2 * i + u - 1;
        if (y < 0 || y >= h_in) continue;
        for (int v = 0; v < 3; ++v) {
          int x = 2 * j + v - 1;
          if (x < 0 || x >= w_in) continue;
          double* cell = din + (static_cast<std::size_t>(y) * w_in + x) * ch_in;
          for (int ch = 0; ch < ch_in; ++ch) cell[ch] += row[ch * 9 + u * 3 + v];
        }
      }
    }
  }
}

struct Dims {
  int in_h, in_w, h1, w1, h2, w2, flat, aux, actions;
  int pos1() const { return h1 * w1; }
  int pos2() const { return h2 * w2; }
  int map_in() const { return 2 * in_h * in_w; }
};

struct Acts {
  std::vector<double> p1, z1, a1, p2, z2, a2, flat, zm, am, za, aa, cat, zt, at;
};

// forward for samples [s0,s1); logits/values indexed globally
void run_forward(const Dims& d, const Params& p, const PreparedWeights& tw, const double* maps,
                 const double* aux, int s0, int s1, Acts& w, double* logits, double* values) {
  int nc = s1 - s0;
  int m1 = nc * d.pos1(), m2 = nc * d.pos2();
  w.p1.resize(static_cast<std::size_t>(m1) * 18);
  for (int s = 0; s < nc; ++s)
    im2col_planes(maps + static_cast<std::size_t>(s0 + s) * d.map_in(), 2, d.in_h, d.in_w, d.h1,
                  d.w1, w.p1.data() + static_cast<std::size_t>(s) * d.pos1() * 18);
  w.z1.resize(static_cast<std::size_t>(m1) * 16);
  gemm_nn(m1, 16, 18, w.p1.data(), tw.w1.data(), p.blocks[1].w.data(), w.z1.data());
  relu(w.z1, w.a1);

  w.p2.resize(static_cast<std::size_t>(m2) * 144);
  for (int s = 0; s < nc; ++s)
    im2col_positions(w.a1.data() + static_cast<std::size_t>(s) * d.pos1() * 16, 16, d.h1, d.w1,
                     d.h2, d.w2, w.p2.data() + static_cast<std::size_t>(s) * d.pos2() * 144);
  w.z2.resize(static_cast<std::size_t>(m2) * 32);
  gemm_nn(m2, 32, 144, w.p2.data(), tw.w2.data(), p.blocks[3].w.data(), w.z2.data());
  relu(w.z2, w.a2);

  w.flat.resize(static_cast<std::size_t>(nc) * d.flat);
  for (int s = 0; s < nc; ++s) {
    const double* src = w.a2.data() + static_cast<std::size_t>(s) * d.pos2() * 32;
    double* dst = w.flat.data() + static_cast<std::size_t>(s) * d.flat;
    for (int pos = 0; pos < d.pos2(); ++pos)
      for (int ch = 0; ch < 32; ++ch) dst[ch * d.pos2() + pos] = src[pos * 32 + ch];
  }

  w.zm.resize(static_cast<std::size_t>(nc) * 128);
  gemm_nn(nc, 128, d.flat, w.flat.data(), tw.wm.data(), p.blocks[5].w.data(), w.zm.data());
  relu(w.zm, w.am);

  w.za.resize(static_cast<std::size_t>(nc) * 32);
  gemm_nn(nc, 32, d.aux, aux + static_cast<std::size_t>(s0) * d.aux, tw.wa.data(),
          p.blocks[7].w.data(), w.za.data());
  relu(w.za, w.aa);

  w.cat.resize(static_cast<std::size_t>(nc) * 160);
  for (int s = 0; s < nc; ++s) {
    std::memcpy(w.cat.data() + static_cast<std::size_t>(s) * 160,
                w.am.data() + static_cast<std::size_t>(s) * 128, sizeof(double) * 128);
    std::memcpy(w.cat.data() + static_cast<std::size_t>(s) * 160 + 128,
                w.aa.data() + static_cast<std::size_t>(s) * 32, sizeof(double) * 32);
  }

  w.zt.resize(static_cast<std::size_t>(nc) * 128);
  gemm_nn(nc, 128, 160, w.cat.data(), tw.wt.data(), p.blocks[9].w.data(), w.zt.data());
  relu(w.zt, w.at);

  gemm_nn(nc, d.actions, 128, w.at.data(), tw.wp.data(), p.blocks[11].w.data(),
          logits + static_cast<std::size_t>(s0) * d.actions);
  gemm_nn(nc, 1, 128, w.at.data(), tw.wv.data(), p.blocks[13].w.data(), values + s0);
}

void run_backward(const Dims& d, const Params& p, const double* aux, int s0, int s1,
                  const double* dlogits, const double* dvalues, const Acts& w, Params& g) {
  int nc = s1 - s0;
  int m1 = nc * d.pos1(), m2 = nc * d.pos2();
  const double* dlg = dlogits + static_cast<std::size_t>(s0) * d.actions;
  const double* dvl = dvalues + s0;

  // heads
  wgrad_acc(nc, d.actions, 128, dlg, w.at.data(), g.blocks[10].w.data());
  colsum_acc(nc, d.actions, dlg, g.blocks[11].w.data());
  wgrad_acc(nc, 1, 128, dvl, w.at.data(), g.blocks[12].w.data());
  colsum_acc(nc, 1, dvl, g.blocks[13].w.data());

  std::vector<double> dat(static_cast<std::size_t>(nc) * 128);
  gemm_nn(nc, 128, d.actions, dlg, p.blocks[10].w.data(), nullptr, dat.data());
  for (int s = 0; s < nc; ++s) {
    double dv = dvl[s];
    if (dv == 0.0) continue;
    const double* wv = p.blocks[12].w.data();
    double* row = dat.data() + static_cast<std::size_t>(s) * 128;
    for (int j = 0; j < 128; ++j) row[j] += dv * wv[j];
  }

  // trunk
  relu_bwd(w.zt, dat);
  wgrad_acc(nc, 128, 160, dat.data(), w.cat.data(), g.blocks[8].w.data());
  colsum_acc(nc, 128, dat.data(), g.blocks[9].w.data());
  std::vector<double> dcat(static_cast<std::size_t>(nc) * 160);
  gemm_nn(nc, 160, 128, dat.data(), p.blocks[8].w.data(), nullptr, dcat.data());

  std::vector<double> dam(static_cast<std::size_t>(nc) * 128), daa(static_cast<std::size_t>(nc) * 32);
  for (int s = 0; s < nc; ++s) {
    std::memcpy(dam.data() + static_cast<std::size_t>(s) * 128,
                dcat.data() + static_cast<std::size_t>(s) * 160, sizeof(double) * 128);
    std::memcpy(daa.data() + static_cast<std::size_t>(s) * 32,
                dcat.data() + static_cast<std::size_t>(s) * 160 + 128, sizeof(double) * 32);
  }

  // aux branch
  relu_bwd(w.za, daa);
  wgrad_acc(nc, 32, d.aux, daa.data(), aux + static_cast<std::size_t>(s0) * d.aux,
            g.blocks[6].w.data());
  colsum_acc(nc, 32, daa.data(), g.blocks[7].w.data());

  // map branch
  relu_bwd(w.zm, dam);
  wgrad_acc(nc, 128, d.flat, dam.data(), w.flat.data(), g.blocks[4].w.data());
  colsum_acc(nc, 128, dam.data(), g.blocks[5].w.data());
  std::vector<double> dflat(static_cast<std::size_t>(nc) * d.flat);
  gemm_nn(nc, d.flat, 128, dam.data(), p.blocks[4].w.data(), nullptr, dflat.data());

  std::vector<double> da2(static_cast<std::size_t>(m2) * 32);
  for (int s = 0; s < nc; ++s) {
    const double* src = dflat.data() + static_cast<std::size_t>(s) * d.flat;
    double* dst = da2.data() + static_cast<std::size_t>(s) * d.pos2() * 32;
    for (int pos = 0; pos < d.pos2(); ++pos)
      for (int ch = 0; ch < 32; ++ch) dst[pos * 32 + ch] = src[ch * d.pos2() + pos];
  }

  relu_bwd(w.z2, da2);
  wgrad_acc(m2, 32, 144, da2.data(), w.p2.data(), g.blocks[2].w.data());
  colsum_acc(m2, 32, da2.data(), g.blocks[3].w.data());
  std::vector<double> dp2(static_cast<std::size_t>(m2) * 144);
  gemm_nn(m2, 144, 32, da2.data(), p.blocks[2].w.data(), nullptr, dp2.data());

  std::vector<double> da1(static_cast<std::size_t>(m1) * 16, 0.0);
  for (int s = 0; s < nc; ++s)
    col2im_positions(dp2.data() + static_cast<std::size_t>(s) * d.pos2() * 144, 16, d.h1, d.w1,
                     d.h2, d.w2, da1.data() + static_cast<std::size_t>(s) * d.pos1() * 16);

  relu_bwd(w.z1, da1);
  wgrad_acc(m1, 16, 18, da1.data(), w.p1.data(), g.blocks[0].w.data());
  colsum_acc(m1, 16, da1.data(), g.blocks[1].w.data());
}

}  // namespace

Net::Net(NetConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  h1_ = conv_out(cfg_.in_h);
  w1_ = conv_out(cfg_.in_w);
  h2_ = conv_out(h1_);
  w2_ = conv_out(w1_);
}

Params Net::init(Rng& rng) const {
  Params p;
  auto weight = [&](const std::string& name, std::vector<int> shape, double gain) {
    ParamBlock b;
    b.name = name;
    b.shape = std::move(shape);
    int rows = b.shape[0];
    int cols = 1;
    for (std::size_t i = 1; i < b.shape.size(); ++i) cols *= b.shape[i];
    orthogonal_fill(b.w, rows, cols, gain, rng);
    p.blocks.push_back(std::move(b));
  };
  auto bias = [&](const std::string& name, int n) {
    p.blocks.push_back({name, {n}, std::vector<double>(n, 0.0)});
  };
  double g = std::sqrt(2.0);
  weight("conv1.w", {16, 2, 3, 3}, g);
  bias("conv1.b", 16);
  weight("conv2.w", {32, 16, 3, 3}, g);
  bias("conv2.b", 32);
  weight("map_fc.w", {128, flat_dim()}, g);
  bias("map_fc.b", 128);
  weight("aux_fc.w", {32, cfg_.aux_dim}, g);
  bias("aux_fc.b", 32);
  weight("trunk_fc.w", {128, 160}, g);
  bias("trunk_fc.b", 128);
  weight("policy.w", {cfg_.actions, 128}, 0.01);
  bias("policy.b", cfg_.actions);
  weight("value.w", {1, 128}, 1.0);
  bias("value.b", 1);
  return p;
}

PreparedWeights Net::prepare(const Params& p) const {
  PreparedWeights tw;
  tw.w1 = transposed(p.blocks[0].w, 16, 18);
  tw.w2 = transposed(p.blocks[2].w, 32, 144);
  tw.wm = transposed(p.blocks[4].w, 128, flat_dim());
  tw.wa = transposed(p.blocks[6].w, 32, cfg_.aux_dim);
  tw.wt = transposed(p.blocks[8].w, 128, 160);
  tw.wp = transposed(p.blocks[10].w, cfg_.actions, 128);
  tw.wv = transposed(p.blocks[12].w, 1, 128);
  return tw;
}

void Net::forward(const Params& p, const double* maps, const double* aux, int n, double* logits,
                  double* values, ThreadPool& pool) const {
  forward(p, prepare(p), maps, aux, n, logits, values, pool);
}

void Net::forward(const Params& p, const PreparedWeights& tw, const double* maps,
                  const double* aux, int n, double* logits, double* values,
                  ThreadPool& pool) const {
  Dims d{cfg_.in_h, cfg_.in_w, h1_, w1_, h2_, w2_, flat_dim(), cfg_.aux_dim, cfg_.actions};
  pool.for_chunks(n, kChunks, [&](int, std::int64_t lo, std::int64_t hi) {
    Acts w;
    run_forward(d, p, tw, maps, aux, static_cast<int>(lo), static_cast<int>(hi), w, logits,
                values);
  });
}

void Net::backprop(const Params& p, const double* maps, const double* aux, int n,
                   const CotangentFn& fn, Params& grads, ThreadPool& pool) const {
  Dims d{cfg_.in_h, cfg_.in_w, h1_, w1_, h2_, w2_, flat_dim(), cfg_.aux_dim, cfg_.actions};
  PreparedWeights tw = prepare(p);
  int chunks = static_cast<int>(std::min<std::int64_t>(kChunks, n));
  std::vector<Params> partial;
  partial.reserve(chunks);
  for (int c = 0; c < chunks; ++c) partial.push_back(zero_like(p));
  std::vector<double> logits_buf(static_cast<std::size_t>(n) * cfg_.actions);
  std::vector<double> values_buf(n);
  std::vector<double> dlogits(static_cast<std::size_t>(n) * cfg_.actions, 0.0);
  std::vector<double> dvalues(static_cast<std::size_t>(n), 0.0);
  pool.for_chunks(n, chunks, [&](int c, std::int64_t lo, std::int64_t hi) {
    Acts w;
    run_forward(d, p, tw, maps, aux, static_cast<int>(lo), static_cast<int>(hi), w,
                logits_buf.data(), values_buf.data());
    for (int r = static_cast<int>(lo); r < static_cast<int>(hi); ++r)
      fn(r, logits_buf.data() + static_cast<std::size_t>(r) * cfg_.actions, values_buf[r],
         dlogits.data() + static_cast<std::size_t>(r) * cfg_.actions, &dvalues[r]);
    run_backward(d, p, aux, static_cast<int>(lo), static_cast<int>(hi), dlogits.data(),
                 dvalues.data(), w, partial[c]);
  });
  grads = zero_like(p);
  for (int c = 0; c < chunks; ++c)
    for (std::size_t b = 0; b < grads.blocks.size(); ++b) {
      const auto& src = partial[c].blocks[b].w;
      auto& dst = grads.blocks[b].w;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

void softmax(const double* logits, int n, double* probs) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0;
  for (int i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    z += probs[i];
  }
  for (int i = 0; i < n; ++i) probs[i] /= z;
}

double log_prob_from_logits(const double* logits, int n, int idx) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0;
  for (int i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  return logits[idx] - mx - std::log(z);
}

double entropy_from_logits(const double* logits, int n) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0;
  for (int i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  double h = 0;
  for (int i = 0; i < n; ++i) {
    double lp = logits[i] - mx - std::log(z);
    h -= std::exp(lp) * lp;
  }
  return h;
}

int argmax(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int sample_from_logits(const double* logits, int n, Rng& rng) {
  std::vector<double> p(n);
  softmax(logits, n, p.data());
  double u = rng.uniform01();
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return n - 1;
}

AdamState make_adam_state(const Params& p) {
  AdamState st;
  for (const auto& b : p.blocks) {
    st.m.emplace_back(b.w.size(), 0.0);
    st.v.emplace_back(b.w.size(), 0.0);
  }
  return st;
}

void adam_step(Params& p, const Params& grads, AdamState& st, const AdamConfig& cfg) {
  st.t += 1;
  double b1c = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  double b2c = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    auto& w = p.blocks[b].w;
    const auto& g = grads.blocks[b].w;
    auto& m = st.m[b];
    auto& v = st.v[b];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= cfg.lr * (m[i] / b1c) / (std::sqrt(v[i] / b2c) + cfg.eps);
    }
  }
}

double grad_l2_norm(const Params& grads) {
  double s = 0;
  for (const auto& b : grads.blocks)
    for (double g : b.w) s += g * g;
  return std::sqrt(s);
}

void scale_grads(Params& grads, double s) {
  for (auto& b : grads.blocks)
    for (double& g : b.w) g *= s;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw RuntimeFailure("checkpoint: truncated file");
  return v;
}

constexpr char kMagic[] = "GXNET v1\n";

}  // namespace

void save_params(const Params& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  write_raw(out, static_cast<std::uint32_t>(p.blocks.size()));
  for (const auto& b : p.blocks) {
    write_raw(out, static_cast<std::uint16_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    write_raw(out, static_cast<std::uint8_t>(b.shape.size()));
    for (int dim : b.shape) write_raw(out, static_cast<std::int64_t>(dim));
    out.write(reinterpret_cast<const char*>(b.w.data()),
              static_cast<std::streamsize>(b.w.size() * sizeof(double)));
  }
  if (!out) throw RuntimeFailure("checkpoint: write failed for " + path);
}

Params load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw RuntimeFailure("checkpoint: bad magic in " + path);
  auto nblocks = read_raw<std::uint32_t>(in);
  Params p;
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    ParamBlock b;
    auto len = read_raw<std::uint16_t>(in);
    b.name.resize(len);
    in.read(b.name.data(), len);
    auto ndim = read_raw<std::uint8_t>(in);
    std::int64_t total = 1;
    for (int k = 0; k < ndim; ++k) {
      auto dim = read_raw<std::int64_t>(in);
      if (dim <= 0 || dim > (1 << 24)) throw RuntimeFailure("checkpoint: bad shape in " + path);
      b.shape.push_back(static_cast<int>(dim));
      total *= dim;
    }
    b.w.resize(static_cast<std::size_t>(total));
    in.read(reinterpret_cast<char*>(b.w.data()),
            static_cast<std::streamsize>(b.w.size() * sizeof(double)));
    if (!in) throw RuntimeFailure("checkpoint: truncated payload in " + path);
    p.blocks.push_back(std::move(b));
  }
  return p;
}

}  // namespace gx
