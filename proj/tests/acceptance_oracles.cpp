// Acceptance checks that run in well under a minute each: simulator speed,
// exactness of the reward arithmetic, oracle equivalence for rays, resizing
// and GAE, finite-difference gradient checks, curriculum pool composition,
// and byte-level run determinism. One verdict line per criterion; exit
// status is the number of failures. The two training-convergence criteria
// live in acceptance_training.
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gx/harness.hpp"
#include "gx/maps.hpp"
#include "test_oracles.hpp"

using namespace gx;

namespace {

int g_failures = 0;

void report(int num, bool ok, const std::string& detail) {
  std::printf("criterion %2d %s  %s\n", num, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

GroundTruthMap open_room(int h, int w) {
  GroundTruthMap m;
  m.height = h;
  m.width = w;
  m.cells.assign(static_cast<std::size_t>(h) * w, Cell::Free);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (r == 0 || c == 0 || r == h - 1 || c == w - 1)
        m.cells[static_cast<std::size_t>(r) * w + c] = Cell::Occupied;
  m.free_count = (h - 2) * (w - 2);
  return m;
}

std::string write_map(const GroundTruthMap& m, const std::string& name) {
  std::ofstream out(name);
  out << save_map(m);
  return name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int known_cells(const BeliefMap& b) {
  int n = 0;
  for (Cell c : b.cells)
    if (c != Cell::Unknown) ++n;
  return n;
}

std::uint64_t seed_with_heading(ExploreEnv& env, Heading want) {
  for (std::uint64_t s = 0;; ++s) {
    env.reset(s);
    if (env.pose().heading == want) return s;
  }
}

struct TempFiles {
  ~TempFiles() {
    std::remove("accept_cell.map");
    std::remove("accept_open30.map");
    std::remove("accept_open4.map");
    std::remove("accept_open6.map");
  }
} cleanup;

void criterion_speed() {
  EnvConfig cfg;  // level-1, default sensor and encoder
  BenchResult r = bench_run(cfg, 100000, 1);
  bool ok = r.median_ms <= 2.5 && r.total_s < 60.0;
  report(1, ok,
         fmt("simulator speed: median %.4f ms, p99 %.4f ms, %d steps in %.1f s", r.median_ms,
             r.p99_ms, r.steps, r.total_s));
}

void criterion_reward() {
  bool ok = true;
  std::string detail;

  // a cell boxed in by walls: turning reveals the last wall, so the clipped
  // exploration term (1.0) and the success bonus (+1) land in one step
  GroundTruthMap cell;
  cell.height = cell.width = 3;
  cell.cells.assign(9, Cell::Occupied);
  cell.cells[4] = Cell::Free;
  cell.free_count = 1;
  write_map(cell, "accept_cell.map");
  EnvConfig boxed;
  boxed.map_id = "accept_cell.map";
  boxed.obstacle_count = 0;
  ExploreEnv env(boxed);
  std::uint64_t north = seed_with_heading(env, Heading::North);

  env.reset(north);
  StepResult turn = env.step(Action::TurnLeft);
  ok = ok && turn.reward == 2.0 && turn.terminated && turn.succeeded;

  env.reset(north);
  StepResult crash = env.step(Action::Forward);
  ok = ok && crash.reward == -1.005 && crash.terminated && crash.collided;

  // turning back over covered ground: the idle penalty alone
  EnvConfig open;
  open.map_id = write_map(open_room(30, 30), "accept_open30.map");
  open.obstacle_count = 0;
  ExploreEnv wide(open);
  wide.reset(3);
  wide.step(Action::TurnLeft);
  StepResult idle = wide.step(Action::TurnRight);
  ok = ok && idle.reward == -0.005 && !idle.terminated && !idle.truncated;

  // random walks on level-1: every reward must equal the three-part formula
  // evaluated on independently recounted belief/observable cells
  EnvConfig lvl;  // defaults
  double max_err = 0.0;
  int steps = 0, grew = 0, clipped = 0, idled = 0;
  Rng act(7);
  for (std::uint64_t seed = 21; seed <= 40; ++seed) {
    ExploreEnv e(lvl);
    e.reset(seed);
    int observable = compute_observable_count(e.map(), lvl.lidar);
    for (int t = 0; t < 300 && !e.done(); ++t) {
      int prev = known_cells(e.belief());
      StepResult r = e.step(static_cast<Action>(act.uniform_int(kActionCount)));
      int now = known_cells(e.belief());
      double rho_prev = static_cast<double>(prev) / observable;
      double rho_now = static_cast<double>(now) / observable;
      double progress;
      if (rho_now > rho_prev) {
        progress = std::min(1.0, std::max(0.0, (rho_now * rho_now - rho_prev * rho_prev) * 10.0));
        ++grew;
        if (progress == 1.0) ++clipped;
      } else {
        progress = -0.005;
        ++idled;
      }
      double expect = progress + (r.succeeded ? 1.0 : 0.0) + (r.collided ? -1.0 : 0.0);
      max_err = std::max(max_err, std::abs(r.reward - expect));
      max_err = std::max(max_err, std::abs(r.rho - rho_now));
      ++steps;
    }
  }
  ok = ok && max_err <= 1e-12 && steps >= 100 && grew >= 1 && idled >= 1;
  report(2, ok,
         fmt("reward exactness: boxed-cell cases exact, walk max err %.2e over %d steps "
             "(%d growth, %d clipped, %d idle)",
             max_err, steps, grew, clipped, idled));
}

void criterion_rays() {
  LidarConfig lidar;  // 31 beams
  std::vector<double> offsets = beam_offsets(lidar);
  Rng rng(33);
  long rays = 0, mismatches = 0;
  for (int m = 0; m < 50; ++m) {
    GroundTruthMap map = oracle::random_map(10, 10, 0.25, 1 + rng.uniform_int(8),
                                            1 + rng.uniform_int(8), rng);
    for (int r = 0; r < map.height; ++r)
      for (int c = 0; c < map.width; ++c) {
        if (map.at(r, c) == Cell::Occupied) continue;
        for (int h = 0; h < 4; ++h) {
          Pose pose{r, c, static_cast<Heading>(h)};
          for (double off : offsets) {
            double angle = 90.0 - (heading_degrees(pose.heading) + off);
            RayHit got = cast_ray(map, pose, angle, lidar.max_range);
            oracle::RayResult want = oracle::slab_ray(map, pose, angle, lidar.max_range);
            bool same = got.visited == want.visited && got.hit == want.hit &&
                        std::abs(got.distance - want.distance) <= 1e-9 &&
                        (!got.hit || (got.hit_row == want.hit_row && got.hit_col == want.hit_col));
            if (!same) ++mismatches;
            ++rays;
          }
        }
      }
  }
  report(3, mismatches == 0,
         fmt("ray casting vs slab oracle: %ld mismatches over %ld rays on 50 maps", mismatches,
             rays));
}

void criterion_resize() {
  Rng rng(44);
  int exact = 0;
  const int cases = 200;
  for (int t = 0; t < cases; ++t) {
    int h = 1 + rng.uniform_int(40), w = 1 + rng.uniform_int(40);
    std::vector<double> in(static_cast<std::size_t>(h) * w);
    for (double& v : in) v = rng.uniform01();
    std::vector<double> out = nearest_resize(in, h, w, 24, 24);
    bool same = out.size() == 24u * 24u;
    for (int i = 0; i < 24 && same; ++i)
      for (int j = 0; j < 24 && same; ++j) {
        int si = static_cast<int>(std::floor(i * static_cast<double>(h) / 24.0));
        int sj = static_cast<int>(std::floor(j * static_cast<double>(w) / 24.0));
        same = out[static_cast<std::size_t>(i) * 24 + j] ==
               in[static_cast<std::size_t>(si) * w + sj];
      }
    if (same) ++exact;
  }
  report(4, exact == cases, fmt("nearest resize vs index oracle: %d/%d cases bit-exact", exact,
                                cases));
}

void criterion_gradients() {
  Net net(net_config_for(EnvConfig{}));
  ThreadPool tp(1);
  const int n = 2;
  const int map_dim = 2 * 24 * 24, aux_dim = 32, actions = 3;
  double max_rel = 0.0;
  const double eps = 1e-5;

  for (int draw = 0; draw < 10; ++draw) {
    Rng pr(100 + draw);
    Params params = net.init(pr);
    Rng ir(200 + draw);
    std::vector<double> maps(n * map_dim), aux(n * aux_dim);
    for (double& v : maps) v = ir.uniform01();
    for (double& v : aux) v = ir.uniform01();
    std::vector<double> cl(n * actions), cv(n);
    for (double& v : cl) v = ir.normal();
    for (double& v : cv) v = ir.normal();

    auto loss = [&](const Params& p) {
      std::vector<double> logits(n * actions), values(n);
      net.forward(p, maps.data(), aux.data(), n, logits.data(), values.data(), tp);
      double L = 0.0;
      for (int r = 0; r < n; ++r) {
        for (int a = 0; a < actions; ++a) {
          double z = logits[r * actions + a];
          L += cl[r * actions + a] * z + 0.25 * z * z;
        }
        L += cv[r] * values[r] + 0.5 * values[r] * values[r];
      }
      return L;
    };

    Params grads = zero_like(params);
    net.backprop(
        params, maps.data(), aux.data(), n,
        [&](int row, const double* logits, double value, double* dlogits, double* dvalue) {
          for (int a = 0; a < actions; ++a) dlogits[a] = cl[row * actions + a] + 0.5 * logits[a];
          *dvalue = cv[row] + value;
        },
        grads, tp);

    Rng jr(300 + draw);
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
      for (int k = 0; k < 6; ++k) {
        std::size_t idx = jr.uniform_u64(params.blocks[b].w.size());
        double keep = params.blocks[b].w[idx];
        params.blocks[b].w[idx] = keep + eps;
        double up = loss(params);
        params.blocks[b].w[idx] = keep - eps;
        double dn = loss(params);
        params.blocks[b].w[idx] = keep;
        double fd = (up - dn) / (2.0 * eps);
        double an = grads.blocks[b].w[idx];
        double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  report(5, max_rel <= 1e-4,
         fmt("gradient check: max relative error %.2e over 10 draws x 14 blocks x 6 entries",
             max_rel));
}

void gae_oracle(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<double>& next_values, const std::vector<std::uint8_t>& term,
                double gamma, double lambda, std::vector<double>& adv, std::vector<double>& ret) {
  std::size_t T = rewards.size();
  adv.assign(T, 0.0);
  ret.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double factor = 1.0, sum = 0.0;
    for (std::size_t k = t; k < T; ++k) {
      double live = term[k] ? 0.0 : 1.0;
      double delta = rewards[k] + gamma * next_values[k] * live - values[k];
      sum += factor * delta;
      if (!live) break;
      factor *= gamma * lambda;
      if (factor == 0.0) break;
    }
    adv[t] = sum;
    ret[t] = sum + values[t];
  }
}

void criterion_gae() {
  Rng rng(55);
  double max_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    int T = 1 + rng.uniform_int(32);
    std::vector<double> rewards(T), values(T), next_values(T);
    std::vector<std::uint8_t> term(T);
    for (int i = 0; i < T; ++i) {
      rewards[i] = rng.normal();
      values[i] = rng.normal();
      next_values[i] = rng.normal();
      term[i] = rng.uniform01() < 0.2 ? 1 : 0;
    }
    std::vector<double> adv(T), ret(T), oadv, oret;
    compute_gae_sequence(rewards, values, next_values, term, 0.99, 0.95, adv, ret);
    gae_oracle(rewards, values, next_values, term, 0.99, 0.95, oadv, oret);
    for (int i = 0; i < T; ++i) {
      max_err = std::max(max_err, std::abs(adv[i] - oadv[i]));
      max_err = std::max(max_err, std::abs(ret[i] - oret[i]));
    }
  }
  report(6, max_err <= 1e-10,
         fmt("advantage estimation vs direct summation: max err %.2e over 100 sequences",
             max_err));
}

RunConfig trivial_curriculum(const std::string& mode, const std::string& out_dir) {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.mode = mode;
  cfg.out_dir = out_dir;
  cfg.levels = {"accept_open4.map", "open-5", "accept_open6.map"};
  cfg.n_per_level = 4;
  cfg.env.obstacle_count = 0;
  cfg.env.max_steps = 60;
  cfg.env.lidar.fov_degrees = 360;
  cfg.env.encoder.h = cfg.env.encoder.w = 12;
  cfg.ppo.rollout_len = 16;
  cfg.ppo.epochs = 2;
  cfg.ppo.minibatches = 2;
  cfg.eval_interval = 32;
  cfg.eval_episodes = 1;
  cfg.budget = 100000;
  cfg.final_stop = "criterion";
  cfg.checkpoint_interval = 10000;
  cfg.final_eval_episodes = 1;
  cfg.threads = 1;
  return cfg;
}

// stage rows as "stage/newest/slots/composition", joined with spaces
std::string stage_signature(const std::string& dir) {
  std::istringstream in(slurp(dir + "/stages.csv"));
  std::string line, sig;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) return "malformed";
    if (!sig.empty()) sig += ' ';
    sig += cells[0] + '/' + cells[1] + '/' + cells[2] + '/' + cells[3];
  }
  return sig;
}

void criterion_composition() {
  write_map(open_room(4, 4), "accept_open4.map");
  write_map(open_room(6, 6), "accept_open6.map");
  for (const char* d : {"accept7_ccrl", "accept7_cl", "accept10_rerun"})
    std::filesystem::remove_all(d);

  TrainResult ccrl = train_run(trivial_curriculum("ccrl", "accept7_ccrl"));
  TrainResult cl = train_run(trivial_curriculum("cl", "accept7_cl"));

  std::string ccrl_sig = stage_signature("accept7_ccrl");
  std::string cl_sig = stage_signature("accept7_cl");
  bool ok = ccrl.status == "criterion_met" && cl.status == "criterion_met" &&
            ccrl_sig == "1/1/4/1:4 2/2/8/1:4;2:4 3/3/12/1:4;2:4;3:4" &&
            cl_sig == "1/1/4/1:4 2/2/4/2:4 3/3/4/3:4";
  report(7, ok, fmt("pool composition: ccrl [%s], cl [%s]", ccrl_sig.c_str(), cl_sig.c_str()));
}

void criterion_determinism() {
  TrainResult rerun = train_run(trivial_curriculum("ccrl", "accept10_rerun"));
  std::string m1 = slurp("accept7_ccrl/metrics.csv"), m2 = slurp("accept10_rerun/metrics.csv");
  std::string e1 = slurp("accept7_ccrl/eval.csv"), e2 = slurp("accept10_rerun/eval.csv");
  bool ok = rerun.status == "criterion_met" && !m1.empty() && m1 == m2 && !e1.empty() && e1 == e2;
  report(10, ok,
         fmt("rerun determinism: metrics.csv %zu bytes %s, eval.csv %zu bytes %s", m1.size(),
             m1 == m2 ? "identical" : "DIFFER", e1.size(), e1 == e2 ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  criterion_speed();
  criterion_reward();
  criterion_rays();
  criterion_resize();
  criterion_gradients();
  criterion_gae();
  criterion_composition();
  criterion_determinism();
  return g_failures == 0 ? 0 : 1;
}
