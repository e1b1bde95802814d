#include "gx/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gx/common.hpp"
#include "gx/maps.hpp"
#include "gx/pgm.hpp"
#include "gx/ppo.hpp"

namespace gx {

Action NetPolicy::act(const Observation& obs, const ExploreEnv&) {
  maps_.resize(2 * static_cast<std::size_t>(net_.config().in_h) * net_.config().in_w);
  std::copy(obs.lem.begin(), obs.lem.end(), maps_.begin());
  std::copy(obs.gem.begin(), obs.gem.end(), maps_.begin() + obs.lem.size());
  logits_.resize(net_.config().actions);
  double value = 0.0;
  net_.forward(params_, prep_, maps_.data(), obs.aux.data(), 1, logits_.data(), &value, tp_);
  return static_cast<Action>(argmax(logits_.data(), net_.config().actions));
}

namespace {

std::string join_csv(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

struct CsvFile {
  std::ofstream out;

  CsvFile(const std::string& path, const std::vector<std::string>& header) : out(path) {
    if (!out) throw RuntimeFailure("cannot open " + path);
    out << join_csv(header);
  }
  void row(const std::vector<std::string>& cells) {
    out << join_csv(cells);
    out.flush();
  }
};

std::string istr(std::int64_t v) { return std::to_string(v); }

}  // namespace

NetConfig net_config_for(const EnvConfig& env) {
  NetConfig net_cfg;
  net_cfg.in_h = env.encoder.h;
  net_cfg.in_w = env.encoder.w;
  net_cfg.aux_dim = env.lidar.beam_count() + 1;
  net_cfg.actions = kActionCount;
  return net_cfg;
}

TrainResult train_run(const RunConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t_start)
        .count();
  };

  std::filesystem::create_directories(cfg.out_dir);
  const int level_count = static_cast<int>(cfg.levels.size());
  const auto level_cfgs = cfg.level_env_configs();
  const CurriculumMode mode = parse_mode(cfg.mode);

  Net net(net_config_for(cfg.env));

  Rng init_rng(derive_seed(cfg.seed, "INIT"));
  Params params = net.init(init_rng);
  AdamState adam = make_adam_state(params);
  ThreadPool tp(cfg.threads);
  Rng action_rng(derive_seed(cfg.seed, "ACT"));
  Rng update_rng(derive_seed(cfg.seed, "UPD"));

  VecEnv pool(cfg.seed, cfg.threads);
  int stage = 1;
  apply_stage(pool, mode, stage, level_cfgs, cfg.n_per_level);

  std::vector<std::string> metrics_header = {
      "update",        "total_transitions", "stage",     "policy_loss",
      "value_loss",    "entropy",           "clip_fraction", "approx_kl",
      "grad_norm",     "episodes",          "mean_episode_rho"};
  for (int l = 1; l <= level_count; ++l) metrics_header.push_back("trans_l" + std::to_string(l));
  CsvFile metrics(cfg.out_dir + "/metrics.csv", metrics_header);
  CsvFile evals(cfg.out_dir + "/eval.csv",
                {"eval_index", "total_transitions", "level", "mean_rho", "ema",
                 "level_transitions"});
  CsvFile stages(cfg.out_dir + "/stages.csv",
                 {"stage", "newest_level", "pool_slots", "composition", "total_transitions",
                  "wall_ms"});

  std::map<int, std::int64_t> level_transitions;
  for (int l = 1; l <= level_count; ++l) level_transitions[l] = 0;

  auto composition = [&] {
    std::map<int, int> counts;
    for (int s = 0; s < pool.slot_count(); ++s) counts[pool.level_of(s)] += 1;
    std::string out;
    for (const auto& [l, n] : counts) {
      if (!out.empty()) out += ';';
      out += std::to_string(l) + ":" + std::to_string(n);
    }
    return out;
  };
  auto newest_level = [&] { return mode == CurriculumMode::Flat ? level_count : stage; };
  auto log_stage = [&](std::int64_t total) {
    stages.row({istr(stage), istr(newest_level()), istr(pool.slot_count()), composition(),
                istr(total), istr(wall_ms())});
  };

  TrainResult result;
  std::int64_t total_transitions = 0;
  int updates = 0;
  int eval_index = 0;
  std::int64_t newest_at_last_eval = 0;
  std::map<int, std::vector<double>> history;
  std::map<int, EmaTracker> ema;
  std::map<int, std::optional<std::int64_t>> sample_eff;
  for (int l = 1; l <= level_count; ++l) sample_eff[l] = std::nullopt;
  constexpr double kCoverageEma = 0.95;

  log_stage(0);

  auto save_ckpt = [&](const std::string& name) { save_params(params, cfg.out_dir + "/" + name); };

  std::string status;
  while (true) {
    if (total_transitions >= cfg.budget) {
      status = "budget_exhausted";
      break;
    }

    RolloutStats rstats;
    RolloutBuffer buf =
        collect_rollout(pool, net, params, cfg.ppo.rollout_len, action_rng, tp, &rstats);
    total_transitions += static_cast<std::int64_t>(buf.size());
    for (const auto& [l, n] : rstats.level_transitions) level_transitions[l] += n;

    std::vector<double> adv, ret;
    compute_gae(buf, cfg.ppo.gamma, cfg.ppo.lambda, adv, ret);
    UpdateStats us = ppo_update(net, params, adam, cfg.ppo, buf, adv, ret, update_rng, tp);
    ++updates;

    std::vector<std::string> row = {istr(updates),
                                    istr(total_transitions),
                                    istr(stage),
                                    fmt_double(us.policy_loss),
                                    fmt_double(us.value_loss),
                                    fmt_double(us.entropy),
                                    fmt_double(us.clip_fraction),
                                    fmt_double(us.approx_kl),
                                    fmt_double(us.grad_norm),
                                    istr(rstats.episodes_ended),
                                    fmt_double(rstats.mean_episode_rho)};
    for (int l = 1; l <= level_count; ++l) row.push_back(istr(level_transitions[l]));
    metrics.row(row);

    if (updates % cfg.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06d.gxnet", updates);
      save_ckpt(name);
    }

    if (level_transitions[newest_level()] - newest_at_last_eval < cfg.eval_interval) continue;
    newest_at_last_eval = level_transitions[newest_level()];
    ++eval_index;

    NetPolicy greedy(net, params, tp);
    for (int l : stage_levels(mode, stage, level_count)) {
      LevelEval le = evaluate_level(level_cfgs[l - 1], l, greedy, cfg.eval_episodes, cfg.seed,
                                    static_cast<std::uint64_t>(eval_index));
      history[l].push_back(le.mean_rho);
      ema[l].add(le.mean_rho);
      if (!sample_eff[l] && ema[l].value >= kCoverageEma) sample_eff[l] = level_transitions[l];
      evals.row({istr(eval_index), istr(total_transitions), istr(l), fmt_double(le.mean_rho),
                 fmt_double(ema[l].value), istr(level_transitions[l])});
    }

    int newest = newest_level();
    bool rule = should_switch(history[newest]);
    if (mode != CurriculumMode::Flat && stage < level_count) {
      if (rule) {
        ++stage;
        apply_stage(pool, mode, stage, level_cfgs, cfg.n_per_level);
        newest_at_last_eval = 0;
        log_stage(total_transitions);
      }
      continue;
    }
    // newest level is the last one: check the configured stopping rule
    if (cfg.final_stop == "criterion" && rule) {
      status = "criterion_met";
      break;
    }
    if (cfg.final_stop == "ema" && ema[newest].started && ema[newest].value >= cfg.final_stop_ema) {
      status = "ema_reached";
      break;
    }
  }

  save_ckpt("final.gxnet");

  CsvFile summary(cfg.out_dir + "/summary.csv",
                  {"level", "map", "mean_rho", "sample_efficiency"});
  if (cfg.final_eval_episodes > 0) {
    NetPolicy greedy(net, params, tp);
    for (int l = 1; l <= level_count; ++l) {
      LevelEval le = evaluate_level(level_cfgs[l - 1], l, greedy, cfg.final_eval_episodes,
                                    cfg.seed, 1000000u + static_cast<std::uint64_t>(l));
      result.final_eval_rho[l] = le.mean_rho;
      summary.row({istr(l), cfg.levels[l - 1], fmt_double(le.mean_rho),
                   sample_eff[l] ? istr(*sample_eff[l]) : ""});
    }
  } else {
    for (int l = 1; l <= level_count; ++l)
      summary.row({istr(l), cfg.levels[l - 1], "", sample_eff[l] ? istr(*sample_eff[l]) : ""});
  }

  result.status = status;
  result.total_transitions = total_transitions;
  result.updates = updates;
  result.final_stage = stage;
  result.sample_efficiency = sample_eff;
  return result;
}

std::optional<std::int64_t> sample_efficiency_from_eval_csv(const std::string& path, int level) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  constexpr double kCoverageEma = 0.95;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 6) continue;
    if (std::stoi(cells[2]) != level) continue;
    if (std::stod(cells[4]) >= kCoverageEma) return std::stoll(cells[5]);
  }
  return std::nullopt;
}

Aggregate aggregate_runs(std::span<const double> xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return a;
}

BenchResult bench_run(const EnvConfig& cfg, int steps, std::uint64_t seed) {
  ExploreEnv env(cfg);
  Rng rng(derive_seed(seed, "BENCH"));
  env.reset(rng.next_u64());
  std::vector<double> times_ms;
  times_ms.reserve(steps);
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    if (env.done()) env.reset(rng.next_u64());
    Action a = static_cast<Action>(rng.uniform_int(kActionCount));
    auto t0 = std::chrono::steady_clock::now();
    env.step(a);
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    times_ms.push_back(ms);
    total += ms;
  }
  std::sort(times_ms.begin(), times_ms.end());
  auto q = [&](double p) {
    std::size_t i = static_cast<std::size_t>(p * (times_ms.size() - 1));
    return times_ms[i];
  };
  BenchResult r;
  r.steps = steps;
  r.median_ms = q(0.5);
  r.mean_ms = total / steps;
  r.p90_ms = q(0.9);
  r.p99_ms = q(0.99);
  r.max_ms = times_ms.back();
  r.total_s = total / 1000.0;
  return r;
}

EpisodeTrace run_traced_episode(ExploreEnv& env, Policy& policy, std::uint64_t seed) {
  EpisodeTrace tr;
  Observation obs = env.reset(seed);
  policy.on_episode_start(env);
  tr.map_id = env.config().map_id;
  tr.obstacles = env.obstacles();
  tr.reset_pose = env.reset_pose();
  while (!env.done()) {
    Action a = policy.act(obs, env);
    StepResult r = env.step(a);
    obs = std::move(r.obs);
    TraceRow row;
    row.step = r.steps;
    row.action = static_cast<int>(a);
    row.reward = r.reward;
    row.rho = r.rho;
    row.row = env.pose().row;
    row.col = env.pose().col;
    row.heading = static_cast<int>(env.pose().heading);
    row.terminated = r.terminated;
    row.truncated = r.truncated;
    tr.rows.push_back(row);
  }
  return tr;
}

void save_trace(const EpisodeTrace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open " + path);
  out << "; GRIDTRACE v1\n";
  out << "; map " << tr.map_id << "\n";
  out << "; obstacles";
  for (auto [r, c] : tr.obstacles) out << " " << r << "," << c;
  out << "\n";
  out << "; reset " << tr.reset_pose.row << " " << tr.reset_pose.col << " "
      << static_cast<int>(tr.reset_pose.heading) << "\n";
  out << "step,action,reward,rho,row,col,heading,terminated,truncated\n";
  for (const auto& r : tr.rows) {
    out << r.step << ',' << r.action << ',' << fmt_double(r.reward) << ',' << fmt_double(r.rho)
        << ',' << r.row << ',' << r.col << ',' << r.heading << ',' << (r.terminated ? 1 : 0) << ','
        << (r.truncated ? 1 : 0) << "\n";
  }
  if (!out) throw RuntimeFailure("write failed for " + path);
}

EpisodeTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trace " + path);
  EpisodeTrace tr;
  std::string line;
  bool have_header = false, have_reset = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == ';') {
      std::istringstream ss(line.substr(1));
      std::string tag;
      ss >> tag;
      if (tag == "map") {
        ss >> tr.map_id;
      } else if (tag == "obstacles") {
        std::string pair;
        while (ss >> pair) {
          std::size_t comma = pair.find(',');
          if (comma == std::string::npos) throw UsageError("trace: bad obstacle '" + pair + "'");
          tr.obstacles.emplace_back(std::stoi(pair.substr(0, comma)),
                                    std::stoi(pair.substr(comma + 1)));
        }
      } else if (tag == "reset") {
        int h = 0;
        ss >> tr.reset_pose.row >> tr.reset_pose.col >> h;
        tr.reset_pose.heading = static_cast<Heading>(h);
        have_reset = true;
      }
      continue;
    }
    if (!have_header) {
      have_header = true;  // column header line
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw UsageError("trace: bad row '" + line + "'");
    TraceRow r;
    r.step = std::stoi(cells[0]);
    r.action = std::stoi(cells[1]);
    r.reward = std::stod(cells[2]);
    r.rho = std::stod(cells[3]);
    r.row = std::stoi(cells[4]);
    r.col = std::stoi(cells[5]);
    r.heading = std::stoi(cells[6]);
    r.terminated = cells[7] == "1";
    r.truncated = cells[8] == "1";
    tr.rows.push_back(r);
  }
  if (tr.map_id.empty() || !have_reset) throw UsageError("trace: missing map or reset header");
  return tr;
}

void render_trace(const EpisodeTrace& tr, const LidarConfig& lidar, const std::string& prefix) {
  GroundTruthMap map = gx::load_map(tr.map_id);
  for (auto [r, c] : tr.obstacles) {
    if (!map.in_bounds(r, c) || map.at(r, c) != Cell::Free)
      throw UsageError("trace: obstacle at " + std::to_string(r) + "," + std::to_string(c) +
                       " does not fit the map");
    map.cells[static_cast<std::size_t>(r) * map.width + c] = Cell::Occupied;
    --map.free_count;
  }
  BeliefMap belief = BeliefMap::unknown(map.height, map.width);
  scan_and_integrate(map, tr.reset_pose, lidar, belief);
  for (const auto& row : tr.rows) {
    Pose p{row.row, row.col, static_cast<Heading>(row.heading)};
    scan_and_integrate(map, p, lidar, belief);
  }

  export_map_pgm(map, prefix + "_map.pgm");

  std::vector<std::uint8_t> px(belief.cells.size());
  for (std::size_t i = 0; i < belief.cells.size(); ++i) {
    switch (belief.cells[i]) {
      case Cell::Free: px[i] = 255; break;
      case Cell::Unknown: px[i] = 128; break;
      case Cell::Occupied: px[i] = 0; break;
    }
  }
  auto draw = [&](int r, int c) { px[static_cast<std::size_t>(r) * belief.width + c] = 64; };
  draw(tr.reset_pose.row, tr.reset_pose.col);
  for (const auto& row : tr.rows) draw(row.row, row.col);
  write_pgm(prefix + "_belief.pgm", belief.height, belief.width, px);
}

Params load_checkpoint_for(const Net& net, const std::string& path) {
  Params params = load_params(path);
  Rng shape_rng(0);
  Params expected = net.init(shape_rng);
  if (expected.blocks.size() != params.blocks.size())
    throw UsageError("checkpoint " + path + " does not match the configured network");
  for (std::size_t i = 0; i < expected.blocks.size(); ++i) {
    if (expected.blocks[i].name != params.blocks[i].name ||
        expected.blocks[i].shape != params.blocks[i].shape)
      throw UsageError("checkpoint block '" + params.blocks[i].name +
                       "' does not match the configured network");
  }
  return params;
}

std::vector<EvalReportRow> eval_checkpoint(const std::string& checkpoint_path,
                                           const EnvConfig& base_env,
                                           const std::vector<std::string>& maps, int episodes,
                                           const std::vector<std::uint64_t>& seeds, int threads) {
  Net net(net_config_for(base_env));
  Params params = load_checkpoint_for(net, checkpoint_path);
  ThreadPool tp(threads);
  NetPolicy greedy(net, params, tp);
  std::vector<EvalReportRow> rows;
  for (std::size_t mi = 0; mi < maps.size(); ++mi) {
    EnvConfig cfg = base_env;
    cfg.map_id = maps[mi];
    for (std::uint64_t seed : seeds) {
      LevelEval le = evaluate_level(cfg, static_cast<int>(mi + 1), greedy, episodes, seed, 0);
      for (int ep = 0; ep < static_cast<int>(le.episodes.size()); ++ep) {
        const auto& e = le.episodes[ep];
        EvalReportRow r;
        r.map = maps[mi];
        r.seed = seed;
        r.episode = ep;
        r.final_rho = e.final_rho;
        r.steps = e.steps;
        r.success = e.success;
        r.explore_steps = e.explore_steps;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

void write_eval_report(const std::vector<EvalReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open " + path);
  out << "map,seed,episode,final_rho,steps,success,explore_steps\n";
  for (const auto& r : rows) {
    out << r.map << ',' << r.seed << ',' << r.episode << ',' << fmt_double(r.final_rho) << ','
        << r.steps << ',' << (r.success ? 1 : 0) << ','
        << (r.explore_steps ? std::to_string(*r.explore_steps) : "") << "\n";
  }
  if (!out) throw RuntimeFailure("write failed for " + path);
}

namespace {

struct MapAggregates {
  std::string map;
  Aggregate rho;
  double success_rate = 0.0;
  std::optional<Aggregate> explore;  // absent if no episode reached 0.95
  int episodes = 0;
};

std::vector<MapAggregates> per_map_aggregates(const std::vector<EvalReportRow>& rows) {
  std::vector<MapAggregates> out;
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.map) == order.end()) order.push_back(r.map);
  for (const auto& m : order) {
    MapAggregates agg;
    agg.map = m;
    std::vector<double> rhos, expl;
    int successes = 0;
    for (const auto& r : rows) {
      if (r.map != m) continue;
      rhos.push_back(r.final_rho);
      if (r.success) ++successes;
      if (r.explore_steps) expl.push_back(static_cast<double>(*r.explore_steps));
    }
    agg.rho = aggregate_runs(rhos);
    agg.success_rate = rhos.empty() ? 0.0 : static_cast<double>(successes) / rhos.size();
    if (!expl.empty()) agg.explore = aggregate_runs(expl);
    agg.episodes = static_cast<int>(rhos.size());
    out.push_back(agg);
  }
  return out;
}

}  // namespace

std::string format_eval_aggregates(const std::vector<EvalReportRow>& rows) {
  auto aggs = per_map_aggregates(rows);
  std::size_t name_w = 3;
  for (const auto& a : aggs) name_w = std::max(name_w, a.map.size());
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-*s %8s %17s %21s\n", static_cast<int>(name_w), "map",
                "episodes", "final_rho", "explore_steps");
  os << buf;
  for (const auto& a : aggs) {
    char rho[64], expl[64];
    std::snprintf(rho, sizeof(rho), "%.4f +- %.4f", a.rho.mean, a.rho.stddev);
    if (a.explore)
      std::snprintf(expl, sizeof(expl), "%.1f +- %.1f", a.explore->mean, a.explore->stddev);
    else
      std::snprintf(expl, sizeof(expl), "-");
    std::snprintf(buf, sizeof(buf), "%-*s %8d %17s %21s\n", static_cast<int>(name_w),
                  a.map.c_str(), a.episodes, rho, expl);
    os << buf;
  }
  return os.str();
}

void write_eval_aggregates(const std::vector<EvalReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open " + path);
  out << "map,episodes,rho_mean,rho_std,success_rate,explore_steps_mean,explore_steps_std\n";
  for (const auto& a : per_map_aggregates(rows)) {
    out << a.map << ',' << a.episodes << ',' << fmt_double(a.rho.mean) << ','
        << fmt_double(a.rho.stddev) << ',' << fmt_double(a.success_rate) << ','
        << (a.explore ? fmt_double(a.explore->mean) : "") << ','
        << (a.explore ? fmt_double(a.explore->stddev) : "") << "\n";
  }
  if (!out) throw RuntimeFailure("write failed for " + path);
}

}  // namespace gx
