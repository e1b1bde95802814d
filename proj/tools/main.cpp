#include <cctype>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gx/common.hpp"
#include "gx/config.hpp"
#include "gx/harness.hpp"
#include "gx/maps.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::uint64_t> split_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_list(s)) {
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw gx::UsageError("bad seed '" + tok + "'");
    }
  }
  if (out.empty()) throw gx::UsageError("empty seed list");
  return out;
}

gx::RunConfig resolved_config(const std::string& config_path) {
  return config_path.empty() ? gx::RunConfig{} : gx::load_config_file(config_path);
}

int cmd_train(const gx::RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir + "/config.txt");
    out << gx::serialize_config(cfg);
  }
  gx::TrainResult res = gx::train_run(cfg);
  std::printf("status: %s\n", res.status.c_str());
  std::printf("transitions: %lld  updates: %d  stage: %d\n",
              static_cast<long long>(res.total_transitions), res.updates, res.final_stage);
  for (const auto& [level, rho] : res.final_eval_rho) {
    std::string eff = res.sample_efficiency.at(level)
                          ? std::to_string(*res.sample_efficiency.at(level))
                          : "-";
    std::printf("level %d: final rho %.4f  sample efficiency %s\n", level, rho, eff.c_str());
  }
  std::printf("outputs in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const gx::RunConfig& cfg, const std::string& checkpoint, const std::string& maps_csv,
             int episodes, const std::string& seeds_csv, const std::string& out_dir) {
  std::vector<std::string> maps = maps_csv.empty() ? cfg.levels : split_list(maps_csv);
  if (maps.empty()) throw gx::UsageError("no maps to evaluate");
  std::vector<std::uint64_t> seeds = split_seeds(seeds_csv);
  auto rows = gx::eval_checkpoint(checkpoint, cfg.env, maps, episodes, seeds, cfg.threads);
  std::filesystem::create_directories(out_dir);
  gx::write_eval_report(rows, out_dir + "/eval_report.csv");
  gx::write_eval_aggregates(rows, out_dir + "/eval_aggregates.csv");
  std::fputs(gx::format_eval_aggregates(rows).c_str(), stdout);
  std::printf("report in %s\n", out_dir.c_str());
  return 0;
}

int cmd_bench(const gx::RunConfig& cfg, const std::string& map_id, int steps, std::uint64_t seed,
              const std::string& out_path) {
  gx::EnvConfig env = cfg.env;
  if (!map_id.empty()) env.map_id = map_id;
  gx::BenchResult r = gx::bench_run(env, steps, seed);
  std::printf("map %s, %d steps\n", env.map_id.c_str(), r.steps);
  std::printf("median %.4f ms  mean %.4f ms  p90 %.4f ms  p99 %.4f ms  max %.4f ms\n", r.median_ms,
              r.mean_ms, r.p90_ms, r.p99_ms, r.max_ms);
  std::printf("total %.2f s  (%.0f steps/s)\n", r.total_s, r.steps / r.total_s);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw gx::RuntimeFailure("cannot open " + out_path);
    out << "map,steps,median_ms,mean_ms,p90_ms,p99_ms,max_ms,total_s\n";
    out << env.map_id << ',' << r.steps << ',' << gx::fmt_double(r.median_ms) << ','
        << gx::fmt_double(r.mean_ms) << ',' << gx::fmt_double(r.p90_ms) << ','
        << gx::fmt_double(r.p99_ms) << ',' << gx::fmt_double(r.max_ms) << ','
        << gx::fmt_double(r.total_s) << "\n";
  }
  return 0;
}

int cmd_trace(const gx::RunConfig& cfg, const std::string& checkpoint, const std::string& map_id,
              std::uint64_t seed, const std::string& out_path) {
  gx::EnvConfig env_cfg = cfg.env;
  if (!map_id.empty()) env_cfg.map_id = map_id;
  gx::ExploreEnv env(env_cfg);

  gx::EpisodeTrace trace;
  if (checkpoint.empty()) {
    gx::RandomPolicy policy(gx::derive_seed(seed, "TRACEPOL"));
    trace = gx::run_traced_episode(env, policy, seed);
  } else {
    gx::Net net(gx::net_config_for(env_cfg));
    gx::Params params = gx::load_checkpoint_for(net, checkpoint);
    gx::ThreadPool tp(cfg.threads);
    gx::NetPolicy policy(net, params, tp);
    trace = gx::run_traced_episode(env, policy, seed);
  }
  gx::save_trace(trace, out_path);
  if (!trace.rows.empty()) {
    const auto& last = trace.rows.back();
    std::printf("%zu steps, final rho %.4f, %s\n", trace.rows.size(), last.rho,
                last.terminated ? (last.reward > 0 ? "success" : "collision") : "truncated");
  }
  std::printf("trace in %s\n", out_path.c_str());
  return 0;
}

int cmd_render(const gx::RunConfig& cfg, const std::string& trace_path,
               const std::string& out_prefix) {
  gx::EpisodeTrace trace = gx::load_trace(trace_path);
  gx::render_trace(trace, cfg.env.lidar, out_prefix);
  std::printf("wrote %s_map.pgm and %s_belief.pgm\n", out_prefix.c_str(), out_prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid exploration curriculum trainer"};
  app.require_subcommand(1);

  std::string config_path, mode, out, checkpoint, maps_csv, map_id, trace_path;
  std::string seeds_csv = "1,2,3,4,5";
  std::uint64_t seed = 0;
  bool seed_set = false, mode_set = false, out_set = false, budget_set = false, threads_set = false;
  std::int64_t budget = 0;
  int episodes = 20, steps = 100000, threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config file (defaults used when omitted)");
    sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--threads", threads, "worker threads")->each([&](const std::string&) {
      threads_set = true;
    });
  };

  CLI::App* train = app.add_subcommand("train", "train a policy through the curriculum");
  add_common(train);
  train->add_option("--mode", mode, "ccrl | cl | flat")->each([&](const std::string&) {
    mode_set = true;
  });
  train->add_option("--out", out, "output directory")->each([&](const std::string&) {
    out_set = true;
  });
  train->add_option("--budget", budget, "total transition cap")->each([&](const std::string&) {
    budget_set = true;
  });

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint over maps and seeds");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "saved .gxnet parameters")->required();
  eval->add_option("--maps", maps_csv, "comma-separated map ids (default: config levels)");
  eval->add_option("--episodes", episodes, "episodes per (map, seed)");
  eval->add_option("--seeds", seeds_csv, "comma-separated seeds");
  eval->add_option("--out", out, "report directory")->each([&](const std::string&) {
    out_set = true;
  });

  CLI::App* bench = app.add_subcommand("bench", "single-step latency of the simulator");
  add_common(bench);
  bench->add_option("--map", map_id, "map id (default: config env map)");
  bench->add_option("--steps", steps, "steps to time");
  bench->add_option("--out", out, "also write a CSV row here")->each([&](const std::string&) {
    out_set = true;
  });

  CLI::App* trace = app.add_subcommand("trace", "run one episode and record it");
  add_common(trace);
  trace->add_option("--checkpoint", checkpoint, "policy checkpoint (random policy when omitted)");
  trace->add_option("--map", map_id, "map id (default: config env map)");
  trace->add_option("--out", out, "trace file path")->required();

  CLI::App* render = app.add_subcommand("render", "draw a recorded episode as PGM images");
  render->add_option("--config", config_path, "run config file (lidar must match the trace)");
  render->add_option("--trace", trace_path, "trace file")->required();
  render->add_option("--out", out, "output image prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    gx::RunConfig cfg = resolved_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (mode_set) cfg.mode = mode;
    if (out_set && train->parsed()) cfg.out_dir = out;
    if (budget_set) cfg.budget = budget;
    if (threads_set) cfg.threads = threads;
    cfg.validate();

    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed())
      return cmd_eval(cfg, checkpoint, maps_csv, episodes, seeds_csv, out.empty() ? "." : out);
    if (bench->parsed()) return cmd_bench(cfg, map_id, steps, seed_set ? seed : cfg.seed, out);
    if (trace->parsed()) return cmd_trace(cfg, checkpoint, map_id, seed_set ? seed : cfg.seed, out);
    if (render->parsed()) return cmd_render(cfg, trace_path, out);
    return 1;
  } catch (const gx::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
