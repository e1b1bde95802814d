#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gx/config.hpp"
#include "gx/curriculum.hpp"
#include "gx/neuralnet.hpp"

namespace gx {

// Greedy argmax over the policy logits. Holds a prepared-weights snapshot,
// so `params` must stay frozen for this object's lifetime.
class NetPolicy : public Policy {
 public:
  NetPolicy(const Net& net, const Params& params, ThreadPool& tp)
      : net_(net), params_(params), prep_(net.prepare(params)), tp_(tp) {}
  Action act(const Observation& obs, const ExploreEnv& env) override;

 private:
  const Net& net_;
  const Params& params_;
  PreparedWeights prep_;
  ThreadPool& tp_;
  std::vector<double> maps_, logits_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Action act(const Observation&, const ExploreEnv&) override {
    return static_cast<Action>(rng_.uniform_int(kActionCount));
  }

 private:
  Rng rng_;
};

struct TrainResult {
  std::string status;  // criterion_met | ema_reached | budget_exhausted
  std::int64_t total_transitions = 0;
  int updates = 0;
  int final_stage = 0;
  std::map<int, double> final_eval_rho;  // level -> mean final rho
  std::map<int, std::optional<std::int64_t>> sample_efficiency;
};

// Full training run: writes metrics.csv, eval.csv, stages.csv, summary.csv
// and checkpoints under cfg.out_dir. Everything except the wall_ms column of
// stages.csv is a pure function of the config.
TrainResult train_run(const RunConfig& cfg);

// first eval where `level`'s score EMA reached the coverage threshold (0.95):
// the level's cumulative transition count at that point
std::optional<std::int64_t> sample_efficiency_from_eval_csv(const std::string& path, int level);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Aggregate aggregate_runs(std::span<const double> xs);

struct BenchResult {
  int steps = 0;
  double median_ms = 0.0, mean_ms = 0.0, p90_ms = 0.0, p99_ms = 0.0, max_ms = 0.0;
  double total_s = 0.0;  // stepping time only; resets excluded
};

BenchResult bench_run(const EnvConfig& cfg, int steps, std::uint64_t seed);

struct TraceRow {
  int step = 0;
  int action = 0;
  double reward = 0.0;
  double rho = 0.0;
  int row = 0, col = 0, heading = 0;
  bool terminated = false, truncated = false;
};

struct EpisodeTrace {
  std::string map_id;
  std::vector<std::pair<int, int>> obstacles;
  Pose reset_pose;
  std::vector<TraceRow> rows;
};

EpisodeTrace run_traced_episode(ExploreEnv& env, Policy& policy, std::uint64_t seed);
void save_trace(const EpisodeTrace& trace, const std::string& path);
EpisodeTrace load_trace(const std::string& path);

// Replays the trace (map + obstacles + scans along the recorded poses) and
// writes <prefix>_map.pgm plus <prefix>_belief.pgm with the trajectory drawn
// at pixel value 64. `lidar` must match the settings the trace was made with.
void render_trace(const EpisodeTrace& trace, const LidarConfig& lidar, const std::string& prefix);

struct EvalReportRow {
  std::string map;
  std::uint64_t seed = 0;
  int episode = 0;
  double final_rho = 0.0;
  int steps = 0;
  bool success = false;
  std::optional<int> explore_steps;
};

// network shape implied by an environment's observation sizes
NetConfig net_config_for(const EnvConfig& env);

// loads a checkpoint and verifies its blocks match the net's layout
Params load_checkpoint_for(const Net& net, const std::string& path);

// Greedy episodes of a saved checkpoint, rows ordered by (map, seed, episode)
std::vector<EvalReportRow> eval_checkpoint(const std::string& checkpoint_path,
                                           const EnvConfig& base_env,
                                           const std::vector<std::string>& maps, int episodes,
                                           const std::vector<std::uint64_t>& seeds, int threads);
void write_eval_report(const std::vector<EvalReportRow>& rows, const std::string& path);

// per-map mean +- population std of final rho, success rate and exploration
// steps (mean over episodes that reached 0.95), recomputed from the rows
std::string format_eval_aggregates(const std::vector<EvalReportRow>& rows);
void write_eval_aggregates(const std::vector<EvalReportRow>& rows, const std::string& path);

}  // namespace gx
