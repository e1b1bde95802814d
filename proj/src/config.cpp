#include "gx/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gx/common.hpp"
#include "gx/curriculum.hpp"

namespace gx {

void RunConfig::validate() const {
  parse_mode(mode);
  if (levels.empty()) throw UsageError("config: levels must not be empty");
  if (n_per_level < 1) throw UsageError("config: n_per_level must be positive");
  if (eval_interval < 1) throw UsageError("config: eval_interval must be positive");
  if (eval_episodes < 1) throw UsageError("config: eval_episodes must be positive");
  if (budget < 0) throw UsageError("config: budget must be non-negative");
  if (final_stop != "criterion" && final_stop != "ema" && final_stop != "budget")
    throw UsageError("config: final_stop must be criterion, ema or budget");
  if (!(final_stop_ema > 0.0) || final_stop_ema > 1.0)
    throw UsageError("config: final_stop_ema must be in (0,1]");
  if (checkpoint_interval < 1) throw UsageError("config: checkpoint_interval must be positive");
  if (final_eval_episodes < 0) throw UsageError("config: final_eval_episodes must be >= 0");
  if (threads < 1) throw UsageError("config: threads must be positive");
  env.validate();
  ppo.validate();
}

std::vector<EnvConfig> RunConfig::level_env_configs() const {
  std::vector<EnvConfig> out;
  out.reserve(levels.size());
  for (const auto& id : levels) {
    EnvConfig e = env;
    e.map_id = id;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::uint64_t to_u64(const std::string& k, const std::string& v) {
  char* end = nullptr;
  std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') throw UsageError("config: bad integer for " + k);
  return x;
}

std::int64_t to_i64(const std::string& k, const std::string& v) {
  char* end = nullptr;
  std::int64_t x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') throw UsageError("config: bad integer for " + k);
  return x;
}

int to_int(const std::string& k, const std::string& v) {
  return static_cast<int>(to_i64(k, v));
}

double to_double(const std::string& k, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') throw UsageError("config: bad number for " + k);
  return x;
}

bool to_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config: bad boolean for " + k);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

void apply_key(RunConfig& c, const std::string& k, const std::string& v) {
  if (k == "seed") c.seed = to_u64(k, v);
  else if (k == "mode") c.mode = v;
  else if (k == "out_dir") c.out_dir = v;
  else if (k == "levels") c.levels = split_list(v);
  else if (k == "n_per_level") c.n_per_level = to_int(k, v);
  else if (k == "env.obstacle_count") c.env.obstacle_count = to_int(k, v);
  else if (k == "env.max_steps") c.env.max_steps = to_int(k, v);
  else if (k == "env.success_threshold") c.env.success_threshold = to_double(k, v);
  else if (k == "env.lidar.fov") c.env.lidar.fov_degrees = to_int(k, v);
  else if (k == "env.lidar.resolution") c.env.lidar.resolution_degrees = to_int(k, v);
  else if (k == "env.lidar.max_range") c.env.lidar.max_range = to_double(k, v);
  else if (k == "env.encoder.h") c.env.encoder.h = to_int(k, v);
  else if (k == "env.encoder.w") c.env.encoder.w = to_int(k, v);
  else if (k == "env.encoder.d") c.env.encoder.d = to_int(k, v);
  else if (k == "ppo.gamma") c.ppo.gamma = to_double(k, v);
  else if (k == "ppo.lambda") c.ppo.lambda = to_double(k, v);
  else if (k == "ppo.clip") c.ppo.clip = to_double(k, v);
  else if (k == "ppo.epochs") c.ppo.epochs = to_int(k, v);
  else if (k == "ppo.minibatches") c.ppo.minibatches = to_int(k, v);
  else if (k == "ppo.rollout_len") c.ppo.rollout_len = to_int(k, v);
  else if (k == "ppo.value_coef") c.ppo.value_coef = to_double(k, v);
  else if (k == "ppo.entropy_coef") c.ppo.entropy_coef = to_double(k, v);
  else if (k == "ppo.lr") c.ppo.lr = to_double(k, v);
  else if (k == "ppo.max_grad_norm") c.ppo.max_grad_norm = to_double(k, v);
  else if (k == "ppo.augment") c.ppo.augment = to_bool(k, v);
  else if (k == "train.eval_interval") c.eval_interval = to_int(k, v);
  else if (k == "train.eval_episodes") c.eval_episodes = to_int(k, v);
  else if (k == "train.budget") c.budget = to_i64(k, v);
  else if (k == "train.final_stop") c.final_stop = v;
  else if (k == "train.final_stop_ema") c.final_stop_ema = to_double(k, v);
  else if (k == "train.checkpoint_interval") c.checkpoint_interval = to_int(k, v);
  else if (k == "train.final_eval_episodes") c.final_eval_episodes = to_int(k, v);
  else if (k == "train.threads") c.threads = to_int(k, v);
  else throw UsageError("config: unknown key '" + k + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw UsageError("config: empty key on line " + std::to_string(lineno));
    apply_key(c, key, val);
  }
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "mode = " << c.mode << "\n";
  o << "out_dir = " << c.out_dir << "\n";
  o << "levels = ";
  for (std::size_t i = 0; i < c.levels.size(); ++i) o << (i ? "," : "") << c.levels[i];
  o << "\n";
  o << "n_per_level = " << c.n_per_level << "\n";
  o << "env.obstacle_count = " << c.env.obstacle_count << "\n";
  o << "env.max_steps = " << c.env.max_steps << "\n";
  o << "env.success_threshold = " << fmt_double(c.env.success_threshold) << "\n";
  o << "env.lidar.fov = " << c.env.lidar.fov_degrees << "\n";
  o << "env.lidar.resolution = " << c.env.lidar.resolution_degrees << "\n";
  o << "env.lidar.max_range = " << fmt_double(c.env.lidar.max_range) << "\n";
  o << "env.encoder.h = " << c.env.encoder.h << "\n";
  o << "env.encoder.w = " << c.env.encoder.w << "\n";
  o << "env.encoder.d = " << c.env.encoder.d << "\n";
  o << "ppo.gamma = " << fmt_double(c.ppo.gamma) << "\n";
  o << "ppo.lambda = " << fmt_double(c.ppo.lambda) << "\n";
  o << "ppo.clip = " << fmt_double(c.ppo.clip) << "\n";
  o << "ppo.epochs = " << c.ppo.epochs << "\n";
  o << "ppo.minibatches = " << c.ppo.minibatches << "\n";
  o << "ppo.rollout_len = " << c.ppo.rollout_len << "\n";
  o << "ppo.value_coef = " << fmt_double(c.ppo.value_coef) << "\n";
  o << "ppo.entropy_coef = " << fmt_double(c.ppo.entropy_coef) << "\n";
  o << "ppo.lr = " << fmt_double(c.ppo.lr) << "\n";
  o << "ppo.max_grad_norm = " << fmt_double(c.ppo.max_grad_norm) << "\n";
  o << "ppo.augment = " << (c.ppo.augment ? "true" : "false") << "\n";
  o << "train.eval_interval = " << c.eval_interval << "\n";
  o << "train.eval_episodes = " << c.eval_episodes << "\n";
  o << "train.budget = " << c.budget << "\n";
  o << "train.final_stop = " << c.final_stop << "\n";
  o << "train.final_stop_ema = " << fmt_double(c.final_stop_ema) << "\n";
  o << "train.checkpoint_interval = " << c.checkpoint_interval << "\n";
  o << "train.final_eval_episodes = " << c.final_eval_episodes << "\n";
  o << "train.threads = " << c.threads << "\n";
  return o.str();
}

}  // namespace gx
