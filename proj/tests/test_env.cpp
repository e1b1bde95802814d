#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "gx/common.hpp"
#include "gx/env.hpp"
#include "gx/maps.hpp"
#include "gx/vecenv.hpp"

using namespace gx;

namespace {

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

// writes a map file and returns its path (usable as a map_id)
std::string write_map(const GroundTruthMap& m, const std::string& name) {
  std::ofstream out(name);
  out << save_map(m);
  return name;
}

// single free cell boxed in: every forward move collides, one turn finishes
// the exploration
std::string one_cell_map() {
  GroundTruthMap m = open_room(3, 3);
  return write_map(m, "test_env_cell.map");
}

std::string open30_map() { return write_map(open_room(30, 30), "test_env_open30.map"); }

struct TempFiles {
  ~TempFiles() {
    std::remove("test_env_cell.map");
    std::remove("test_env_open30.map");
  }
} cleanup;

}  // namespace

TEST_CASE("env config validation") {
  EnvConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.obstacle_count = -1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = EnvConfig{};
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = EnvConfig{};
  cfg.success_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = EnvConfig{};
  cfg.success_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = EnvConfig{};
  cfg.lidar.resolution_degrees = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = EnvConfig{};
  cfg.encoder.h = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("boxed-in cell: scripted rewards are exact") {
  EnvConfig cfg;
  cfg.map_id = one_cell_map();
  cfg.obstacle_count = 0;
  ExploreEnv env(cfg);

  // The only free cell plus four edge walls are observable; the corner walls
  // can never be entered by a beam. Facing north, the 270-degree scan leaves
  // the south wall hidden (the +-135 corner beams stop on the east/west
  // walls), so reset knows 4 of 5. Any other heading sees all four walls.
  std::uint64_t north_seed = 0;
  for (std::uint64_t s = 0; s < 64; ++s) {
    env.reset(s);
    if (env.pose().heading == Heading::North) {
      north_seed = s;
      break;
    }
  }
  env.reset(north_seed);
  REQUIRE(env.pose().heading == Heading::North);
  CHECK(env.pose().row == 1);
  CHECK(env.pose().col == 1);
  CHECK(env.map().observable_count == 5);
  CHECK(env.belief().known_count == 4);
  CHECK(env.rho() == 0.8);
  CHECK_FALSE(env.done());

  SUBCASE("turning reveals the last wall: progress clips to 1, success adds 1") {
    StepResult r = env.step(Action::TurnLeft);
    // rho 0.8 -> 1.0: 10*(1 - 0.64) clips to 1.0, plus the success bonus
    CHECK(r.reward == 2.0);
    CHECK(r.rho == 1.0);
    CHECK(r.terminated);
    CHECK_FALSE(r.truncated);
    CHECK(r.succeeded);
    CHECK_FALSE(r.collided);
    CHECK(r.steps == 1);
    CHECK(env.done());
    CHECK_THROWS_AS(env.step(Action::TurnLeft), std::logic_error);
  }

  SUBCASE("forward into the wall: collision ends the episode without a scan") {
    int known_before = env.belief().known_count;
    Observation before = encode(env.belief(), env.pose(), env.last_scan(), cfg.lidar, cfg.encoder);
    StepResult r = env.step(Action::Forward);
    CHECK(r.reward == -1.005);
    CHECK(r.terminated);
    CHECK_FALSE(r.truncated);
    CHECK(r.collided);
    CHECK_FALSE(r.succeeded);
    CHECK(r.rho == 0.8);
    CHECK(env.belief().known_count == known_before);
    CHECK(env.pose().row == 1);
    CHECK(env.pose().col == 1);
    // nothing moved or rescanned, so the observation is unchanged
    CHECK(r.obs.lem == before.lem);
    CHECK(r.obs.gem == before.gem);
    CHECK(r.obs.aux == before.aux);
    CHECK_THROWS_AS(env.step(Action::Forward), std::logic_error);
  }
}

TEST_CASE("turning back over covered ground costs exactly 0.005") {
  EnvConfig cfg;
  cfg.map_id = open30_map();
  cfg.obstacle_count = 0;
  ExploreEnv env(cfg);
  env.reset(3);

  env.step(Action::TurnLeft);
  REQUIRE_FALSE(env.done());
  // back to the reset heading: the scan wedge is already known
  StepResult r = env.step(Action::TurnRight);
  CHECK(r.reward == -0.005);
  CHECK_FALSE(r.terminated);
  CHECK_FALSE(r.truncated);
  CHECK(r.rho == env.rho());
  CHECK(r.steps == 2);
}

TEST_CASE("step limit truncates without terminating") {
  EnvConfig cfg;
  cfg.map_id = open30_map();
  cfg.obstacle_count = 0;
  cfg.max_steps = 3;
  ExploreEnv env(cfg);
  env.reset(11);

  StepResult r1 = env.step(Action::TurnLeft);
  CHECK_FALSE(r1.truncated);
  StepResult r2 = env.step(Action::TurnRight);
  CHECK_FALSE(r2.truncated);
  StepResult r3 = env.step(Action::TurnLeft);
  CHECK(r3.truncated);
  CHECK_FALSE(r3.terminated);
  CHECK(r3.steps == 3);
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(Action::Forward), std::logic_error);
}

TEST_CASE("reset: pose comes from the base map, then obstacles avoid it") {
  EnvConfig cfg;
  cfg.map_id = "level-1";
  cfg.obstacle_count = 4;
  ExploreEnv env(cfg);

  for (std::uint64_t seed : {1ull, 2ull, 42ull, 1234ull}) {
    env.reset(seed);
    // the start pose is drawn from the unobstructed map's free cells
    Rng rng(seed);
    CHECK(env.reset_pose() == random_free_pose(env.base_map(), rng));

    const auto& obs = env.obstacles();
    REQUIRE(static_cast<int>(obs.size()) == 4);
    for (auto [r, c] : obs) {
      CHECK(env.base_map().at(r, c) == Cell::Free);
      CHECK(env.map().at(r, c) == Cell::Occupied);
      int dr = std::abs(r - env.reset_pose().row);
      int dc = std::abs(c - env.reset_pose().col);
      CHECK(std::max(dr, dc) > 1);
    }
    CHECK(free_cells_connected(env.map()));
    CHECK(env.map().observable_count > 0);
    CHECK(env.steps() == 0);
  }

  // same seed, same episode
  Observation a = env.reset(99);
  Pose pa = env.pose();
  auto obs_a = env.obstacles();
  Observation b = env.reset(99);
  CHECK(pa == env.pose());
  CHECK(obs_a == env.obstacles());
  CHECK(a.lem == b.lem);
  CHECK(a.gem == b.gem);
  CHECK(a.aux == b.aux);
}

TEST_CASE("random walk matches a mirrored environment built from primitives") {
  EnvConfig cfg;
  cfg.map_id = "level-1";
  cfg.obstacle_count = 4;
  cfg.max_steps = 60;
  ExploreEnv env(cfg);
  Rng rng(2025);

  int episodes_seen = 0;
  for (int episode = 0; episode < 6; ++episode) {
    env.reset(rng.next_u64());
    ++episodes_seen;

    // mirror state
    const GroundTruthMap& map = env.map();
    BeliefMap belief = BeliefMap::unknown(map.height, map.width);
    Pose pose = env.pose();
    LidarScan s = scan_and_integrate(map, pose, cfg.lidar, belief);
    CHECK(belief.known_count == env.belief().known_count);
    double rho = static_cast<double>(belief.known_count) / map.observable_count;
    CHECK(env.rho() == rho);

    for (int t = 1; t <= cfg.max_steps && !env.done(); ++t) {
      Action a = static_cast<Action>(rng.uniform_int(kActionCount));
      StepResult r = env.step(a);

      double want_reward;
      bool want_term = false, want_succ = false, want_coll = false;
      MoveResult mv = apply_action(map, pose, a);
      if (mv.collided) {
        want_reward = -1.005;
        want_term = true;
        want_coll = true;
      } else {
        pose = mv.pose;
        s = scan_and_integrate(map, pose, cfg.lidar, belief);
        double rho2 = static_cast<double>(belief.known_count) / map.observable_count;
        if (rho2 > rho)
          want_reward = std::min(10.0 * (rho2 * rho2 - rho * rho), 1.0);
        else
          want_reward = -0.005;
        rho = rho2;
        if (rho >= cfg.success_threshold) {
          want_reward += 1.0;
          want_term = true;
          want_succ = true;
        }
      }
      bool want_trunc = !want_term && t >= cfg.max_steps;

      CHECK(r.reward == doctest::Approx(want_reward).epsilon(1e-12));
      CHECK(r.terminated == want_term);
      CHECK(r.truncated == want_trunc);
      CHECK(r.collided == want_coll);
      CHECK(r.succeeded == want_succ);
      CHECK(r.steps == t);
      CHECK_FALSE((r.terminated && r.truncated));
      if (!want_coll) {
        CHECK(r.rho == doctest::Approx(rho).epsilon(1e-12));
        CHECK(env.belief().known_count == belief.known_count);
        CHECK(env.pose() == pose);
      }
    }
  }
  CHECK(episodes_seen == 6);
}

TEST_CASE("vec env: lockstep stepping with auto-reset") {
  EnvConfig cfg;
  cfg.map_id = one_cell_map();
  cfg.obstacle_count = 0;
  VecEnv vec(123, 1);
  vec.add_envs(cfg, 1, 3);
  REQUIRE(vec.slot_count() == 3);
  for (int i = 0; i < 3; ++i) CHECK(vec.level_of(i) == 1);

  // every forward collides; each step ends one episode per slot and the slot
  // comes back freshly reset
  for (int round = 0; round < 3; ++round) {
    std::vector<double> reset_rho;
    for (int i = 0; i < 3; ++i) reset_rho.push_back(vec.env(i).rho());
    auto out = vec.step(std::vector<Action>(3, Action::Forward));
    REQUIRE(out.size() == 3u);
    for (int i = 0; i < 3; ++i) {
      const auto& o = out[i];
      CHECK(o.reward == -1.005);
      CHECK(o.terminated);
      CHECK_FALSE(o.truncated);
      CHECK(o.level == 1);
      REQUIRE(o.final_obs.has_value());
      // a collision never rescans, so the episode ends at its reset coverage
      CHECK(o.episode_rho == reset_rho[i]);
      CHECK(o.episode_steps == 1);
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(vec.env(i).steps() == 0);
      CHECK_FALSE(vec.env(i).done());
    }
  }

  CHECK_THROWS_AS(vec.step(std::vector<Action>(2, Action::Forward)), std::logic_error);
}

TEST_CASE("vec env: mid-flight episodes survive add_envs") {
  EnvConfig cfg;
  cfg.map_id = open30_map();
  cfg.obstacle_count = 0;
  VecEnv vec(5, 1);
  vec.add_envs(cfg, 1, 2);

  vec.step({Action::TurnLeft, Action::TurnLeft});
  vec.step({Action::TurnLeft, Action::TurnRight});
  Pose p0 = vec.env(0).pose();
  int known0 = vec.env(0).belief().known_count;
  CHECK(vec.env(0).steps() == 2);

  vec.add_envs(cfg, 2, 2);
  REQUIRE(vec.slot_count() == 4);
  CHECK(vec.env(2).steps() == 0);
  CHECK(vec.env(3).steps() == 0);
  CHECK(vec.level_of(2) == 2);

  auto out = vec.step({Action::TurnRight, Action::TurnRight, Action::TurnLeft, Action::TurnLeft});
  CHECK(vec.env(0).steps() == 3);
  CHECK(vec.env(0).pose().row == p0.row);
  CHECK(vec.env(0).pose().col == p0.col);
  CHECK(vec.env(0).pose().heading == turn_right(p0.heading));
  CHECK(vec.env(0).belief().known_count >= known0);
  CHECK(out[2].level == 2);
}

TEST_CASE("vec env: slot seed streams are never reused") {
  EnvConfig cfg;
  cfg.map_id = "level-1";
  VecEnv vec(77, 1);
  vec.add_envs(cfg, 1, 2);
  std::vector<Pose> first = {vec.env(0).reset_pose(), vec.env(1).reset_pose()};
  auto obst0 = vec.env(0).obstacles();

  vec.clear();
  CHECK(vec.slot_count() == 0);
  vec.add_envs(cfg, 1, 2);
  std::vector<Pose> second = {vec.env(0).reset_pose(), vec.env(1).reset_pose()};
  bool identical = first[0] == second[0] && first[1] == second[1] &&
                   obst0 == vec.env(0).obstacles();
  CHECK_FALSE(identical);
}

TEST_CASE("vec env: results do not depend on the thread count") {
  EnvConfig cfg;
  cfg.map_id = "level-1";
  cfg.obstacle_count = 4;
  cfg.max_steps = 25;

  auto run = [&](int threads) {
    VecEnv vec(9001, threads);
    vec.add_envs(cfg, 1, 5);
    Rng act(55);
    std::vector<std::vector<SlotStep>> history;
    for (int t = 0; t < 40; ++t) {
      std::vector<Action> actions;
      for (int i = 0; i < vec.slot_count(); ++i)
        actions.push_back(static_cast<Action>(act.uniform_int(kActionCount)));
      history.push_back(vec.step(actions));
    }
    std::vector<Observation> finals;
    for (int i = 0; i < vec.slot_count(); ++i) finals.push_back(vec.observation(i));
    return std::pair{std::move(history), std::move(finals)};
  };

  auto [h1, f1] = run(1);
  auto [h3, f3] = run(3);
  REQUIRE(h1.size() == h3.size());
  for (std::size_t t = 0; t < h1.size(); ++t) {
    REQUIRE(h1[t].size() == h3[t].size());
    for (std::size_t i = 0; i < h1[t].size(); ++i) {
      CHECK(h1[t][i].reward == h3[t][i].reward);
      CHECK(h1[t][i].terminated == h3[t][i].terminated);
      CHECK(h1[t][i].truncated == h3[t][i].truncated);
      CHECK(h1[t][i].episode_rho == h3[t][i].episode_rho);
      CHECK(h1[t][i].episode_steps == h3[t][i].episode_steps);
      CHECK(h1[t][i].final_obs.has_value() == h3[t][i].final_obs.has_value());
      if (h1[t][i].final_obs)
        CHECK(h1[t][i].final_obs->lem == h3[t][i].final_obs->lem);
    }
  }
  for (std::size_t i = 0; i < f1.size(); ++i) {
    CHECK(f1[i].lem == f3[i].lem);
    CHECK(f1[i].gem == f3[i].gem);
    CHECK(f1[i].aux == f3[i].aux);
  }
}
