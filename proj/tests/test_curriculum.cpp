#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gx/common.hpp"
#include "gx/curriculum.hpp"
#include "gx/maps.hpp"

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

std::string write_room(int h, int w, const std::string& name) {
  std::ofstream out(name);
  out << save_map(open_room(h, w));
  return name;
}

struct TempFiles {
  ~TempFiles() {
    std::remove("test_cur_room.map");
    std::remove("test_cur_cell.map");
  }
} cleanup;

EnvConfig cheap_env() {
  EnvConfig cfg;
  cfg.map_id = write_room(10, 10, "test_cur_room.map");
  cfg.obstacle_count = 0;
  cfg.encoder.h = cfg.encoder.w = 12;
  return cfg;
}

// always turns left; deterministic and never collides
struct SpinPolicy : Policy {
  Action act(const Observation&, const ExploreEnv&) override { return Action::TurnLeft; }
};

// Plans a depth-first tour over the free cells of the episode's map and
// scans all four headings at every cell, which is exactly the definition of
// the observable set.
struct CoveragePolicy : Policy {
  std::vector<Action> plan;
  std::size_t next = 0;

  void on_episode_start(const ExploreEnv& env) override {
    plan.clear();
    next = 0;
    const GroundTruthMap& m = env.map();
    std::vector<char> seen(m.cells.size(), 0);
    Pose p = env.pose();
    seen[static_cast<std::size_t>(p.row) * m.width + p.col] = 1;
    Heading h = spin_here(p.heading);
    dfs(m, seen, p.row, p.col, h);
  }

  Action act(const Observation&, const ExploreEnv&) override {
    if (next < plan.size()) return plan[next++];
    return Action::TurnLeft;
  }

 private:
  Heading spin_here(Heading h) {
    for (int i = 0; i < 3; ++i) {
      plan.push_back(Action::TurnLeft);
      h = turn_left(h);
    }
    return h;
  }

  Heading face(Heading from, Heading to) {
    int diff = (static_cast<int>(to) - static_cast<int>(from) + 4) % 4;
    if (diff == 3) {
      plan.push_back(Action::TurnLeft);
    } else {
      for (int i = 0; i < diff; ++i) plan.push_back(Action::TurnRight);
    }
    return to;
  }

  Heading dfs(const GroundTruthMap& m, std::vector<char>& seen, int r, int c, Heading h) {
    for (Heading d : {Heading::North, Heading::East, Heading::South, Heading::West}) {
      auto [dr, dc] = heading_delta(d);
      int nr = r + dr, nc = c + dc;
      if (m.occupied(nr, nc)) continue;
      std::size_t i = static_cast<std::size_t>(nr) * m.width + nc;
      if (seen[i]) continue;
      seen[i] = 1;
      h = face(h, d);
      plan.push_back(Action::Forward);
      Heading back = dfs(m, seen, nr, nc, spin_here(d));
      Heading ret = turn_left(turn_left(d));
      h = face(back, ret);
      plan.push_back(Action::Forward);
    }
    return h;
  }
};

}  // namespace

TEST_CASE("ema tracker seeds on the first sample") {
  EmaTracker t;
  CHECK_FALSE(t.started);
  t.add(1.0);
  CHECK(t.started);
  CHECK(t.value == 1.0);
  t.add(0.5);
  CHECK(t.value == 0.9 * 1.0 + (1.0 - 0.9) * 0.5);
  double prev = t.value;
  t.add(0.0);
  CHECK(t.value == 0.9 * prev);
}

TEST_CASE("stage switch rule: ten evaluations, strictly above threshold") {
  std::vector<double> scores;
  // fewer than ten never switches, even if perfect
  for (int i = 0; i < 9; ++i) {
    scores.push_back(1.0);
    CHECK_FALSE(should_switch(scores));
  }
  scores.push_back(1.0);
  CHECK(should_switch(scores));

  // exactly the threshold does not switch
  std::vector<double> at(10, 0.95);
  CHECK_FALSE(should_switch(at));
  std::vector<double> above(10, 0.9500001);
  CHECK(should_switch(above));

  // only the trailing window counts
  std::vector<double> late(10, 0.0);
  for (int i = 0; i < 10; ++i) late.push_back(0.96);
  CHECK(should_switch(late));

  std::vector<double> early(10, 0.96);
  early.push_back(0.0);  // drags the trailing mean to 0.864
  CHECK_FALSE(should_switch(early));
}

TEST_CASE("mode parsing round-trips and rejects unknown names") {
  CHECK(parse_mode("ccrl") == CurriculumMode::Ccrl);
  CHECK(parse_mode("cl") == CurriculumMode::Cl);
  CHECK(parse_mode("flat") == CurriculumMode::Flat);
  CHECK_THROWS_AS(parse_mode("CCRL"), UsageError);
  CHECK_THROWS_AS(parse_mode(""), UsageError);
  for (CurriculumMode m : {CurriculumMode::Ccrl, CurriculumMode::Cl, CurriculumMode::Flat})
    CHECK(parse_mode(mode_name(m)) == m);
}

TEST_CASE("stage_levels per mode") {
  CHECK(stage_levels(CurriculumMode::Ccrl, 1, 3) == std::vector<int>{1});
  CHECK(stage_levels(CurriculumMode::Ccrl, 2, 3) == std::vector<int>{1, 2});
  CHECK(stage_levels(CurriculumMode::Ccrl, 3, 3) == std::vector<int>{1, 2, 3});
  CHECK(stage_levels(CurriculumMode::Cl, 1, 3) == std::vector<int>{1});
  CHECK(stage_levels(CurriculumMode::Cl, 3, 3) == std::vector<int>{3});
  CHECK(stage_levels(CurriculumMode::Flat, 1, 3) == std::vector<int>{1, 2, 3});
  CHECK(stage_levels(CurriculumMode::Flat, 2, 3) == std::vector<int>{1, 2, 3});
}

TEST_CASE("apply_stage shapes the pool per mode") {
  std::vector<EnvConfig> cfgs(3, cheap_env());

  auto levels_in = [](const VecEnv& pool) {
    std::vector<int> out;
    for (int i = 0; i < pool.slot_count(); ++i) out.push_back(pool.level_of(i));
    return out;
  };

  SUBCASE("growing union keeps old episodes alive") {
    VecEnv pool(1, 1);
    apply_stage(pool, CurriculumMode::Ccrl, 1, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 1, 1});

    for (int i = 0; i < 3; ++i) pool.step(std::vector<Action>(4, Action::TurnLeft));
    CHECK(pool.env(0).steps() == 3);

    apply_stage(pool, CurriculumMode::Ccrl, 2, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});
    CHECK(pool.env(0).steps() == 3);  // untouched
    CHECK(pool.env(4).steps() == 0);

    apply_stage(pool, CurriculumMode::Ccrl, 3, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3});
  }

  SUBCASE("union rebuilt from an empty pool") {
    VecEnv pool(2, 1);
    apply_stage(pool, CurriculumMode::Ccrl, 2, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});
  }

  SUBCASE("replacement keeps only the newest level") {
    VecEnv pool(3, 1);
    apply_stage(pool, CurriculumMode::Cl, 1, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 1, 1});
    apply_stage(pool, CurriculumMode::Cl, 2, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{2, 2, 2, 2});
    apply_stage(pool, CurriculumMode::Cl, 3, cfgs, 4);
    CHECK(levels_in(pool) == std::vector<int>{3, 3, 3, 3});
  }

  SUBCASE("flat trains on everything from the start") {
    VecEnv pool(4, 1);
    apply_stage(pool, CurriculumMode::Flat, 1, cfgs, 2);
    CHECK(levels_in(pool) == std::vector<int>{1, 1, 2, 2, 3, 3});
  }

  SUBCASE("stage bounds") {
    VecEnv pool(5, 1);
    CHECK_THROWS_AS(apply_stage(pool, CurriculumMode::Ccrl, 0, cfgs, 4), std::logic_error);
    CHECK_THROWS_AS(apply_stage(pool, CurriculumMode::Ccrl, 4, cfgs, 4), std::logic_error);
  }
}

TEST_CASE("run_episode bookkeeping on an instantly covered world") {
  GroundTruthMap cell = open_room(3, 3);
  {
    std::ofstream out("test_cur_cell.map");
    out << save_map(cell);
  }
  EnvConfig cfg;
  cfg.map_id = "test_cur_cell.map";
  cfg.obstacle_count = 0;
  cfg.lidar.fov_degrees = 360;
  cfg.encoder.h = cfg.encoder.w = 8;
  ExploreEnv env(cfg);

  SpinPolicy spin;
  EpisodeEval ev = run_episode(env, spin, 4);
  // the full-circle scan finishes the job at reset; the first step banks it
  CHECK(ev.final_rho == 1.0);
  CHECK(ev.steps == 1);
  CHECK(ev.success);
  CHECK_FALSE(ev.collided);
  REQUIRE(ev.explore_steps.has_value());
  CHECK(*ev.explore_steps == 0);
}

TEST_CASE("scripted full-coverage tour reaches rho exactly 1") {
  EnvConfig cfg;
  cfg.map_id = "level-1";
  cfg.obstacle_count = 4;
  cfg.max_steps = 8000;
  cfg.success_threshold = 1.0;

  ExploreEnv env(cfg);
  CoveragePolicy tour;
  for (std::uint64_t seed : {10ull, 20ull, 30ull}) {
    EpisodeEval ev = run_episode(env, tour, seed);
    CHECK(ev.final_rho == 1.0);
    CHECK(ev.success);
    CHECK_FALSE(ev.collided);
    REQUIRE(ev.explore_steps.has_value());
    CHECK(*ev.explore_steps > 0);
    CHECK(*ev.explore_steps <= ev.steps);
    CHECK(ev.steps < cfg.max_steps);
  }
}

TEST_CASE("evaluate_level: derived seeds, reproducible, aggregated") {
  EnvConfig cfg = cheap_env();
  cfg.max_steps = 40;
  SpinPolicy spin;

  LevelEval a = evaluate_level(cfg, 2, spin, 5, 999, 7);
  CHECK(a.level == 2);
  REQUIRE(a.episodes.size() == 5u);

  double sum = 0.0;
  for (const auto& ep : a.episodes) sum += ep.final_rho;
  CHECK(a.mean_rho == doctest::Approx(sum / 5.0).epsilon(1e-15));

  // bitwise reproducible
  LevelEval b = evaluate_level(cfg, 2, spin, 5, 999, 7);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.episodes[i].final_rho == b.episodes[i].final_rho);
    CHECK(a.episodes[i].steps == b.episodes[i].steps);
  }

  // episode seeds come from (master, eval_index, level, episode)
  ExploreEnv env(cfg);
  for (int ep = 0; ep < 5; ++ep) {
    std::uint64_t seed = derive_seed(999, "EVAL", {7, 2, static_cast<std::uint64_t>(ep)});
    EpisodeEval ev = run_episode(env, spin, seed);
    CHECK(ev.final_rho == a.episodes[static_cast<std::size_t>(ep)].final_rho);
    CHECK(ev.steps == a.episodes[static_cast<std::size_t>(ep)].steps);
  }

  // a different eval_index reseeds the episodes
  LevelEval c = evaluate_level(cfg, 2, spin, 5, 999, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < 5; ++i)
    any_diff = any_diff || a.episodes[i].final_rho != c.episodes[i].final_rho ||
               a.episodes[i].steps != c.episodes[i].steps;
  CHECK(any_diff);
}
