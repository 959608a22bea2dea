#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mazerl/env.hpp"
#include "support/test_support.hpp"

using namespace mazerl;
namespace ts = mazerl::testing;

TEST_CASE("generate_maze: 7x7 with 14 traps is solvable and well-formed") {
  const Maze maze = generate_maze(0, 7, 14);
  CHECK(maze.side() == 7);
  CHECK(maze.traps().size() == 14);
  CHECK(maze.is_corner(maze.goal()));
  CHECK(!maze.is_trap(maze.start()));
  CHECK(!maze.is_trap(maze.goal()));
  CHECK(maze.start() != maze.goal());
  CHECK(maze.solvable());
  std::set<Cell> distinct(maze.traps().begin(), maze.traps().end());
  CHECK(distinct.size() == 14);
  CHECK(distinct.count(maze.start()) == 0);
  CHECK(distinct.count(maze.goal()) == 0);
}

TEST_CASE("generate_maze: deterministic per seed, varies across seeds") {
  const Maze a = generate_maze(3, 7, 14);
  const Maze b = generate_maze(3, 7, 14);
  CHECK(a.traps() == b.traps());
  CHECK(a.start() == b.start());
  CHECK(a.goal() == b.goal());
  bool any_diff = false;
  for (std::uint64_t s = 4; s < 12; ++s) {
    const Maze c = generate_maze(s, 7, 14);
    if (c.traps() != a.traps() || c.start() != a.start()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("generate_maze: trap-free 3x3 is always solvable") {
  const Maze maze = generate_maze(0, 3, 0);
  CHECK(maze.traps().empty());
  CHECK(maze.solvable());
}

TEST_CASE("generate_maze: rejects densities with no room") {
  CHECK_THROWS_AS(generate_maze(0, 3, 7), std::invalid_argument);
  CHECK_THROWS_AS(generate_maze(0, 2, 0), std::invalid_argument);
}

TEST_CASE("goal corner is roughly uniform over seeds") {
  std::set<Cell> seen;
  for (std::uint64_t s = 0; s < 40; ++s) {
    seen.insert(generate_maze(s, 5, 3).goal());
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("build_instruction reverses token order") {
  const Trajectory gold{{Action::Right, Action::Up, Action::Left}};
  const std::vector<Action> reversed = build_instruction(gold, true);
  CHECK(reversed == std::vector<Action>{Action::Left, Action::Up, Action::Right});
  const std::vector<Action> forward = build_instruction(gold, false);
  CHECK(forward == std::vector<Action>{Action::Right, Action::Up, Action::Left});

  const Trajectory gold2{{Action::Right, Action::Up, Action::Up, Action::Right}};
  CHECK(build_instruction(gold2, false) ==
        std::vector<Action>{Action::Right, Action::Up, Action::Up, Action::Right});

  const Trajectory single{{Action::Down}};
  CHECK(build_instruction(single, true) == build_instruction(single, false));
}

TEST_CASE("synthesize_instruction: gold is a shortest trap-avoiding path") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Maze maze = generate_maze(s, 7, 14);
    const auto [instruction, gold] = synthesize_instruction(maze, true);
    CHECK(instruction.size() == gold.size());
    const ExecutionResult res =
        execute(maze, gold, static_cast<int>(gold.size()));
    CHECK(res.reached_goal);
    CHECK(!res.trapped);
    // No successful path can be shorter: BFS gold is minimal.
    for (const Trajectory& t :
         ts::enumerate_up_to(std::min<int>(4, static_cast<int>(gold.size()) - 1))) {
      CHECK(!execute(maze, t, static_cast<int>(t.size())).reached_goal);
    }
    if (gold.size() > 4) break;  // enumeration cost guard; sample a few mazes
  }
}

TEST_CASE("synthesize_instruction: deterministic tie-break") {
  const Maze maze = generate_maze(11, 5, 4);
  const auto [i1, g1] = synthesize_instruction(maze, true);
  const auto [i2, g2] = synthesize_instruction(maze, true);
  CHECK(g1 == g2);
  CHECK(i1 == i2);
}

TEST_CASE("reversal involution: reversing the reversed instruction recovers "
          "the forward one") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Maze maze = generate_maze(s, 6, 8);
    const auto [rev, gold_r] = synthesize_instruction(maze, true);
    const auto [fwd, gold_f] = synthesize_instruction(maze, false);
    CHECK(gold_r == gold_f);
    std::vector<Action> unreversed(rev.rbegin(), rev.rend());
    CHECK(unreversed == fwd);
  }
}

TEST_CASE("execute: empty sequence does not reach the goal") {
  const Context ctx = ts::fig_context();
  const ExecutionResult res = execute(ctx.maze, Trajectory{}, ctx.max_steps);
  CHECK(!res.reached_goal);
  CHECK(res.steps_used == 0);
  CHECK(res.final_cell == ctx.maze.start());
}

TEST_CASE("execute: the worked example's three successful paths") {
  const Context ctx = ts::fig_context();
  CHECK(execute(ctx.maze, ctx.gold, ctx.max_steps).reached_goal);
  CHECK(execute(ctx.maze, ts::fig_detour(), ctx.max_steps).reached_goal);
  CHECK(execute(ctx.maze, ts::fig_alternate(), ctx.max_steps).reached_goal);
  // The detour needs all six steps even though gold takes four.
  CHECK(execute(ctx.maze, ts::fig_detour(), ctx.max_steps).steps_used == 6);
}

TEST_CASE("execute: stepping into a trap halts") {
  // Down leads into the trap at (1,0) on the second step.
  Maze maze(3, {Cell{1, 0}}, Cell{0, 1}, Cell{2, 2});
  const Trajectory traj{{Action::Left, Action::Down, Action::Down}};
  const ExecutionResult res = execute(maze, traj, 5);
  CHECK(res.trapped);
  CHECK(!res.reached_goal);
  CHECK(res.steps_used == 2);
  CHECK(res.final_cell == Cell{1, 0});
}

TEST_CASE("execute: wall bumps consume steps without moving") {
  Maze maze(3, {}, Cell{0, 0}, Cell{2, 2});
  const Trajectory traj{{Action::Up, Action::Up, Action::Up}};
  const ExecutionResult res = execute(maze, traj, 3);
  CHECK(res.final_cell == Cell{0, 0});
  CHECK(res.steps_used == 3);
  CHECK(!res.reached_goal);
  CHECK(!res.trapped);
}

TEST_CASE("execute properties: step budget respected, outcomes exclusive") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const Maze maze = generate_maze(rng.next_u64(), 5, 5);
    Trajectory traj;
    const int len = 1 + rng.uniform_int(8);
    for (int t = 0; t < len; ++t) {
      traj.actions.push_back(action_from_index(rng.uniform_int(4)));
    }
    const int max_steps = 1 + rng.uniform_int(6);
    const ExecutionResult res = execute(maze, traj, max_steps);
    CHECK(res.steps_used <= max_steps);
    CHECK(res.steps_used <= static_cast<int>(traj.size()));
    CHECK(!(res.trapped && res.reached_goal));
  }
}

TEST_CASE("underspecified vs oracle reward on the worked example") {
  const Context ctx = ts::fig_context();
  CHECK(underspecified_reward(ctx, ctx.gold) == 1);
  CHECK(oracle_reward(ctx, ctx.gold) == 1);
  CHECK(underspecified_reward(ctx, ts::fig_detour()) == 1);
  CHECK(oracle_reward(ctx, ts::fig_detour()) == 0);
  CHECK(underspecified_reward(ctx, ts::fig_alternate()) == 1);
  CHECK(oracle_reward(ctx, ts::fig_alternate()) == 0);

  Trajectory off_goal{{Action::Down}};
  CHECK(underspecified_reward(ctx, off_goal) == 0);

  // A padded gold still reaches the goal (execution halts there) but is no
  // longer an exact match.
  Trajectory padded = ctx.gold;
  padded.actions.push_back(Action::Up);
  CHECK(underspecified_reward(ctx, padded) == 1);
  CHECK(oracle_reward(ctx, padded) == 0);
}

TEST_CASE("oracle reward refines the underspecified one (enumeration)") {
  const Context ctx = ts::unique_gold_context();
  for (const Trajectory& t : ts::enumerate_up_to(ctx.max_steps)) {
    if (oracle_reward(ctx, t) == 1) CHECK(underspecified_reward(ctx, t) == 1);
  }
  // And a generated context, where spurious successes exist.
  const Context gen = make_context("g", generate_maze(5, 5, 4), true);
  int oracle_hits = 0;
  for (const Trajectory& t :
       ts::enumerate_up_to(std::min(gen.max_steps, 5))) {
    if (oracle_reward(gen, t) == 1) {
      ++oracle_hits;
      CHECK(underspecified_reward(gen, t) == 1);
    }
  }
  if (gen.gold.size() <= 5) CHECK(oracle_hits == 1);
}

TEST_CASE("spurious_candidates: none requested, none returned") {
  CHECK(spurious_candidates(ts::fig_context(), 0, 0).empty());
}

TEST_CASE("spurious_candidates: found trajectories succeed and differ from "
          "gold") {
  const Context ctx = ts::fig_context();
  const auto cands = spurious_candidates(ctx, 2, 7);
  REQUIRE(cands.size() == 2);
  for (const Trajectory& t : cands) {
    CHECK(underspecified_reward(ctx, t) == 1);
    CHECK(oracle_reward(ctx, t) == 0);
  }
  CHECK(!(cands[0] == cands[1]));
  // Deterministic per seed.
  const auto again = spurious_candidates(ctx, 2, 7);
  REQUIRE(again.size() == 2);
  CHECK(again[0] == cands[0]);
  CHECK(again[1] == cands[1]);
}

TEST_CASE("spurious_candidates: empty when gold is the only success") {
  const Context ctx = ts::unique_gold_context();
  // Brute-force confirmation that gold really is alone.
  int successes = 0;
  for (const Trajectory& t : ts::enumerate_up_to(ctx.max_steps)) {
    successes += underspecified_reward(ctx, t);
  }
  CHECK(successes == 1);
  CHECK(spurious_candidates(ctx, 4, 0, 20000).empty());
}

TEST_CASE("generate_dataset: split sizes") {
  const Dataset small = generate_dataset(1, 5, 4, 10, 5, true);
  CHECK(small.train.size() == 8);
  CHECK(small.val.size() == 2);
  CHECK(small.test.size() == 5);

  const Dataset big = generate_dataset(1, 7, 14, 300, 300, true);
  CHECK(big.train.size() == 240);
  CHECK(big.val.size() == 60);
  CHECK(big.test.size() == 300);
}

TEST_CASE("generate_dataset: ids disjoint, gold rewarded, budget sane") {
  const Dataset ds = generate_dataset(2, 7, 14, 40, 10, true);
  std::set<std::string> ids;
  auto check_split = [&](std::span<const Context> split) {
    for (const Context& ctx : split) {
      CHECK(ids.insert(ctx.id).second);
      CHECK(underspecified_reward(ctx, ctx.gold) == 1);
      CHECK(oracle_reward(ctx, ctx.gold) == 1);
      CHECK(ctx.max_steps == static_cast<int>(ctx.gold.size()) + 2);
      CHECK(ctx.instruction.size() == ctx.gold.size());
      CHECK(ctx.reversed);
    }
  };
  check_split(ds.train);
  check_split(ds.val);
  check_split(ds.test);
}

TEST_CASE("dataset serialization is deterministic and round-trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mazerl_env_test";
  fs::create_directories(dir);

  const Dataset a = generate_dataset(9, 5, 4, 10, 5, true);
  const Dataset b = generate_dataset(9, 5, 4, 10, 5, true);
  save_dataset(a, dir / "a.jsonl");
  save_dataset(b, dir / "b.jsonl");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));

  const Dataset loaded = load_dataset(dir / "a.jsonl");
  CHECK(loaded.train.size() == a.train.size());
  CHECK(loaded.val.size() == a.val.size());
  CHECK(loaded.test.size() == a.test.size());
  CHECK(loaded.seed == a.seed);
  CHECK(loaded.gen.reverse == a.gen.reverse);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(loaded.train[i].id == a.train[i].id);
    CHECK(loaded.train[i].gold == a.train[i].gold);
    CHECK(loaded.train[i].instruction == a.train[i].instruction);
    CHECK(loaded.train[i].max_steps == a.train[i].max_steps);
    CHECK(loaded.train[i].maze.traps() == a.train[i].maze.traps());
    CHECK(loaded.train[i].maze.start() == a.train[i].maze.start());
    CHECK(loaded.train[i].maze.goal() == a.train[i].maze.goal());
  }
  fs::remove_all(dir);
}

TEST_CASE("generate_dataset parallel matches serial") {
  const Dataset s = generate_dataset(4, 5, 4, 10, 5, true, ExecMode::Serial);
  const Dataset p = generate_dataset(4, 5, 4, 10, 5, true, ExecMode::Parallel);
  REQUIRE(s.train.size() == p.train.size());
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    CHECK(s.train[i].gold == p.train[i].gold);
    CHECK(s.train[i].maze.traps() == p.train[i].maze.traps());
  }
}
