#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mazerl/actions.hpp"
#include "mazerl/parallel.hpp"

namespace mazerl {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Square grid with deadly trap cells, a corner goal, and a start cell.
// The agent never observes the grid; it only acts on the instruction text.
class Maze {
 public:
  Maze() = default;
  Maze(int n, std::vector<Cell> traps, Cell start, Cell goal);

  int side() const { return n_; }
  Cell start() const { return start_; }
  Cell goal() const { return goal_; }
  const std::vector<Cell>& traps() const { return traps_; }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < n_ && c.col >= 0 && c.col < n_;
  }
  bool is_trap(Cell c) const { return trap_mask_[c.row * n_ + c.col] != 0; }
  bool is_corner(Cell c) const;

  // True if a trap-avoiding path start -> goal exists.
  bool solvable() const;

 private:
  int n_ = 0;
  std::vector<Cell> traps_;  // sorted, canonical for serialization
  Cell start_{};
  Cell goal_{};
  std::vector<std::uint8_t> trap_mask_;
};

struct Trajectory {
  std::vector<Action> actions;
  std::size_t size() const { return actions.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct ExecutionResult {
  bool reached_goal = false;
  bool trapped = false;
  Cell final_cell{};
  int steps_used = 0;
};

// One task instance: maze plus the instruction encoding its gold trajectory.
struct Context {
  std::string id;
  Maze maze;
  std::vector<Action> instruction;  // tokens are direction words
  Trajectory gold;
  int max_steps = 0;
  bool reversed = false;  // instruction order relative to the gold actions
};

struct GenParams {
  int n = 7;
  int k = 14;
  int n_train_val = 300;
  int n_test = 300;
  bool reverse = true;
};

struct Dataset {
  std::vector<Context> train;
  std::vector<Context> val;
  std::vector<Context> test;
  std::uint64_t seed = 0;
  GenParams gen;
};

// Samples a corner goal, a start cell, then k distinct traps on the remaining
// cells; resamples the whole layout until solvable (up to 1000 attempts).
// Throws std::invalid_argument for n < 3 or k >= n*n - 2, std::runtime_error
// if no solvable layout is found.
Maze generate_maze(std::uint64_t seed, int n, int k);

// Token i names gold action i, or gold action L-1-i when reverse is set.
std::vector<Action> build_instruction(const Trajectory& gold, bool reverse);

// Gold is the shortest trap-avoiding path, ties broken by the fixed action
// order Up < Down < Left < Right.
std::pair<std::vector<Action>, Trajectory> synthesize_instruction(
    const Maze& maze, bool reverse);

// Simulates from the start cell. Off-grid moves bump the wall (position
// unchanged, step consumed). Entering a trap or the goal halts, as does
// exhausting max_steps.
ExecutionResult execute(const Maze& maze, const Trajectory& actions,
                        int max_steps);

// 1 iff execution reaches the goal within the context's step budget.
int underspecified_reward(const Context& ctx, const Trajectory& a);

// 1 iff the action sequence matches the gold trajectory exactly.
int oracle_reward(const Context& ctx, const Trajectory& a);

inline constexpr int kDefaultSpuriousBudget = 10000;

// Uniform random action-sequence search over lengths <= max_steps for
// successful trajectories distinct from gold. Deduplicated; may return fewer
// than requested when the budget runs out.
std::vector<Trajectory> spurious_candidates(
    const Context& ctx, int n_spurious, std::uint64_t seed,
    int sample_budget = kDefaultSpuriousBudget);

Context make_context(std::string id, Maze maze, bool reverse);

// n_train_val contexts split 80/20 into train/val plus n_test test contexts,
// all drawn from the same distribution.
Dataset generate_dataset(std::uint64_t seed, int n, int k, int n_train_val,
                         int n_test, bool reverse,
                         ExecMode mode = ExecMode::Serial);

// JSONL: a header record followed by one context per line.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string context_to_jsonl(const Context& ctx, const std::string& split);

}  // namespace mazerl
