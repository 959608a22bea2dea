#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mazerl/env.hpp"
#include "mazerl/policy.hpp"

namespace mazerl::testing {

// All 4^len action sequences of a fixed length.
inline std::vector<Trajectory> enumerate_sequences(int len) {
  std::vector<Trajectory> out;
  std::size_t total = 1;
  for (int i = 0; i < len; ++i) total *= kNumActions;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    Trajectory t;
    std::size_t c = code;
    for (int i = 0; i < len; ++i) {
      t.actions.push_back(action_from_index(static_cast<int>(c % kNumActions)));
      c /= kNumActions;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// All sequences of length 1..max_len.
inline std::vector<Trajectory> enumerate_up_to(int max_len) {
  std::vector<Trajectory> out;
  for (int len = 1; len <= max_len; ++len) {
    auto seqs = enumerate_sequences(len);
    out.insert(out.end(), seqs.begin(), seqs.end());
  }
  return out;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h = 1e-5) {
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nb));
  return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

inline double max_abs_diff(std::span<const double> a,
                           std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// 5x5 maze matching the worked example used throughout the tests: the agent
// starts mid-maze at (2,2), the goal is the top-right corner, and the
// command "Right Up Up Right" encodes gold = (R, U, U, R) under reversal.
// Both a detoured 6-step path and an alternate 4-step path also succeed.
inline Context fig_context() {
  Maze maze(5, {Cell{0, 0}, Cell{1, 0}, Cell{3, 3}}, Cell{2, 2}, Cell{0, 4});
  Context ctx;
  ctx.id = "fig";
  ctx.maze = maze;
  ctx.gold.actions = {Action::Right, Action::Up, Action::Up, Action::Right};
  ctx.instruction = build_instruction(ctx.gold, true);
  ctx.max_steps = 6;
  ctx.reversed = true;
  return ctx;
}

inline Trajectory fig_detour() {  // succeeds in 6 steps
  return Trajectory{{Action::Left, Action::Right, Action::Right, Action::Up,
                     Action::Up, Action::Right}};
}

inline Trajectory fig_alternate() {  // succeeds in 4 steps, not gold
  return Trajectory{{Action::Up, Action::Right, Action::Right, Action::Up}};
}

// 3x3 maze where gold = (Up, Left) is the only successful sequence within
// the step budget: the direct left column is trapped and max_steps equals
// the gold length, so no padded variant fits.
inline Context unique_gold_context() {
  Maze maze(3, {Cell{1, 0}}, Cell{1, 1}, Cell{0, 0});
  Context ctx;
  ctx.id = "unique";
  ctx.maze = maze;
  ctx.gold.actions = {Action::Up, Action::Left};
  ctx.instruction = build_instruction(ctx.gold, true);
  ctx.max_steps = 2;
  ctx.reversed = true;
  return ctx;
}

// Trap-free context with a given gold length; used by the enumeration toys.
// The instruction length equals the gold length and max_steps is pinned so
// fixed-length enumeration matches the sampling space.
inline Context open_context(int gold_len, int max_steps, bool reversed = true) {
  const int n = std::max(3, gold_len + 1);
  // Gold walks up the first column to the top-left corner.
  Maze maze(n, {}, Cell{gold_len, 0}, Cell{0, 0});
  Context ctx;
  ctx.id = "open-" + std::to_string(gold_len);
  ctx.maze = maze;
  for (int i = 0; i < gold_len; ++i) ctx.gold.actions.push_back(Action::Up);
  ctx.instruction = build_instruction(ctx.gold, reversed);
  ctx.max_steps = max_steps;
  ctx.reversed = reversed;
  return ctx;
}

// Alignment weights that decode the gold trajectory for any context: each
// instruction token votes for the action it names.
inline PolicyParams gold_encoding_policy(double weight = 10.0) {
  PolicyParams theta;
  for (int w = 0; w < 4; ++w) theta.w[kAlignBase + 4 * w + w] = weight;
  return theta;
}

inline PolicyParams random_policy(std::uint64_t seed, double scale = 1.0) {
  PolicyParams theta;
  Rng rng(seed);
  for (double& w : theta.w) w = rng.uniform(-scale, scale);
  return theta;
}

}  // namespace mazerl::testing
