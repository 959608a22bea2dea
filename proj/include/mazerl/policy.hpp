#pragma once

#include <array>
#include <optional>
#include <span>

#include "mazerl/actions.hpp"
#include "mazerl/env.hpp"
#include "mazerl/rng.hpp"

namespace mazerl {

// Log-linear autoregressive policy over action sequences. Per decoding step
// the logit of a candidate action is the sum of three weights: an alignment
// weight for (aligned instruction token, candidate), a bigram weight for
// (previous action, candidate), and a per-action bias.
inline constexpr int kAlignBase = 0;
inline constexpr int kBigramBase = 16;
inline constexpr int kBiasBase = 32;
inline constexpr int kPolicyDim = 36;

struct PolicyParams {
  std::array<double, kPolicyDim> w{};
};

using PolicyVec = std::array<double, kPolicyDim>;

// Position of the instruction token aligned with decoding step t, clamped to
// the instruction. Reversed instructions read back to front.
constexpr int aligned_token_pos(int length, int t, bool reversed) {
  const int pos = reversed ? (length - 1 - t) : t;
  return pos < 0 ? 0 : (pos >= length ? length - 1 : pos);
}

// Logits over the four actions at step t; prefix only matters through its
// length and last action.
std::array<double, 4> step_logits(const PolicyParams& theta,
                                  std::span<const Action> instruction,
                                  bool reversed,
                                  std::span<const Action> prefix, int t);

double log_prob(const PolicyParams& theta, const Context& ctx,
                const Trajectory& a);

PolicyVec grad_log_prob(const PolicyParams& theta, const Context& ctx,
                        const Trajectory& a);

struct LogProbGrad {
  double logp = 0.0;
  PolicyVec grad{};
};

// log pi and its gradient in one pass.
LogProbGrad log_prob_grad(const PolicyParams& theta, const Context& ctx,
                          const Trajectory& a);

// Uniform over an integer range of trajectory lengths. Trajectory length is
// exogenous: the action alphabet carries no stop token.
struct LengthDistribution {
  int lo = 1;
  int hi = 1;
  static LengthDistribution for_context(const Context& ctx);
  static LengthDistribution fixed(int len) { return {len, len}; }
  int sample(Rng& rng) const {
    return lo + static_cast<int>(rng.uniform_int(
                    static_cast<std::uint32_t>(hi - lo + 1)));
  }
};

Trajectory sample(const PolicyParams& theta, const Context& ctx, Rng& rng,
                  const LengthDistribution& lengths);

// Stepwise argmax for exactly instruction-length steps; ties resolve to the
// lowest action index.
Trajectory greedy_decode(const PolicyParams& theta, const Context& ctx);

}  // namespace mazerl
