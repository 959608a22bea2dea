#include "mazerl/policy.hpp"

#include <algorithm>
#include <cmath>

namespace mazerl {

namespace {

// prev < 0 means step 0 (no bigram contribution).
inline std::array<double, 4> logits_at(const PolicyParams& theta,
                                       std::span<const Action> instruction,
                                       bool reversed, int prev, int t) {
  const int len = static_cast<int>(instruction.size());
  const int w = index(instruction[aligned_token_pos(len, t, reversed)]);
  std::array<double, 4> logits;
  for (int c = 0; c < 4; ++c) {
    double v = theta.w[kAlignBase + 4 * w + c] + theta.w[kBiasBase + c];
    if (prev >= 0) v += theta.w[kBigramBase + 4 * prev + c];
    logits[c] = v;
  }
  return logits;
}

struct StepDist {
  std::array<double, 4> prob;
  double log_z;       // relative to the max logit
  double max_logit;
};

inline StepDist softmax4(const std::array<double, 4>& logits) {
  StepDist d;
  d.max_logit = std::max(std::max(logits[0], logits[1]),
                         std::max(logits[2], logits[3]));
  double z = 0.0;
  for (int c = 0; c < 4; ++c) {
    d.prob[c] = std::exp(logits[c] - d.max_logit);
    z += d.prob[c];
  }
  for (int c = 0; c < 4; ++c) d.prob[c] /= z;
  d.log_z = std::log(z);
  return d;
}

}  // namespace

std::array<double, 4> step_logits(const PolicyParams& theta,
                                  std::span<const Action> instruction,
                                  bool reversed,
                                  std::span<const Action> prefix, int t) {
  const int prev = prefix.empty() ? -1 : index(prefix.back());
  return logits_at(theta, instruction, reversed, prev, t);
}

double log_prob(const PolicyParams& theta, const Context& ctx,
                const Trajectory& a) {
  double lp = 0.0;
  int prev = -1;
  for (std::size_t t = 0; t < a.actions.size(); ++t) {
    const auto logits = logits_at(theta, ctx.instruction, ctx.reversed, prev,
                                  static_cast<int>(t));
    const StepDist d = softmax4(logits);
    const int c = index(a.actions[t]);
    lp += logits[c] - d.max_logit - d.log_z;
    prev = c;
  }
  return lp;
}

LogProbGrad log_prob_grad(const PolicyParams& theta, const Context& ctx,
                          const Trajectory& a) {
  LogProbGrad out;
  const int len = static_cast<int>(ctx.instruction.size());
  int prev = -1;
  for (std::size_t t = 0; t < a.actions.size(); ++t) {
    const int w =
        index(ctx.instruction[aligned_token_pos(len, static_cast<int>(t),
                                                ctx.reversed)]);
    const auto logits = logits_at(theta, ctx.instruction, ctx.reversed, prev,
                                  static_cast<int>(t));
    const StepDist d = softmax4(logits);
    const int c = index(a.actions[t]);
    out.logp += logits[c] - d.max_logit - d.log_z;
    out.grad[kAlignBase + 4 * w + c] += 1.0;
    out.grad[kBiasBase + c] += 1.0;
    if (prev >= 0) out.grad[kBigramBase + 4 * prev + c] += 1.0;
    for (int k = 0; k < 4; ++k) {
      const double p = d.prob[k];
      out.grad[kAlignBase + 4 * w + k] -= p;
      out.grad[kBiasBase + k] -= p;
      if (prev >= 0) out.grad[kBigramBase + 4 * prev + k] -= p;
    }
    prev = c;
  }
  return out;
}

PolicyVec grad_log_prob(const PolicyParams& theta, const Context& ctx,
                        const Trajectory& a) {
  return log_prob_grad(theta, ctx, a).grad;
}

LengthDistribution LengthDistribution::for_context(const Context& ctx) {
  const int gold_len = static_cast<int>(ctx.gold.size());
  LengthDistribution d;
  d.lo = std::max(1, gold_len - 1);
  d.hi = std::min(gold_len + 2, ctx.max_steps);
  d.hi = std::max(d.hi, d.lo);
  return d;
}

Trajectory sample(const PolicyParams& theta, const Context& ctx, Rng& rng,
                  const LengthDistribution& lengths) {
  const int len = lengths.sample(rng);
  Trajectory traj;
  traj.actions.reserve(len);
  int prev = -1;
  for (int t = 0; t < len; ++t) {
    const auto logits = logits_at(theta, ctx.instruction, ctx.reversed, prev, t);
    const StepDist d = softmax4(logits);
    const double u = rng.uniform01();
    double acc = 0.0;
    int c = 3;
    for (int k = 0; k < 4; ++k) {
      acc += d.prob[k];
      if (u < acc) {
        c = k;
        break;
      }
    }
    traj.actions.push_back(action_from_index(c));
    prev = c;
  }
  return traj;
}

Trajectory greedy_decode(const PolicyParams& theta, const Context& ctx) {
  const int len = static_cast<int>(ctx.instruction.size());
  Trajectory traj;
  traj.actions.reserve(len);
  int prev = -1;
  for (int t = 0; t < len; ++t) {
    const auto logits = logits_at(theta, ctx.instruction, ctx.reversed, prev, t);
    int best = 0;
    for (int c = 1; c < 4; ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    traj.actions.push_back(action_from_index(best));
    prev = best;
  }
  return traj;
}

}  // namespace mazerl
