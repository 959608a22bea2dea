#pragma once

#include <span>
#include <vector>

#include "mazerl/buffer.hpp"
#include "mazerl/features.hpp"
#include "mazerl/gp.hpp"
#include "mazerl/objectives.hpp"

namespace mazerl {

struct BorlConfig {
  int trials = 60;            // K
  TrainConfig trial_train;    // per-trial policy optimization (epochs = T)
  double box_lo = -1.0;       // reward-parameter search box per dimension
  double box_hi = 1.0;
  int batch = 1;              // proposals per surrogate refit
  int n_explore = 1;
  int acq_restarts = 256;
  std::uint64_t seed = 0;
};

// Keeps, per context, every trajectory achieving the maximum linear reward
// score (ties kept). Idempotent; empty contexts stay empty.
ExperienceBuffer filter_buffer_by_reward(const ExperienceBuffer& buf,
                                         const AuxRewardParams& phi,
                                         std::span<const Context> contexts);

// Accept a successful candidate only when its score strictly exceeds every
// score currently in the context's buffer (or the buffer is empty).
bool trial_exploration_accept(double candidate_score,
                              std::span<const double> buffer_scores);

struct TrialRecord {
  int k = 0;
  AuxRewardParams phi;
  double val_acc = 0.0;
  double best_so_far = 0.0;
};

struct BorlResult {
  AuxRewardParams best_phi;
  PolicyParams best_theta;
  double best_val_acc = 0.0;
  std::vector<TrialRecord> log;
};

// Outer-loop reward search: propose reward parameters by expected
// improvement, filter the base buffer, run a policy optimization trial with
// the plain success reward, score it by greedy validation accuracy, and
// refit the surrogate. Trial-level failures score 0 instead of aborting.
BorlResult borl_run(std::span<const Context> train,
                    std::span<const Context> val,
                    const ExperienceBuffer& base_buffer,
                    const PolicyParams& warm_start, const BorlConfig& cfg,
                    ExecMode mode = ExecMode::Serial);

}  // namespace mazerl
