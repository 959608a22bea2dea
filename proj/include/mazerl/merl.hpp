#pragma once

#include <array>
#include <span>
#include <vector>

#include "mazerl/buffer.hpp"
#include "mazerl/features.hpp"
#include "mazerl/objectives.hpp"
#include "mazerl/policy.hpp"

namespace mazerl {

using MetaVec = std::array<double, AuxRewardParams::kDim>;

struct MerlConfig {
  double inner_lr = 0.1;    // plain ascent step for the policy
  double meta_lr = 0.01;    // Adam step for the reward parameters
  double entropy_weight = 2e-4;
  int n_explore = 1;
  int epochs = 1000;
  double grad_clip = 1e-2;  // global-norm clip on the meta-gradient
  std::uint64_t seed = 0;
  int batch_size = 0;  // 0 = full batch
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int metrics_every = 100;
};

// Exact gradient in theta of the buffer-restricted training objective
//   sum_x sum_{a in B(x)} R_phi(a) pi(a|x) + tau * H_B(x),
// where H_B is the entropy of pi restricted to the buffered candidates.
PolicyVec train_objective_grad(const PolicyParams& theta,
                               const AuxRewardParams& phi,
                               std::span<const Context> train,
                               const ExperienceBuffer& buf_train, double tau,
                               ExecMode mode = ExecMode::Serial);

// sum_x sum_{a in B_val(x)} R(a) pi(a|x). Only the plain success reward
// cached in the buffer enters here; the signature takes no phi.
double val_objective(const PolicyParams& theta, std::span<const Context> val,
                     const ExperienceBuffer& buf_val,
                     ExecMode mode = ExecMode::Serial);

PolicyVec val_objective_grad(const PolicyParams& theta,
                             std::span<const Context> val,
                             const ExperienceBuffer& buf_val,
                             ExecMode mode = ExecMode::Serial);

// d val_objective(theta') / d phi through the one-step lookahead
// theta' = theta + alpha * train_objective_grad. Exact: the reward parameters
// enter the inner objective linearly per trajectory.
MetaVec meta_gradient(const PolicyParams& theta, const AuxRewardParams& phi,
                      std::span<const Context> train,
                      const ExperienceBuffer& buf_train,
                      std::span<const Context> val,
                      const ExperienceBuffer& buf_val, double alpha, double tau,
                      ExecMode mode = ExecMode::Serial);

struct MerlEpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double o_val = 0.0;
  double meta_grad_norm = 0.0;
};

struct MerlResult {
  PolicyParams theta;
  AuxRewardParams phi;
  std::vector<MerlEpochMetrics> log;
};

// Joint loop: explore into both buffers, take the one-step policy update
// under the current reward parameters, then update the reward parameters
// along the meta-gradient (Adam + clip) and commit both.
MerlResult merl_train(std::span<const Context> train,
                      std::span<const Context> val,
                      ExperienceBuffer& buf_train, ExperienceBuffer& buf_val,
                      const MerlConfig& cfg, const PolicyParams& warm_start,
                      ExecMode mode = ExecMode::Serial);

}  // namespace mazerl
