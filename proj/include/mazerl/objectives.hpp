#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mazerl/buffer.hpp"
#include "mazerl/env.hpp"
#include "mazerl/parallel.hpp"
#include "mazerl/policy.hpp"

namespace mazerl {

using RewardFn = std::function<double(const Context&, const Trajectory&)>;

inline RewardFn underspecified_reward_fn() {
  return [](const Context& ctx, const Trajectory& a) {
    return static_cast<double>(underspecified_reward(ctx, a));
  };
}

// --- Optimizer -------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::optional<double> grad_clip;  // global-norm clip applied before the step
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

// Ascent step: params move along the (clipped) gradient with bias-corrected
// adaptive scaling. Pass the negated gradient to minimize.
void adam_step(std::span<double> params, std::span<const double> gradient,
               AdamState& state, const AdamConfig& cfg);

// --- Gradient estimators ----------------------------------------------------

// Mean log-likelihood gradient over each context's buffer; empty buffers
// contribute nothing.
PolicyVec iml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                       std::span<const Context> contexts,
                       ExecMode mode = ExecMode::Serial);

double iml_objective(const PolicyParams& theta, const ExperienceBuffer& buf,
                     std::span<const Context> contexts,
                     ExecMode mode = ExecMode::Serial);

// exp(R_i / tau) normalized over the candidate set.
std::vector<double> raml_weights(std::span<const double> rewards, double tau);

PolicyVec raml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                        std::span<const Context> contexts, double raml_tau,
                        ExecMode mode = ExecMode::Serial);

// Gradient of log sum of buffer probabilities per context.
PolicyVec mml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                       std::span<const Context> contexts,
                       ExecMode mode = ExecMode::Serial);

double mml_objective(const PolicyParams& theta, const ExperienceBuffer& buf,
                     std::span<const Context> contexts,
                     ExecMode mode = ExecMode::Serial);

struct MapoTerms {
  PolicyVec inside{};   // exact in-buffer contribution
  PolicyVec outside{};  // rejection-sampled out-of-buffer contribution
  PolicyVec total{};
  double buffer_mass = 0.0;  // sum over contexts of each buffer's pi-mass
};

// Expected-return gradient split into an exact in-buffer sum and a sampled
// out-of-buffer term. The buffer weight per context is
// max(sum of buffer probabilities, clip_weight); entropy regularization is
// absorbed into the reward as R - tau * log pi. Sampling is derived from
// (sample_seed, context index), so results do not depend on ExecMode.
MapoTerms mapo_gradient_terms(
    const PolicyParams& theta, const ExperienceBuffer& buf,
    std::span<const Context> contexts, const RewardFn& reward_fn, double tau,
    double clip_weight, std::uint64_t sample_seed, int n_samples,
    const std::optional<LengthDistribution>& length_override = std::nullopt,
    ExecMode mode = ExecMode::Serial);

PolicyVec mapo_gradient(
    const PolicyParams& theta, const ExperienceBuffer& buf,
    std::span<const Context> contexts, const RewardFn& reward_fn, double tau,
    double clip_weight, std::uint64_t sample_seed, int n_samples,
    const std::optional<LengthDistribution>& length_override = std::nullopt,
    ExecMode mode = ExecMode::Serial);

// Samples n_explore trajectories per context and appends deduplicated
// successful ones (reward_fn > 0), respecting the per-context cap. Returns
// the number added. `discovered`, when given, records the same additions
// without the main buffer's current occupancy affecting it.
int collect_explore(const PolicyParams& theta, ExperienceBuffer& buf,
                    std::span<const Context> contexts,
                    const RewardFn& reward_fn, int n_explore,
                    std::uint64_t sample_seed, ExecMode mode = ExecMode::Serial,
                    ExperienceBuffer* discovered = nullptr);

// --- Trainer ---------------------------------------------------------------

enum class Objective { Iml, Raml, Mml, Mapo };

struct TrainConfig {
  Objective objective = Objective::Mapo;
  double learning_rate = 1e-2;
  double entropy_weight = 0.0;  // tau
  double raml_temperature = 1.0;
  double clip_weight = 0.1;
  int n_explore = 0;       // 0 keeps the buffer fixed
  int n_samples = 1;       // out-of-buffer samples per context per step
  int epochs = 100;
  int batch_size = 0;      // 0 = full batch
  std::optional<double> grad_clip;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int metrics_every = 100;
};

struct EpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  PolicyParams theta;
  AdamState adam;
  std::vector<EpochMetrics> log;
  ExperienceBuffer discovered;  // every success found while exploring
};

// Full-batch (or minibatch) ascent on the configured objective. The buffer
// is modified in place when exploration is enabled.
TrainResult train_policy(std::span<const Context> train,
                         std::span<const Context> val, ExperienceBuffer& buf,
                         const TrainConfig& cfg, const RewardFn& reward_fn,
                         const PolicyParams* warm_start = nullptr,
                         ExecMode mode = ExecMode::Serial);

// Fraction of contexts whose greedy decode reaches the goal.
double evaluate(const PolicyParams& theta, std::span<const Context> contexts,
                ExecMode mode = ExecMode::Serial);

// --- Exploration-oriented buffer construction ------------------------------

inline constexpr int kDefaultRandomSearchBudget = 10000;

// Random-search successes plus every success discovered during a full
// mode-covering (likelihood) training run, deduplicated and capped.
ExperienceBuffer mapox_prepare(std::span<const Context> train,
                               const TrainConfig& iml_config,
                               int random_search_budget, std::uint64_t seed,
                               ExecMode mode = ExecMode::Serial);

// Random-search-only initial buffer (also the first stage of mapox_prepare).
ExperienceBuffer random_search_buffer(std::span<const Context> contexts,
                                      int budget_per_context,
                                      std::uint64_t seed,
                                      ExecMode mode = ExecMode::Serial);

// For each k: fraction of contexts holding at least k trajectories.
std::vector<std::pair<int, double>> buffer_diversity_curve(
    const ExperienceBuffer& buf, std::span<const int> k_values);

}  // namespace mazerl
