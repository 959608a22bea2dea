#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mazerl/borl.hpp"
#include "mazerl/buffer.hpp"
#include "mazerl/env.hpp"
#include "mazerl/merl.hpp"
#include "mazerl/objectives.hpp"

namespace mazerl {

enum class RewardSetting { Oracle, Underspecified, Merl, Borl };

std::string setting_name(RewardSetting s);

struct ExperimentSpec {
  int n_seeds = 5;
  int n_spurious = 4;
  int spurious_budget = kDefaultSpuriousBudget;
  TrainConfig oracle_cfg;
  TrainConfig underspecified_cfg;
  MerlConfig merl_cfg;
  BorlConfig borl_cfg;
  std::vector<RewardSetting> settings = {
      RewardSetting::Oracle, RewardSetting::Underspecified,
      RewardSetting::Merl, RewardSetting::Borl};
};

// Tuned defaults for the 7x7/14-trap fixture.
ExperimentSpec default_experiment_spec();
Dataset default_fixture_dataset(ExecMode mode = ExecMode::Serial);

// Oracle: the gold trajectory per context. Underspecified: gold plus up to
// n_spurious successful-but-unintended trajectories.
ExperienceBuffer build_fixed_buffers(std::span<const Context> contexts,
                                     RewardSetting setting, int n_spurious,
                                     int spurious_budget, std::uint64_t seed,
                                     ExecMode mode = ExecMode::Serial);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
  double test_acc = 0.0;
  bool failed = false;
  friend bool operator==(const SeedOutcome&, const SeedOutcome&) = default;
};

struct ResultRow {
  std::string setting;
  double dev_mean = 0.0;
  double dev_std = 0.0;
  double test_mean = 0.0;
  double test_std = 0.0;
  double train_mean = 0.0;
  std::vector<SeedOutcome> per_seed;
  bool complete = true;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Per-seed trained policies, kept so downstream comparisons (rerankers,
// warm starts) reuse the same runs.
struct ExperimentDetail {
  std::vector<PolicyParams> underspecified_theta;  // indexed by seed
  std::vector<PolicyParams> merl_theta;
  std::vector<AuxRewardParams> merl_phi;
  std::vector<PolicyParams> oracle_theta;
  std::vector<PolicyParams> borl_theta;
};

struct ExperimentOutcome {
  std::vector<ResultRow> rows;
  ExperimentDetail detail;
};

// Runs every configured setting for seeds 0..n_seeds-1. Meta-learning and
// reward-search runs warm-start from the matching seed's underspecified
// checkpoint and share its buffers. Trainers only ever see the train and
// val splits; the test split is touched by evaluation alone.
ExperimentOutcome run_experiment(const ExperimentSpec& spec, const Dataset& ds,
                                 ExecMode mode = ExecMode::Serial,
                                 bool verbose = false);

enum class RerankVariant { FeaturesOnly, FeaturesPlusLogProb };

struct RerankScorer {
  AuxRewardParams phi;          // linear trajectory features
  double logprob_weight = 0.0;  // used by the FeaturesPlusLogProb variant
};

// Accuracy of picking the scorer's top sample out of n_samples per context.
double rerank_accuracy(const RerankScorer& scorer, const PolicyParams& theta,
                       std::span<const Context> contexts, int n_samples,
                       std::uint64_t seed, ExecMode mode = ExecMode::Serial);

struct RerankResult {
  RerankScorer scorer;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

inline constexpr int kRerankSearchPoints = 30;

// Fits a linear reranker on validation samples by seeded random search over
// the scorer weights, then scores test samples with the best scorer.
RerankResult rerank_baseline(const PolicyParams& theta, const Dataset& ds,
                             RerankVariant variant, int n_samples,
                             std::uint64_t seed,
                             int search_points = kRerankSearchPoints,
                             ExecMode mode = ExecMode::Serial);

}  // namespace mazerl
