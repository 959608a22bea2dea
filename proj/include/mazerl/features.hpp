#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mazerl/actions.hpp"
#include "mazerl/env.hpp"

namespace mazerl {

inline constexpr int kSingleFeatures = 16;
inline constexpr int kPairFeatures = 256;
inline constexpr int kNumFeatures = kSingleFeatures + kPairFeatures;

// Index layout:
//   singles: [0, 16)   index = 4*word + action
//   pairs:   [16, 272) index = 16 + 16*(4*w1 + w2) + (4*a1 + a2)
// Words use the same index order as actions (a word names its action).
constexpr int single_index(int word, int action) { return 4 * word + action; }
constexpr int pair_index(int w1, int w2, int a1, int a2) {
  return kSingleFeatures + 16 * (4 * w1 + w2) + (4 * a1 + a2);
}

// Binary count-comparison features between an instruction and a trajectory.
struct FeatureVector {
  std::array<std::uint8_t, kNumFeatures> v{};
};

enum class RewardMode { Linear, Softmax };

// 18 trainable values: 16 per-(word, action) weights plus two scalars that
// tie the 256 pairwise weights to products of the single weights.
struct AuxRewardParams {
  static constexpr int kDim = 18;
  std::array<double, kSingleFeatures> w_single{};
  double tie_para = 0.0;
  double tie_cross = 0.0;
  RewardMode mode = RewardMode::Softmax;

  std::array<double, kDim> flat() const;
  static AuxRewardParams from_flat(std::span<const double> flat,
                                   RewardMode mode);
};

// singles[w][a] fires iff count(word w in x) == count(action a in traj);
// pairs compare counts of consecutive bigrams the same way.
FeatureVector extract_features(std::span<const Action> instruction,
                               const Trajectory& traj);

// Full 272-dim weight vector implied by the tied parameters.
std::array<double, kNumFeatures> expand_weights(const AuxRewardParams& phi);

// d expand_weights / d phi, row per feature.
std::vector<std::array<double, AuxRewardParams::kDim>> expand_jacobian(
    const AuxRewardParams& phi);

double dot(const std::array<double, kNumFeatures>& w, const FeatureVector& f);

double linear_score(const AuxRewardParams& phi, const FeatureVector& f);

// d(linear_score)/d phi, accumulated over firing features only.
std::array<double, AuxRewardParams::kDim> score_grad(const AuxRewardParams& phi,
                                                     const FeatureVector& f);

// Auxiliary rewards for one context's candidate set. Candidates with zero
// base reward always get 0. Softmax mode normalizes the linear scores over
// the successful candidates, so they sum to 1 when all base rewards are 1.
std::vector<double> aux_reward(const AuxRewardParams& phi,
                               std::span<const FeatureVector> features,
                               std::span<const double> base_reward);

// Rows align with candidates; softmax mode includes the coupling between
// candidates of the same context.
std::vector<std::array<double, AuxRewardParams::kDim>> aux_reward_grad(
    const AuxRewardParams& phi, std::span<const FeatureVector> features,
    std::span<const double> base_reward);

// Convenience overloads computing features from the context.
std::vector<double> aux_reward(const AuxRewardParams& phi, const Context& ctx,
                               std::span<const Trajectory> candidates,
                               std::span<const double> base_reward);
std::vector<std::array<double, AuxRewardParams::kDim>> aux_reward_grad(
    const AuxRewardParams& phi, const Context& ctx,
    std::span<const Trajectory> candidates,
    std::span<const double> base_reward);

}  // namespace mazerl
