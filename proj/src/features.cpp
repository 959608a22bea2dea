#include "mazerl/features.hpp"

#include <cmath>

namespace mazerl {

std::array<double, AuxRewardParams::kDim> AuxRewardParams::flat() const {
  std::array<double, kDim> out{};
  for (int i = 0; i < kSingleFeatures; ++i) out[i] = w_single[i];
  out[16] = tie_para;
  out[17] = tie_cross;
  return out;
}

AuxRewardParams AuxRewardParams::from_flat(std::span<const double> flat,
                                           RewardMode mode) {
  AuxRewardParams phi;
  for (int i = 0; i < kSingleFeatures; ++i) phi.w_single[i] = flat[i];
  phi.tie_para = flat[16];
  phi.tie_cross = flat[17];
  phi.mode = mode;
  return phi;
}

FeatureVector extract_features(std::span<const Action> instruction,
                               const Trajectory& traj) {
  std::array<int, 4> word_count{};
  std::array<int, 4> act_count{};
  std::array<int, 16> word_bigram{};
  std::array<int, 16> act_bigram{};
  for (std::size_t i = 0; i < instruction.size(); ++i) {
    word_count[index(instruction[i])]++;
    if (i + 1 < instruction.size()) {
      word_bigram[4 * index(instruction[i]) + index(instruction[i + 1])]++;
    }
  }
  for (std::size_t i = 0; i < traj.actions.size(); ++i) {
    act_count[index(traj.actions[i])]++;
    if (i + 1 < traj.actions.size()) {
      act_bigram[4 * index(traj.actions[i]) + index(traj.actions[i + 1])]++;
    }
  }

  FeatureVector f;
  for (int w = 0; w < 4; ++w) {
    for (int a = 0; a < 4; ++a) {
      f.v[single_index(w, a)] = word_count[w] == act_count[a] ? 1 : 0;
    }
  }
  for (int wb = 0; wb < 16; ++wb) {
    for (int ab = 0; ab < 16; ++ab) {
      f.v[kSingleFeatures + 16 * wb + ab] =
          word_bigram[wb] == act_bigram[ab] ? 1 : 0;
    }
  }
  return f;
}

std::array<double, kNumFeatures> expand_weights(const AuxRewardParams& phi) {
  std::array<double, kNumFeatures> w{};
  for (int i = 0; i < kSingleFeatures; ++i) w[i] = phi.w_single[i];
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        for (int d = 0; d < 4; ++d) {
          w[pair_index(a, b, c, d)] =
              phi.tie_para * phi.w_single[single_index(a, c)] *
                  phi.w_single[single_index(b, d)] +
              phi.tie_cross * phi.w_single[single_index(a, d)] *
                  phi.w_single[single_index(b, c)];
        }
      }
    }
  }
  return w;
}

std::vector<std::array<double, AuxRewardParams::kDim>> expand_jacobian(
    const AuxRewardParams& phi) {
  std::vector<std::array<double, AuxRewardParams::kDim>> jac(
      kNumFeatures, std::array<double, AuxRewardParams::kDim>{});
  for (int i = 0; i < kSingleFeatures; ++i) jac[i][i] = 1.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        for (int d = 0; d < 4; ++d) {
          auto& row = jac[pair_index(a, b, c, d)];
          const int ac = single_index(a, c), bd = single_index(b, d);
          const int ad = single_index(a, d), bc = single_index(b, c);
          row[ac] += phi.tie_para * phi.w_single[bd];
          row[bd] += phi.tie_para * phi.w_single[ac];
          row[ad] += phi.tie_cross * phi.w_single[bc];
          row[bc] += phi.tie_cross * phi.w_single[ad];
          row[16] += phi.w_single[ac] * phi.w_single[bd];
          row[17] += phi.w_single[ad] * phi.w_single[bc];
        }
      }
    }
  }
  return jac;
}

double dot(const std::array<double, kNumFeatures>& w, const FeatureVector& f) {
  double s = 0.0;
  for (int i = 0; i < kNumFeatures; ++i) {
    if (f.v[i]) s += w[i];
  }
  return s;
}

double linear_score(const AuxRewardParams& phi, const FeatureVector& f) {
  double s = 0.0;
  for (int i = 0; i < kSingleFeatures; ++i) {
    if (f.v[i]) s += phi.w_single[i];
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        for (int d = 0; d < 4; ++d) {
          if (!f.v[pair_index(a, b, c, d)]) continue;
          s += phi.tie_para * phi.w_single[single_index(a, c)] *
                   phi.w_single[single_index(b, d)] +
               phi.tie_cross * phi.w_single[single_index(a, d)] *
                   phi.w_single[single_index(b, c)];
        }
      }
    }
  }
  return s;
}

std::array<double, AuxRewardParams::kDim> score_grad(const AuxRewardParams& phi,
                                                     const FeatureVector& f) {
  std::array<double, AuxRewardParams::kDim> g{};
  for (int i = 0; i < kSingleFeatures; ++i) {
    if (f.v[i]) g[i] += 1.0;
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        for (int d = 0; d < 4; ++d) {
          if (!f.v[pair_index(a, b, c, d)]) continue;
          const int ac = single_index(a, c), bd = single_index(b, d);
          const int ad = single_index(a, d), bc = single_index(b, c);
          g[ac] += phi.tie_para * phi.w_single[bd];
          g[bd] += phi.tie_para * phi.w_single[ac];
          g[ad] += phi.tie_cross * phi.w_single[bc];
          g[bc] += phi.tie_cross * phi.w_single[ad];
          g[16] += phi.w_single[ac] * phi.w_single[bd];
          g[17] += phi.w_single[ad] * phi.w_single[bc];
        }
      }
    }
  }
  return g;
}

std::vector<double> aux_reward(const AuxRewardParams& phi,
                               std::span<const FeatureVector> features,
                               std::span<const double> base_reward) {
  const std::size_t n = features.size();
  std::vector<double> out(n, 0.0);
  if (phi.mode == RewardMode::Linear) {
    for (std::size_t i = 0; i < n; ++i) {
      if (base_reward[i] != 0.0) {
        out[i] = linear_score(phi, features[i]) * base_reward[i];
      }
    }
    return out;
  }
  // Softmax over the successful candidates of the context.
  double max_score = -1e300;
  std::vector<double> scores(n, 0.0);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (base_reward[i] == 0.0) continue;
    scores[i] = linear_score(phi, features[i]);
    max_score = std::max(max_score, scores[i]);
    any = true;
  }
  if (!any) return out;
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (base_reward[i] != 0.0) z += std::exp(scores[i] - max_score);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (base_reward[i] != 0.0) {
      out[i] = std::exp(scores[i] - max_score) / z * base_reward[i];
    }
  }
  return out;
}

std::vector<std::array<double, AuxRewardParams::kDim>> aux_reward_grad(
    const AuxRewardParams& phi, std::span<const FeatureVector> features,
    std::span<const double> base_reward) {
  const std::size_t n = features.size();
  std::vector<std::array<double, AuxRewardParams::kDim>> rows(
      n, std::array<double, AuxRewardParams::kDim>{});
  if (phi.mode == RewardMode::Linear) {
    for (std::size_t i = 0; i < n; ++i) {
      if (base_reward[i] == 0.0) continue;
      auto g = score_grad(phi, features[i]);
      for (int j = 0; j < AuxRewardParams::kDim; ++j) {
        rows[i][j] = g[j] * base_reward[i];
      }
    }
    return rows;
  }
  const std::vector<double> r = aux_reward(phi, features, base_reward);
  // p_i = r_i / base_i is the softmax weight of a successful candidate.
  std::vector<std::array<double, AuxRewardParams::kDim>> grads(n);
  std::array<double, AuxRewardParams::kDim> mean{};
  for (std::size_t i = 0; i < n; ++i) {
    if (base_reward[i] == 0.0) continue;
    grads[i] = score_grad(phi, features[i]);
    const double p = r[i] / base_reward[i];
    for (int j = 0; j < AuxRewardParams::kDim; ++j) {
      mean[j] += p * grads[i][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (base_reward[i] == 0.0) continue;
    const double p = r[i] / base_reward[i];
    for (int j = 0; j < AuxRewardParams::kDim; ++j) {
      rows[i][j] = base_reward[i] * p * (grads[i][j] - mean[j]);
    }
  }
  return rows;
}

namespace {

std::vector<FeatureVector> candidate_features(
    const Context& ctx, std::span<const Trajectory> candidates) {
  std::vector<FeatureVector> f;
  f.reserve(candidates.size());
  for (const Trajectory& t : candidates) {
    f.push_back(extract_features(ctx.instruction, t));
  }
  return f;
}

}  // namespace

std::vector<double> aux_reward(const AuxRewardParams& phi, const Context& ctx,
                               std::span<const Trajectory> candidates,
                               std::span<const double> base_reward) {
  const std::vector<FeatureVector> f = candidate_features(ctx, candidates);
  return aux_reward(phi, f, base_reward);
}

std::vector<std::array<double, AuxRewardParams::kDim>> aux_reward_grad(
    const AuxRewardParams& phi, const Context& ctx,
    std::span<const Trajectory> candidates,
    std::span<const double> base_reward) {
  const std::vector<FeatureVector> f = candidate_features(ctx, candidates);
  return aux_reward_grad(phi, f, base_reward);
}

}  // namespace mazerl
