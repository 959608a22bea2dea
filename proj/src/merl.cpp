#include "mazerl/merl.hpp"

#include <cmath>
#include <stdexcept>

namespace mazerl {

namespace {

inline void add_to(PolicyVec& acc, const PolicyVec& x, double scale = 1.0) {
  for (int i = 0; i < kPolicyDim; ++i) acc[i] += scale * x[i];
}

inline double dot36(const PolicyVec& a, const PolicyVec& b) {
  double s = 0.0;
  for (int i = 0; i < kPolicyDim; ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> base_rewards(const std::vector<BufferEntry>& entries) {
  std::vector<double> r(entries.size());
  for (std::size_t j = 0; j < entries.size(); ++j) r[j] = entries[j].reward;
  return r;
}

std::vector<FeatureVector> cached_features(
    const std::vector<BufferEntry>& entries) {
  std::vector<FeatureVector> f(entries.size());
  for (std::size_t j = 0; j < entries.size(); ++j) f[j] = entries[j].features;
  return f;
}

}  // namespace

PolicyVec train_objective_grad(const PolicyParams& theta,
                               const AuxRewardParams& phi,
                               std::span<const Context> train,
                               const ExperienceBuffer& buf_train, double tau,
                               ExecMode mode) {
  auto terms = map_indexed<PolicyVec>(train.size(), mode, [&](std::size_t i) {
    PolicyVec g{};
    const auto& entries = buf_train.entries(train[i].id);
    if (entries.empty()) return g;
    const std::vector<double> base = base_rewards(entries);
    const std::vector<FeatureVector> feats = cached_features(entries);
    const std::vector<double> r_phi = aux_reward(phi, feats, base);
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const LogProbGrad lg = log_prob_grad(theta, train[i], entries[j].traj);
      const double pi = std::exp(lg.logp);
      // d/d theta of pi * R_phi + tau * (-pi log pi) summed over the buffer.
      add_to(g, lg.grad, pi * (r_phi[j] - tau * (lg.logp + 1.0)));
    }
    return g;
  });
  PolicyVec out{};
  for (const PolicyVec& t : terms) add_to(out, t);
  return out;
}

double val_objective(const PolicyParams& theta, std::span<const Context> val,
                     const ExperienceBuffer& buf_val, ExecMode mode) {
  auto terms = map_indexed<double>(val.size(), mode, [&](std::size_t i) {
    double s = 0.0;
    for (const BufferEntry& e : buf_val.entries(val[i].id)) {
      s += e.reward * std::exp(log_prob(theta, val[i], e.traj));
    }
    return s;
  });
  double out = 0.0;
  for (double t : terms) out += t;
  return out;
}

PolicyVec val_objective_grad(const PolicyParams& theta,
                             std::span<const Context> val,
                             const ExperienceBuffer& buf_val, ExecMode mode) {
  auto terms = map_indexed<PolicyVec>(val.size(), mode, [&](std::size_t i) {
    PolicyVec g{};
    for (const BufferEntry& e : buf_val.entries(val[i].id)) {
      const LogProbGrad lg = log_prob_grad(theta, val[i], e.traj);
      add_to(g, lg.grad, e.reward * std::exp(lg.logp));
    }
    return g;
  });
  PolicyVec out{};
  for (const PolicyVec& t : terms) add_to(out, t);
  return out;
}

namespace {

struct LookaheadStep {
  PolicyParams theta_prime;
  MetaVec hyper{};
};

// One-step lookahead theta' = theta + alpha * grad O_train, plus the exact
// gradient of val_objective(theta') in the reward parameters:
// d theta' / d phi_j = alpha * sum_x sum_a pi(a) grad_log_pi(a) dR_phi(a)/d phi_j,
// so the chain rule reduces to per-trajectory scalar coefficients.
LookaheadStep lookahead(const PolicyParams& theta, const AuxRewardParams& phi,
                        std::span<const Context> train,
                        const ExperienceBuffer& buf_train,
                        std::span<const Context> val,
                        const ExperienceBuffer& buf_val, double alpha,
                        double tau, ExecMode mode) {
  LookaheadStep out;
  const PolicyVec g_train =
      train_objective_grad(theta, phi, train, buf_train, tau, mode);
  out.theta_prime = theta;
  for (int i = 0; i < kPolicyDim; ++i) {
    out.theta_prime.w[i] += alpha * g_train[i];
  }

  const PolicyVec g_val =
      val_objective_grad(out.theta_prime, val, buf_val, mode);
  auto terms = map_indexed<MetaVec>(train.size(), mode, [&](std::size_t i) {
    MetaVec h{};
    const auto& entries = buf_train.entries(train[i].id);
    if (entries.empty()) return h;
    const std::vector<double> base = base_rewards(entries);
    const std::vector<FeatureVector> feats = cached_features(entries);
    const auto aux_rows = aux_reward_grad(phi, feats, base);
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const LogProbGrad lg = log_prob_grad(theta, train[i], entries[j].traj);
      const double coef = alpha * std::exp(lg.logp) * dot36(g_val, lg.grad);
      for (int d = 0; d < AuxRewardParams::kDim; ++d) {
        h[d] += coef * aux_rows[j][d];
      }
    }
    return h;
  });
  for (const MetaVec& t : terms) {
    for (int d = 0; d < AuxRewardParams::kDim; ++d) out.hyper[d] += t[d];
  }
  return out;
}

}  // namespace

MetaVec meta_gradient(const PolicyParams& theta, const AuxRewardParams& phi,
                      std::span<const Context> train,
                      const ExperienceBuffer& buf_train,
                      std::span<const Context> val,
                      const ExperienceBuffer& buf_val, double alpha, double tau,
                      ExecMode mode) {
  return lookahead(theta, phi, train, buf_train, val, buf_val, alpha, tau, mode)
      .hyper;
}

MerlResult merl_train(std::span<const Context> train,
                      std::span<const Context> val,
                      ExperienceBuffer& buf_train, ExperienceBuffer& buf_val,
                      const MerlConfig& cfg, const PolicyParams& warm_start,
                      ExecMode mode) {
  MerlResult res;
  res.theta = warm_start;
  res.phi.mode = RewardMode::Softmax;

  AdamConfig meta_adam{cfg.meta_lr, cfg.adam_beta1, cfg.adam_beta2,
                       cfg.adam_eps, cfg.grad_clip};
  AdamState meta_state;
  const RewardFn reward = underspecified_reward_fn();

  std::vector<Context> batch_storage;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.n_explore > 0) {
      const std::uint64_t es = mix_seed(
          {cfg.seed, stream::kExplore, static_cast<std::uint64_t>(epoch)});
      collect_explore(res.theta, buf_train, train, reward, cfg.n_explore,
                      mix_seed({es, 1}), mode);
      collect_explore(res.theta, buf_val, val, reward, cfg.n_explore,
                      mix_seed({es, 2}), mode);
    }

    std::span<const Context> train_batch = train;
    if (cfg.batch_size > 0 && cfg.batch_size < static_cast<int>(train.size())) {
      Rng rng = derive_rng(cfg.seed, stream::kBatch, epoch);
      batch_storage.clear();
      for (int b = 0; b < cfg.batch_size; ++b) {
        batch_storage.push_back(
            train[rng.uniform_int(static_cast<std::uint32_t>(train.size()))]);
      }
      train_batch = batch_storage;
    }

    // The committed policy is the lookahead computed with the current reward
    // parameters; the reward update follows from the same step.
    const LookaheadStep step =
        lookahead(res.theta, res.phi, train_batch, buf_train, val, buf_val,
                  cfg.inner_lr, cfg.entropy_weight, mode);
    const MetaVec& hyper = step.hyper;
    std::array<double, AuxRewardParams::kDim> phi_flat = res.phi.flat();
    adam_step(phi_flat, hyper, meta_state, meta_adam);
    res.phi = AuxRewardParams::from_flat(phi_flat, RewardMode::Softmax);
    res.theta = step.theta_prime;

    for (double v : res.theta.w) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("policy parameters diverged (non-finite)");
      }
    }
    for (double v : phi_flat) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("reward parameters diverged (non-finite)");
      }
    }

    if (cfg.metrics_every > 0 &&
        (epoch % cfg.metrics_every == 0 || epoch == cfg.epochs - 1)) {
      MerlEpochMetrics m;
      m.epoch = epoch;
      m.train_acc = evaluate(res.theta, train, mode);
      m.val_acc = evaluate(res.theta, val, mode);
      m.o_val = val_objective(res.theta, val, buf_val, mode);
      double n2 = 0.0;
      for (double h : hyper) n2 += h * h;
      m.meta_grad_norm = std::sqrt(n2);
      res.log.push_back(m);
    }
  }
  return res;
}

}  // namespace mazerl
