#include "mazerl/borl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mazerl {

namespace {

std::vector<double> to_unit_box(const std::vector<double>& phi, double lo,
                                double hi) {
  std::vector<double> x(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    x[i] = (phi[i] - lo) / (hi - lo);
  }
  return x;
}

// One trial: filter the buffer by the proposed reward, then optimize the
// policy on it. Exploration inserts only candidates that outrank the
// context's current buffer under the trial reward.
double run_trial(const AuxRewardParams& phi, std::span<const Context> train,
                 std::span<const Context> val,
                 const ExperienceBuffer& base_buffer,
                 const PolicyParams& warm_start, const BorlConfig& cfg,
                 std::uint64_t trial_seed, PolicyParams& theta_out,
                 ExecMode mode) {
  ExperienceBuffer buf = filter_buffer_by_reward(base_buffer, phi, train);
  std::unordered_map<std::string, const Context*> by_id;
  for (const Context& ctx : train) by_id[ctx.id] = &ctx;

  PolicyParams theta = warm_start;
  AdamState adam;
  const AdamConfig adam_cfg{cfg.trial_train.learning_rate,
                            cfg.trial_train.adam_beta1,
                            cfg.trial_train.adam_beta2,
                            cfg.trial_train.adam_eps,
                            cfg.trial_train.grad_clip};
  const RewardFn reward = underspecified_reward_fn();

  for (int epoch = 0; epoch < cfg.trial_train.epochs; ++epoch) {
    if (cfg.n_explore > 0) {
      const std::uint64_t es = mix_seed(
          {trial_seed, stream::kExplore, static_cast<std::uint64_t>(epoch)});
      auto proposals = map_indexed<std::vector<Trajectory>>(
          train.size(), mode, [&](std::size_t i) {
            std::vector<Trajectory> found;
            const Context& ctx = train[i];
            Rng rng = derive_rng(es, stream::kExplore, i);
            const LengthDistribution lengths =
                LengthDistribution::for_context(ctx);
            for (int s = 0; s < cfg.n_explore; ++s) {
              Trajectory traj = sample(theta, ctx, rng, lengths);
              if (underspecified_reward(ctx, traj) > 0) {
                found.push_back(std::move(traj));
              }
            }
            return found;
          });
      for (std::size_t i = 0; i < train.size(); ++i) {
        const Context& ctx = train[i];
        for (Trajectory& traj : proposals[i]) {
          std::vector<double> scores;
          for (const BufferEntry& e : buf.entries(ctx.id)) {
            scores.push_back(linear_score(phi, e.features));
          }
          const double cand = linear_score(
              phi, extract_features(ctx.instruction, traj));
          if (trial_exploration_accept(cand, scores)) {
            buf.insert(ctx, traj, 1.0);
          }
        }
      }
    }

    const PolicyVec grad = mapo_gradient(
        theta, buf, train, reward, cfg.trial_train.entropy_weight,
        cfg.trial_train.clip_weight,
        mix_seed({trial_seed, stream::kMapo, static_cast<std::uint64_t>(epoch)}),
        cfg.trial_train.n_samples, std::nullopt, mode);
    adam_step(theta.w, grad, adam, adam_cfg);
    for (double v : theta.w) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("trial diverged (non-finite parameters)");
      }
    }
  }
  theta_out = theta;
  return evaluate(theta, val, mode);
}

}  // namespace

ExperienceBuffer filter_buffer_by_reward(const ExperienceBuffer& buf,
                                         const AuxRewardParams& phi,
                                         std::span<const Context> contexts) {
  ExperienceBuffer out(contexts);
  for (const Context& ctx : contexts) {
    const auto& entries = buf.entries(ctx.id);
    if (entries.empty()) continue;
    std::vector<double> scores(entries.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < entries.size(); ++j) {
      scores[j] = linear_score(phi, entries[j].features);
      best = std::max(best, scores[j]);
    }
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (scores[j] == best) out.insert(ctx, entries[j].traj, entries[j].reward);
    }
  }
  return out;
}

bool trial_exploration_accept(double candidate_score,
                              std::span<const double> buffer_scores) {
  if (buffer_scores.empty()) return true;
  const double mx = *std::max_element(buffer_scores.begin(), buffer_scores.end());
  return candidate_score > mx;
}

BorlResult borl_run(std::span<const Context> train,
                    std::span<const Context> val,
                    const ExperienceBuffer& base_buffer,
                    const PolicyParams& warm_start, const BorlConfig& cfg,
                    ExecMode mode) {
  BorlResult res;
  res.best_val_acc = -1.0;
  std::vector<GpObservation> observations;
  std::optional<GpSurrogate> model;
  const SearchBox box{cfg.box_lo, cfg.box_hi, AuxRewardParams::kDim};

  int k = 0;
  while (k < cfg.trials) {
    const int batch = std::min(cfg.batch, cfg.trials - k);
    std::vector<std::vector<double>> pending;
    std::vector<AuxRewardParams> proposals;
    for (int b = 0; b < batch; ++b) {
      Rng rng = derive_rng(cfg.seed, stream::kPropose,
                           static_cast<std::uint64_t>(k + b));
      const std::vector<double> x =
          propose(model ? &*model : nullptr, box, cfg.acq_restarts, rng,
                  pending);
      pending.push_back(x);
      std::array<double, AuxRewardParams::kDim> flat{};
      for (int d = 0; d < AuxRewardParams::kDim; ++d) flat[d] = x[d];
      proposals.push_back(
          AuxRewardParams::from_flat(flat, RewardMode::Linear));
    }

    struct TrialOutcome {
      double v = 0.0;
      PolicyParams theta;
    };
    // Trials inside a batch are independent given their proposals.
    auto outcomes = map_indexed<TrialOutcome>(
        static_cast<std::size_t>(batch),
        batch > 1 ? mode : ExecMode::Serial, [&](std::size_t b) {
          TrialOutcome out;
          const std::uint64_t trial_seed = mix_seed(
              {cfg.seed, stream::kTrial, static_cast<std::uint64_t>(k + b)});
          try {
            out.v = run_trial(proposals[b], train, val, base_buffer,
                              warm_start, cfg, trial_seed, out.theta,
                              batch > 1 ? ExecMode::Serial : mode);
          } catch (const std::runtime_error&) {
            out.v = 0.0;  // failed trials score zero; the sweep continues
            out.theta = warm_start;
          }
          return out;
        });

    for (int b = 0; b < batch; ++b) {
      const int trial_idx = k + b + 1;
      observations.push_back(GpObservation{
          to_unit_box(pending[b], cfg.box_lo, cfg.box_hi), outcomes[b].v});
      if (outcomes[b].v > res.best_val_acc) {
        res.best_val_acc = outcomes[b].v;
        res.best_phi = proposals[b];
        res.best_theta = outcomes[b].theta;
      }
      res.log.push_back(TrialRecord{trial_idx, proposals[b], outcomes[b].v,
                                    res.best_val_acc});
    }
    k += batch;
    model = GpSurrogate::fit(observations,
                             mix_seed({cfg.seed, stream::kGpFit,
                                       static_cast<std::uint64_t>(k)}));
  }
  return res;
}

}  // namespace mazerl
