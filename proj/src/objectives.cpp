#include "mazerl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mazerl {

namespace {

inline void add_to(PolicyVec& acc, const PolicyVec& x, double scale = 1.0) {
  for (int i = 0; i < kPolicyDim; ++i) acc[i] += scale * x[i];
}

PolicyVec reduce(const std::vector<PolicyVec>& terms) {
  PolicyVec out{};
  for (const PolicyVec& t : terms) add_to(out, t);
  return out;
}

// softmax over arbitrary-size score vectors, numerically stable.
std::vector<double> softmax(std::span<const double> scores) {
  double mx = -1e300;
  for (double s : scores) mx = std::max(mx, s);
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> gradient,
               AdamState& state, const AdamConfig& cfg) {
  const std::size_t n = params.size();
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.t = 0;
  }
  double scale = 1.0;
  if (cfg.grad_clip) {
    double norm_sq = 0.0;
    for (double g : gradient) norm_sq += g * g;
    const double norm = std::sqrt(norm_sq);
    if (norm > *cfg.grad_clip && norm > 0.0) scale = *cfg.grad_clip / norm;
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gradient[i] * scale;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] += cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

PolicyVec iml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                       std::span<const Context> contexts, ExecMode mode) {
  auto terms = map_indexed<PolicyVec>(contexts.size(), mode, [&](std::size_t i) {
    PolicyVec g{};
    const auto& entries = buf.entries(contexts[i].id);
    if (entries.empty()) return g;
    for (const BufferEntry& e : entries) {
      add_to(g, grad_log_prob(theta, contexts[i], e.traj));
    }
    for (double& v : g) v /= static_cast<double>(entries.size());
    return g;
  });
  return reduce(terms);
}

double iml_objective(const PolicyParams& theta, const ExperienceBuffer& buf,
                     std::span<const Context> contexts, ExecMode mode) {
  auto terms =
      map_indexed<double>(contexts.size(), mode, [&](std::size_t i) {
        const auto& entries = buf.entries(contexts[i].id);
        if (entries.empty()) return 0.0;
        double s = 0.0;
        for (const BufferEntry& e : entries) {
          s += log_prob(theta, contexts[i], e.traj);
        }
        return s / static_cast<double>(entries.size());
      });
  double out = 0.0;
  for (double t : terms) out += t;
  return out;
}

std::vector<double> raml_weights(std::span<const double> rewards, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("raml temperature must be > 0");
  std::vector<double> scaled(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) scaled[i] = rewards[i] / tau;
  return softmax(scaled);
}

PolicyVec raml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                        std::span<const Context> contexts, double raml_tau,
                        ExecMode mode) {
  auto terms = map_indexed<PolicyVec>(contexts.size(), mode, [&](std::size_t i) {
    PolicyVec g{};
    const auto& entries = buf.entries(contexts[i].id);
    if (entries.empty()) return g;
    std::vector<double> rewards(entries.size());
    for (std::size_t j = 0; j < entries.size(); ++j) rewards[j] = entries[j].reward;
    const std::vector<double> w = raml_weights(rewards, raml_tau);
    for (std::size_t j = 0; j < entries.size(); ++j) {
      add_to(g, grad_log_prob(theta, contexts[i], entries[j].traj), w[j]);
    }
    return g;
  });
  return reduce(terms);
}

PolicyVec mml_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                       std::span<const Context> contexts, ExecMode mode) {
  auto terms = map_indexed<PolicyVec>(contexts.size(), mode, [&](std::size_t i) {
    PolicyVec g{};
    const auto& entries = buf.entries(contexts[i].id);
    if (entries.empty()) return g;
    std::vector<double> lps(entries.size());
    std::vector<PolicyVec> grads(entries.size());
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const LogProbGrad lg = log_prob_grad(theta, contexts[i], entries[j].traj);
      lps[j] = lg.logp;
      grads[j] = lg.grad;
    }
    const std::vector<double> q = softmax(lps);
    for (std::size_t j = 0; j < entries.size(); ++j) add_to(g, grads[j], q[j]);
    return g;
  });
  return reduce(terms);
}

double mml_objective(const PolicyParams& theta, const ExperienceBuffer& buf,
                     std::span<const Context> contexts, ExecMode mode) {
  auto terms =
      map_indexed<double>(contexts.size(), mode, [&](std::size_t i) {
        const auto& entries = buf.entries(contexts[i].id);
        if (entries.empty()) return 0.0;
        double mx = -1e300;
        std::vector<double> lps(entries.size());
        for (std::size_t j = 0; j < entries.size(); ++j) {
          lps[j] = log_prob(theta, contexts[i], entries[j].traj);
          mx = std::max(mx, lps[j]);
        }
        double z = 0.0;
        for (double lp : lps) z += std::exp(lp - mx);
        return mx + std::log(z);
      });
  double out = 0.0;
  for (double t : terms) out += t;
  return out;
}

MapoTerms mapo_gradient_terms(
    const PolicyParams& theta, const ExperienceBuffer& buf,
    std::span<const Context> contexts, const RewardFn& reward_fn, double tau,
    double clip_weight, std::uint64_t sample_seed, int n_samples,
    const std::optional<LengthDistribution>& length_override, ExecMode mode) {
  struct CtxTerm {
    PolicyVec inside{};
    PolicyVec outside{};
    double mass = 0.0;
  };
  auto terms = map_indexed<CtxTerm>(contexts.size(), mode, [&](std::size_t i) {
    CtxTerm term;
    const Context& ctx = contexts[i];
    const auto& entries = buf.entries(ctx.id);

    // Empty buffers get no floor: the estimator degenerates to plain
    // score-function sampling with full weight on the sampled term.
    double w = 0.0;
    if (!entries.empty()) {
      std::vector<double> lps(entries.size());
      std::vector<PolicyVec> grads(entries.size());
      for (std::size_t j = 0; j < entries.size(); ++j) {
        const LogProbGrad lg = log_prob_grad(theta, ctx, entries[j].traj);
        lps[j] = lg.logp;
        grads[j] = lg.grad;
      }
      for (double lp : lps) term.mass += std::exp(lp);
      w = std::max(term.mass, clip_weight);
      // w * E_{pi restricted to buffer}[R' grad log pi]; equals the exact
      // enumeration when the clip is not engaged.
      const std::vector<double> q = softmax(lps);
      for (std::size_t j = 0; j < entries.size(); ++j) {
        const double r_prime = reward_fn(ctx, entries[j].traj) - tau * lps[j];
        add_to(term.inside, grads[j], w * q[j] * r_prime);
      }
    }

    Rng rng = derive_rng(sample_seed, stream::kMapo, i);
    const LengthDistribution lengths =
        length_override ? *length_override : LengthDistribution::for_context(ctx);
    PolicyVec acc{};
    int n_accepted = 0;
    for (int s = 0; s < n_samples; ++s) {
      const Trajectory traj = sample(theta, ctx, rng, lengths);
      if (buf.contains(ctx.id, traj)) continue;  // rejection step
      const LogProbGrad lg = log_prob_grad(theta, ctx, traj);
      const double r_prime = reward_fn(ctx, traj) - tau * lg.logp;
      add_to(acc, lg.grad, r_prime);
      ++n_accepted;
    }
    if (n_accepted > 0) {
      add_to(term.outside, acc, (1.0 - w) / n_accepted);
    }
    return term;
  });

  MapoTerms out;
  for (const auto& t : terms) {
    add_to(out.inside, t.inside);
    add_to(out.outside, t.outside);
    out.buffer_mass += t.mass;
  }
  out.total = out.inside;
  add_to(out.total, out.outside);
  return out;
}

PolicyVec mapo_gradient(const PolicyParams& theta, const ExperienceBuffer& buf,
                        std::span<const Context> contexts,
                        const RewardFn& reward_fn, double tau,
                        double clip_weight, std::uint64_t sample_seed,
                        int n_samples,
                        const std::optional<LengthDistribution>& length_override,
                        ExecMode mode) {
  return mapo_gradient_terms(theta, buf, contexts, reward_fn, tau, clip_weight,
                             sample_seed, n_samples, length_override, mode)
      .total;
}

int collect_explore(const PolicyParams& theta, ExperienceBuffer& buf,
                    std::span<const Context> contexts,
                    const RewardFn& reward_fn, int n_explore,
                    std::uint64_t sample_seed, ExecMode mode,
                    ExperienceBuffer* discovered) {
  if (n_explore <= 0) return 0;
  using Found = std::vector<std::pair<Trajectory, double>>;
  auto proposals = map_indexed<Found>(contexts.size(), mode, [&](std::size_t i) {
    Found found;
    const Context& ctx = contexts[i];
    Rng rng = derive_rng(sample_seed, stream::kExplore, i);
    const LengthDistribution lengths = LengthDistribution::for_context(ctx);
    for (int s = 0; s < n_explore; ++s) {
      Trajectory traj = sample(theta, ctx, rng, lengths);
      const double r = reward_fn(ctx, traj);
      if (r > 0.0) found.emplace_back(std::move(traj), r);
    }
    return found;
  });
  int added = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (auto& [traj, r] : proposals[i]) {
      if (buf.insert(contexts[i], traj, r)) ++added;
      if (discovered) discovered->insert(contexts[i], traj, r);
    }
  }
  return added;
}

double evaluate(const PolicyParams& theta, std::span<const Context> contexts,
                ExecMode mode) {
  if (contexts.empty()) return 0.0;
  auto hits = map_indexed<int>(contexts.size(), mode, [&](std::size_t i) {
    const Trajectory traj = greedy_decode(theta, contexts[i]);
    return underspecified_reward(contexts[i], traj);
  });
  int total = 0;
  for (int h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(contexts.size());
}

TrainResult train_policy(std::span<const Context> train,
                         std::span<const Context> val, ExperienceBuffer& buf,
                         const TrainConfig& cfg, const RewardFn& reward_fn,
                         const PolicyParams* warm_start, ExecMode mode) {
  TrainResult res;
  if (warm_start) res.theta = *warm_start;
  res.discovered = ExperienceBuffer(train);
  AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                      cfg.adam_eps, cfg.grad_clip};

  std::vector<Context> batch_storage;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.n_explore > 0) {
      collect_explore(res.theta, buf, train, reward_fn, cfg.n_explore,
                      mix_seed({cfg.seed, stream::kExplore,
                                static_cast<std::uint64_t>(epoch)}),
                      mode, &res.discovered);
    }

    std::span<const Context> batch = train;
    if (cfg.batch_size > 0 &&
        cfg.batch_size < static_cast<int>(train.size())) {
      Rng rng = derive_rng(cfg.seed, stream::kBatch, epoch);
      batch_storage.clear();
      for (int b = 0; b < cfg.batch_size; ++b) {
        batch_storage.push_back(
            train[rng.uniform_int(static_cast<std::uint32_t>(train.size()))]);
      }
      batch = batch_storage;
    }

    PolicyVec grad{};
    const std::uint64_t step_seed =
        mix_seed({cfg.seed, stream::kMapo, static_cast<std::uint64_t>(epoch)});
    switch (cfg.objective) {
      case Objective::Iml:
        grad = iml_gradient(res.theta, buf, batch, mode);
        break;
      case Objective::Raml:
        grad = raml_gradient(res.theta, buf, batch, cfg.raml_temperature, mode);
        break;
      case Objective::Mml:
        grad = mml_gradient(res.theta, buf, batch, mode);
        break;
      case Objective::Mapo:
        grad = mapo_gradient(res.theta, buf, batch, reward_fn,
                             cfg.entropy_weight, cfg.clip_weight, step_seed,
                             cfg.n_samples, std::nullopt, mode);
        break;
    }
    adam_step(res.theta.w, grad, res.adam, adam_cfg);
    for (double v : res.theta.w) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("policy parameters diverged (non-finite)");
      }
    }
    if (cfg.metrics_every > 0 &&
        (epoch % cfg.metrics_every == 0 || epoch == cfg.epochs - 1)) {
      EpochMetrics m;
      m.epoch = epoch;
      m.train_acc = evaluate(res.theta, train, mode);
      m.val_acc = val.empty() ? 0.0 : evaluate(res.theta, val, mode);
      res.log.push_back(m);
    }
  }
  return res;
}

ExperienceBuffer random_search_buffer(std::span<const Context> contexts,
                                      int budget_per_context,
                                      std::uint64_t seed, ExecMode mode) {
  using Found = std::vector<Trajectory>;
  auto proposals =
      map_indexed<Found>(contexts.size(), mode, [&](std::size_t i) {
        Found found;
        const Context& ctx = contexts[i];
        Rng rng = derive_rng(seed, stream::kRandomSearch, i);
        std::vector<std::vector<Action>> seen;
        for (int s = 0; s < budget_per_context &&
                        found.size() < ExperienceBuffer::kMaxPerContext;
             ++s) {
          const int len = 1 + static_cast<int>(rng.uniform_int(
                                  static_cast<std::uint32_t>(ctx.max_steps)));
          Trajectory traj;
          traj.actions.reserve(len);
          for (int t = 0; t < len; ++t) {
            traj.actions.push_back(
                action_from_index(rng.uniform_int(kNumActions)));
          }
          if (!execute(ctx.maze, traj, ctx.max_steps).reached_goal) continue;
          if (std::find(seen.begin(), seen.end(), traj.actions) != seen.end()) {
            continue;
          }
          seen.push_back(traj.actions);
          found.push_back(std::move(traj));
        }
        return found;
      });
  ExperienceBuffer buf(contexts);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (Trajectory& traj : proposals[i]) buf.insert(contexts[i], traj, 1.0);
  }
  return buf;
}

ExperienceBuffer mapox_prepare(std::span<const Context> train,
                               const TrainConfig& iml_config,
                               int random_search_budget, std::uint64_t seed,
                               ExecMode mode) {
  ExperienceBuffer initial =
      random_search_buffer(train, random_search_budget, seed, mode);

  ExperienceBuffer working = initial;
  TrainConfig cfg = iml_config;
  cfg.objective = Objective::Iml;
  cfg.seed = mix_seed({seed, stream::kExplore});
  TrainResult run = train_policy(train, {}, working, cfg,
                                 underspecified_reward_fn(), nullptr, mode);

  // Union of the random-search buffer and everything the likelihood run
  // discovered, in that order, so the result contains the initial buffer.
  ExperienceBuffer out = initial;
  std::unordered_map<std::string, const Context*> by_id;
  for (const Context& ctx : train) by_id[ctx.id] = &ctx;
  for (const std::string& id : run.discovered.ids()) {
    for (const BufferEntry& e : run.discovered.entries(id)) {
      out.insert(*by_id.at(id), e.traj, e.reward);
    }
  }
  return out;
}

std::vector<std::pair<int, double>> buffer_diversity_curve(
    const ExperienceBuffer& buf, std::span<const int> k_values) {
  std::vector<std::pair<int, double>> out;
  const double total = static_cast<double>(buf.num_contexts());
  for (int k : k_values) {
    int count = 0;
    for (const std::string& id : buf.ids()) {
      if (buf.size(id) >= static_cast<std::size_t>(k)) ++count;
    }
    out.emplace_back(k, total > 0 ? count / total : 0.0);
  }
  return out;
}

}  // namespace mazerl
