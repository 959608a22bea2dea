#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mazerl/borl.hpp"
#include "mazerl/gp.hpp"
#include "mazerl/harness.hpp"
#include "support/test_support.hpp"

using namespace mazerl;
namespace ts = mazerl::testing;

namespace {

std::vector<GpObservation> grid_1d(const std::function<double(double)>& f,
                                   std::initializer_list<double> xs) {
  std::vector<GpObservation> obs;
  for (double x : xs) obs.push_back(GpObservation{{x}, f(x)});
  return obs;
}

}  // namespace

TEST_CASE("gp: single observation is reproduced at its input") {
  const GpSurrogate gp =
      GpSurrogate::fit({GpObservation{{0.3, 0.7}, 0.42}}, /*seed=*/1);
  const auto [mu, var] = gp.posterior(std::vector<double>{0.3, 0.7});
  CHECK(std::abs(mu - 0.42) <= 1e-6);
  CHECK(var >= 0.0);
}

TEST_CASE("gp: noiseless smooth data is interpolated within 1e-6") {
  const auto f = [](double x) { return std::sin(3.0 * x) + 0.5 * x; };
  const auto obs = grid_1d(f, {0.05, 0.3, 0.5, 0.7, 0.95});
  const GpSurrogate gp = GpSurrogate::fit(obs, /*seed=*/2);
  for (const GpObservation& o : obs) {
    const auto [mu, var] = gp.posterior(o.x);
    CHECK(std::abs(mu - o.y) <= 1e-6);
  }
}

TEST_CASE("gp: relevance determination spots the single active dimension") {
  // y depends on coordinate 0 only; the fitted inverse lengthscale of the
  // active dimension should dominate every inactive one in most runs.
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(900 + seed);
    std::vector<GpObservation> obs;
    for (int i = 0; i < 24; ++i) {
      std::vector<double> x(5);
      for (double& v : x) v = rng.uniform01();
      obs.push_back(GpObservation{x, std::sin(6.0 * x[0])});
    }
    const GpSurrogate gp = GpSurrogate::fit(obs, seed);
    const auto& ls = gp.hyperparams().lengthscales;
    bool active_dominates = true;
    for (int d = 1; d < 5; ++d) {
      if (1.0 / ls[d] >= 1.0 / ls[0]) active_dominates = false;
    }
    wins += active_dominates;
  }
  CHECK(wins >= 4);
}

TEST_CASE("gp: far from the data the posterior reverts to the prior") {
  const auto obs = grid_1d([](double x) { return 0.2 + 0.1 * x; },
                           {0.40, 0.45, 0.50});
  GpHyperParams hp;
  hp.lengthscales = {0.02};
  hp.signal_var = 0.3;
  hp.noise_var = 1e-6;
  const GpSurrogate gp(obs, hp, /*prior_mean=*/0.25);
  const auto [mu, var] = gp.posterior(std::vector<double>{0.45 + 30 * 0.02});
  CHECK(std::abs(mu - 0.25) <= 0.01 * 0.3);
  CHECK(std::abs(var - 0.3) <= 0.01 * 0.3);
}

TEST_CASE("gp: latent variance at a training input stays within the noise") {
  const auto obs = grid_1d([](double x) { return x * x; },
                           {0.1, 0.4, 0.6, 0.9});
  GpHyperParams hp;
  hp.lengthscales = {0.3};
  hp.signal_var = 1.0;
  hp.noise_var = 1e-3;
  const GpSurrogate gp(obs, hp, 0.0);
  for (const GpObservation& o : obs) {
    const auto [mu, var] = gp.posterior(o.x);
    CHECK(var <= hp.noise_var + 1e-9);
  }
}

TEST_CASE("gp: posterior mean is linear in the observed values") {
  GpHyperParams hp;
  hp.lengthscales = {0.2, 0.2};
  hp.signal_var = 0.8;
  hp.noise_var = 1e-4;
  std::vector<GpObservation> obs = {GpObservation{{0.2, 0.3}, 0.5},
                                    GpObservation{{0.7, 0.6}, -0.2},
                                    GpObservation{{0.5, 0.9}, 0.3}};
  const GpSurrogate gp(obs, hp, /*prior_mean=*/0.0);
  std::vector<GpObservation> doubled = obs;
  for (GpObservation& o : doubled) o.y *= 2.0;
  const GpSurrogate gp2(doubled, hp, 0.0);
  for (const auto& q : {std::vector<double>{0.4, 0.4},
                        std::vector<double>{0.1, 0.8}}) {
    CHECK(gp2.posterior(q).first ==
          doctest::Approx(2.0 * gp.posterior(q).first).epsilon(1e-9));
  }
}

TEST_CASE("expected_improvement: analytic anchors") {
  CHECK(expected_improvement(0.5, 0.0, 0.5) == 0.0);
  CHECK(expected_improvement(0.4, 0.0, 0.5) == 0.0);
  CHECK(expected_improvement(0.7, 0.0, 0.5) == doctest::Approx(0.2));
  // At mu == best with unit spread, EI is the standard normal density at 0.
  CHECK(expected_improvement(0.5, 1.0, 0.5) ==
        doctest::Approx(0.3989422804).epsilon(1e-6));
}

TEST_CASE("expected_improvement: non-negative and monotone in sigma") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double best = rng.uniform(-1, 1);
    const double mu = best - rng.uniform(0, 1);  // mu <= best
    double prev = -1.0;
    for (double sigma : {0.0, 0.05, 0.2, 0.5, 1.0, 2.0}) {
      const double ei = expected_improvement(mu, sigma, best);
      CHECK(ei >= 0.0);
      CHECK(ei >= prev);
      prev = ei;
    }
    // Also non-negative above the incumbent.
    CHECK(expected_improvement(best + 0.3, rng.uniform(0, 2), best) >= 0.0);
  }
}

TEST_CASE("propose: no observations means a uniform point in the box") {
  const SearchBox box{-1.0, 1.0, 6};
  Rng r1(3), r2(3);
  const auto a = propose(nullptr, box, 64, r1, {});
  CHECK(a.size() == 6);
  for (double v : a) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  // Identical rng state reproduces the draw.
  CHECK(propose(nullptr, box, 64, r2, {}) == a);
}

TEST_CASE("propose: lands in the dense-grid high-EI region on a 1D problem") {
  // Observations leave an obvious untried basin around x ~ 0.65.
  const auto obs = grid_1d(
      [](double x) { return -(x - 0.65) * (x - 0.65) * 4.0 + 0.9; },
      {0.05, 0.2, 0.35, 0.95});
  const GpSurrogate gp = GpSurrogate::fit(obs, /*seed=*/11);
  const double best = gp.best_observed();
  double grid_max = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    const auto [mu, var] = gp.posterior(std::vector<double>{x});
    grid_max = std::max(grid_max,
                        expected_improvement(mu, std::sqrt(var), best));
  }
  Rng rng(13);
  const auto x = propose(&gp, SearchBox{0.0, 1.0, 1}, 128, rng, {});
  const auto [mu, var] = gp.posterior(x);
  const double ei = expected_improvement(mu, std::sqrt(var), best);
  CHECK(ei >= 0.95 * grid_max);
}

TEST_CASE("propose: pending hallucination moves the second pick away") {
  const auto obs = grid_1d(
      [](double x) { return -(x - 0.65) * (x - 0.65) * 4.0 + 0.9; },
      {0.05, 0.2, 0.35, 0.95});
  const GpSurrogate gp = GpSurrogate::fit(obs, /*seed=*/11);
  Rng r1(17), r2(17);
  const auto first = propose(&gp, SearchBox{0.0, 1.0, 1}, 128, r1, {});
  std::vector<std::vector<double>> pending = {first};
  const auto second = propose(&gp, SearchBox{0.0, 1.0, 1}, 128, r2, pending);
  CHECK(std::abs(second[0] - first[0]) > 0.02);
}

TEST_CASE("filter_buffer_by_reward: zero weights keep everything") {
  const Context ctx = ts::fig_context();
  std::vector<Context> ctxs = {ctx};
  ExperienceBuffer buf(ctxs);
  buf.insert(ctx, ctx.gold, 1.0);
  buf.insert(ctx, ts::fig_detour(), 1.0);
  buf.insert(ctx, ts::fig_alternate(), 1.0);
  AuxRewardParams phi;
  phi.mode = RewardMode::Linear;
  const ExperienceBuffer filtered = filter_buffer_by_reward(buf, phi, ctxs);
  CHECK(filtered.size(ctx.id) == 3);
}

TEST_CASE("filter_buffer_by_reward: a reward separating gold keeps only gold") {
  const Context ctx = ts::fig_context();
  std::vector<Context> ctxs = {ctx};
  ExperienceBuffer buf(ctxs);
  buf.insert(ctx, ctx.gold, 1.0);
  buf.insert(ctx, ts::fig_detour(), 1.0);

  // Build the separator from the feature difference: reward features that
  // fire for gold but not for the detour.
  const FeatureVector fg = extract_features(ctx.instruction, ctx.gold);
  const FeatureVector fd = extract_features(ctx.instruction, ts::fig_detour());
  AuxRewardParams phi;
  phi.mode = RewardMode::Linear;
  for (int i = 0; i < kSingleFeatures; ++i) {
    phi.w_single[i] = static_cast<double>(fg.v[i]) - static_cast<double>(fd.v[i]);
  }
  REQUIRE(linear_score(phi, fg) > linear_score(phi, fd));

  const ExperienceBuffer filtered = filter_buffer_by_reward(buf, phi, ctxs);
  REQUIRE(filtered.size(ctx.id) == 1);
  CHECK(filtered.entries(ctx.id)[0].traj == ctx.gold);

  // Idempotent: filtering the filtered buffer changes nothing.
  const ExperienceBuffer twice = filter_buffer_by_reward(filtered, phi, ctxs);
  CHECK(twice.size(ctx.id) == 1);
  CHECK(twice.entries(ctx.id)[0].traj == ctx.gold);
}

TEST_CASE("filter_buffer_by_reward: nonempty stays nonempty, empty stays "
          "empty") {
  const Dataset ds = generate_dataset(19, 5, 3, 10, 2, true);
  ExperienceBuffer buf(ds.train);
  for (std::size_t i = 0; i + 1 < ds.train.size(); ++i) {
    buf.insert(ds.train[i], ds.train[i].gold, 1.0);
  }
  Rng rng(7);
  AuxRewardParams phi;
  for (double& w : phi.w_single) w = rng.uniform(-1, 1);
  phi.tie_para = rng.uniform(-1, 1);
  phi.mode = RewardMode::Linear;
  const ExperienceBuffer filtered = filter_buffer_by_reward(buf, phi, ds.train);
  for (const Context& ctx : ds.train) {
    CHECK((filtered.size(ctx.id) > 0) == (buf.size(ctx.id) > 0));
  }
}

TEST_CASE("trial_exploration_accept: strict improvement only") {
  CHECK(trial_exploration_accept(0.5, {}));
  const std::vector<double> scores = {0.2, 0.7, 0.4};
  CHECK(!trial_exploration_accept(0.7, scores));   // tie -> reject
  CHECK(!trial_exploration_accept(0.69, scores));
  CHECK(trial_exploration_accept(0.71, scores));
}

TEST_CASE("borl_run: single trial equals one filtered run, log is monotone, "
          "reruns are identical") {
  const Dataset ds = generate_dataset(20, 5, 3, 15, 3, true);
  ExperienceBuffer base = build_fixed_buffers(
      ds.train, RewardSetting::Underspecified, 2, 4000, /*seed=*/0);

  BorlConfig cfg;
  cfg.trials = 4;
  cfg.trial_train.objective = Objective::Mapo;
  cfg.trial_train.learning_rate = 0.05;
  cfg.trial_train.entropy_weight = 0.01;
  cfg.trial_train.epochs = 12;
  cfg.trial_train.metrics_every = 0;
  cfg.n_explore = 1;
  cfg.acq_restarts = 32;
  cfg.seed = 9;

  const BorlResult run1 = borl_run(ds.train, ds.val, base, PolicyParams{}, cfg);
  const BorlResult run2 = borl_run(ds.train, ds.val, base, PolicyParams{}, cfg);
  REQUIRE(run1.log.size() == 4);
  double best = -1.0;
  for (std::size_t i = 0; i < run1.log.size(); ++i) {
    best = std::max(best, run1.log[i].val_acc);
    CHECK(run1.log[i].best_so_far == best);
    CHECK(run1.log[i].val_acc == run2.log[i].val_acc);
    CHECK(run1.log[i].phi.flat() == run2.log[i].phi.flat());
  }
  CHECK(run1.best_val_acc == best);

  // K = 1 reduces to a single proposal with no surrogate behind it.
  BorlConfig one = cfg;
  one.trials = 1;
  const BorlResult single = borl_run(ds.train, ds.val, base, PolicyParams{}, one);
  CHECK(single.log.size() == 1);
  CHECK(single.best_val_acc == single.log[0].val_acc);
  CHECK(single.log[0].phi.flat() == run1.log[0].phi.flat());
}

TEST_CASE("borl_run: batched proposals cover the trial budget deterministically") {
  const Dataset ds = generate_dataset(22, 5, 3, 10, 2, true);
  ExperienceBuffer base = build_fixed_buffers(
      ds.train, RewardSetting::Underspecified, 2, 4000, /*seed=*/0);
  BorlConfig cfg;
  cfg.trials = 5;
  cfg.batch = 2;
  cfg.trial_train.learning_rate = 0.05;
  cfg.trial_train.epochs = 8;
  cfg.trial_train.metrics_every = 0;
  cfg.acq_restarts = 16;
  cfg.seed = 4;
  const BorlResult a = borl_run(ds.train, ds.val, base, PolicyParams{}, cfg);
  const BorlResult b = borl_run(ds.train, ds.val, base, PolicyParams{}, cfg);
  REQUIRE(a.log.size() == 5);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].val_acc == b.log[i].val_acc);
  }
}
