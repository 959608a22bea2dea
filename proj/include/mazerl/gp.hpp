#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mazerl/rng.hpp"

namespace mazerl {

struct GpObservation {
  std::vector<double> x;  // inputs normalized to the unit box
  double y = 0.0;
};

struct GpHyperParams {
  std::vector<double> lengthscales;  // one per input dimension
  double signal_var = 1.0;
  double noise_var = 1e-6;
};

// Exact Gaussian-process posterior with a Matern 5/2 kernel and per-dimension
// lengthscales. The kernel matrix factorization is cached at construction;
// jitter escalates up to 1e-6 before factorization failure becomes an error.
class GpSurrogate {
 public:
  GpSurrogate(std::vector<GpObservation> observations, GpHyperParams hp,
              double prior_mean);

  // Hyperparameters chosen by seeded random search over log-space bounds
  // maximizing the log marginal likelihood, refined by coordinate descent.
  // The prior mean is the observation mean.
  static GpSurrogate fit(std::vector<GpObservation> observations,
                         std::uint64_t seed);

  // Posterior mean and (non-negative) latent variance at x.
  std::pair<double, double> posterior(std::span<const double> x) const;

  double best_observed() const;
  std::size_t num_observations() const { return obs_.size(); }
  std::size_t dim() const { return hp_.lengthscales.size(); }
  const GpHyperParams& hyperparams() const { return hp_; }
  double prior_mean() const { return prior_mean_; }

  // Same hyperparameters with extra observations appended; used to
  // hallucinate pending proposals at their posterior mean.
  GpSurrogate with_extra(std::vector<GpObservation> extra) const;

  static double log_marginal_likelihood(
      const std::vector<GpObservation>& observations, const GpHyperParams& hp,
      double prior_mean);

 private:
  void factorize();

  std::vector<GpObservation> obs_;
  GpHyperParams hp_;
  double prior_mean_ = 0.0;
  std::vector<double> chol_;   // lower-triangular factor of K + noise*I
  std::vector<double> alpha_;  // (K + noise*I)^-1 (y - mean)
};

double matern52(std::span<const double> a, std::span<const double> b,
                const GpHyperParams& hp);

// Expected improvement for maximization; max(mu - best, 0) when sigma is 0.
double expected_improvement(double mu, double sigma, double best);

struct SearchBox {
  double lo = -1.0;
  double hi = 1.0;
  int dim = 1;
};

// Maximizes expected improvement with seeded multistart plus coordinate-wise
// refinement. With no model (or no observations) returns a uniform point.
// Pending points are hallucinated at the posterior mean before scoring.
std::vector<double> propose(const GpSurrogate* model, const SearchBox& box,
                            int restarts, Rng& rng,
                            std::span<const std::vector<double>> pending);

}  // namespace mazerl
