#include "mazerl/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace mazerl {

namespace {

// In-place lower Cholesky; returns false if a pivot is not positive.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
  return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n,
                 std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

void solve_upper_from_lower(const std::vector<double>& l, std::size_t n,
                            std::vector<double>& b) {
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

std::vector<double> kernel_matrix(const std::vector<GpObservation>& obs,
                                  const GpHyperParams& hp, double jitter) {
  const std::size_t n = obs.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = matern52(obs[i].x, obs[j].x, hp);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
    k[i * n + i] += hp.noise_var + jitter;
  }
  return k;
}

// Factorizes K + noise*I with escalating jitter; throws past 1e-6.
std::vector<double> factorize_with_jitter(
    const std::vector<GpObservation>& obs, const GpHyperParams& hp) {
  for (double jitter = 0.0; jitter <= 1e-6;
       jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0) {
    std::vector<double> k = kernel_matrix(obs, hp, jitter);
    if (cholesky(k, obs.size())) return k;
    if (jitter >= 1e-6) break;
  }
  throw std::runtime_error("kernel matrix not positive definite");
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double matern52(std::span<const double> a, std::span<const double> b,
                const GpHyperParams& hp) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = (a[d] - b[d]) / hp.lengthscales[d];
    r2 += diff * diff;
  }
  const double r = std::sqrt(r2);
  const double s = std::sqrt(5.0) * r;
  return hp.signal_var * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

GpSurrogate::GpSurrogate(std::vector<GpObservation> observations,
                         GpHyperParams hp, double prior_mean)
    : obs_(std::move(observations)), hp_(std::move(hp)),
      prior_mean_(prior_mean) {
  if (obs_.empty()) throw std::invalid_argument("need at least 1 observation");
  for (double l : hp_.lengthscales) {
    if (l <= 0.0) throw std::invalid_argument("lengthscales must be positive");
  }
  if (hp_.signal_var <= 0.0 || hp_.noise_var <= 0.0) {
    throw std::invalid_argument("variances must be positive");
  }
  factorize();
}

void GpSurrogate::factorize() {
  chol_ = factorize_with_jitter(obs_, hp_);
  const std::size_t n = obs_.size();
  alpha_.resize(n);
  for (std::size_t i = 0; i < n; ++i) alpha_[i] = obs_[i].y - prior_mean_;
  solve_lower(chol_, n, alpha_);
  solve_upper_from_lower(chol_, n, alpha_);
}

std::pair<double, double> GpSurrogate::posterior(
    std::span<const double> x) const {
  const std::size_t n = obs_.size();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = matern52(x, obs_[i].x, hp_);
  double mu = prior_mean_;
  for (std::size_t i = 0; i < n; ++i) mu += k[i] * alpha_[i];
  std::vector<double> v = k;
  solve_lower(chol_, n, v);
  double reduction = 0.0;
  for (double vi : v) reduction += vi * vi;
  const double var = std::max(0.0, hp_.signal_var - reduction);
  return {mu, var};
}

double GpSurrogate::best_observed() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const GpObservation& o : obs_) best = std::max(best, o.y);
  return best;
}

GpSurrogate GpSurrogate::with_extra(std::vector<GpObservation> extra) const {
  std::vector<GpObservation> all = obs_;
  for (GpObservation& e : extra) all.push_back(std::move(e));
  return GpSurrogate(std::move(all), hp_, prior_mean_);
}

double GpSurrogate::log_marginal_likelihood(
    const std::vector<GpObservation>& observations, const GpHyperParams& hp,
    double prior_mean) {
  const std::size_t n = observations.size();
  std::vector<double> l;
  try {
    l = factorize_with_jitter(observations, hp);
  } catch (const std::runtime_error&) {
    return -std::numeric_limits<double>::infinity();
  }
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = observations[i].y - prior_mean;
  std::vector<double> z = resid;
  solve_lower(l, n, z);
  double quad = 0.0;
  for (double zi : z) quad += zi * zi;
  double log_det = 0.0;
  for (std::size_t i = 0; i < n; ++i) log_det += std::log(l[i * n + i]);
  return -0.5 * quad - log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpSurrogate GpSurrogate::fit(std::vector<GpObservation> observations,
                             std::uint64_t seed) {
  if (observations.empty()) {
    throw std::invalid_argument("need at least 1 observation");
  }
  const std::size_t dim = observations[0].x.size();
  double mean = 0.0;
  for (const GpObservation& o : observations) mean += o.y;
  mean /= static_cast<double>(observations.size());
  double var = 0.0;
  for (const GpObservation& o : observations) {
    var += (o.y - mean) * (o.y - mean);
  }
  var = std::max(var / static_cast<double>(observations.size()), 1e-8);

  Rng rng = derive_rng(seed, stream::kGpFit);
  const double log_ls_lo = std::log(0.05), log_ls_hi = std::log(20.0);
  const double log_sig_lo = std::log(0.01 * var), log_sig_hi = std::log(100.0 * var);
  const double log_noise_lo = std::log(1e-8 * var), log_noise_hi = std::log(0.5 * var);

  GpHyperParams best;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 256; ++s) {
    GpHyperParams hp;
    hp.lengthscales.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      hp.lengthscales[d] = std::exp(rng.uniform(log_ls_lo, log_ls_hi));
    }
    hp.signal_var = std::exp(rng.uniform(log_sig_lo, log_sig_hi));
    hp.noise_var = std::exp(rng.uniform(log_noise_lo, log_noise_hi));
    const double lml = log_marginal_likelihood(observations, hp, mean);
    if (lml > best_lml) {
      best_lml = lml;
      best = hp;
    }
  }

  // Coordinate descent over log hyperparameters with multiplicative moves.
  const std::array<double, 6> factors = {0.25, 0.5, 0.8, 1.25, 2.0, 4.0};
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (std::size_t d = 0; d < dim + 2; ++d) {
      for (double f : factors) {
        GpHyperParams trial = best;
        if (d < dim) {
          trial.lengthscales[d] = std::clamp(
              trial.lengthscales[d] * f, std::exp(log_ls_lo), std::exp(log_ls_hi));
        } else if (d == dim) {
          trial.signal_var = std::clamp(trial.signal_var * f,
                                        std::exp(log_sig_lo), std::exp(log_sig_hi));
        } else {
          trial.noise_var = std::clamp(trial.noise_var * f,
                                       std::exp(log_noise_lo), std::exp(log_noise_hi));
        }
        const double lml = log_marginal_likelihood(observations, trial, mean);
        if (lml > best_lml) {
          best_lml = lml;
          best = trial;
        }
      }
    }
  }
  return GpSurrogate(std::move(observations), best, mean);
}

double expected_improvement(double mu, double sigma, double best) {
  if (sigma <= 0.0) return std::max(mu - best, 0.0);
  const double z = (mu - best) / sigma;
  return (mu - best) * normal_cdf(z) + sigma * normal_pdf(z);
}

std::vector<double> propose(const GpSurrogate* model, const SearchBox& box,
                            int restarts, Rng& rng,
                            std::span<const std::vector<double>> pending) {
  auto uniform_point = [&]() {
    std::vector<double> x(box.dim);
    for (int d = 0; d < box.dim; ++d) x[d] = rng.uniform(box.lo, box.hi);
    return x;
  };
  if (model == nullptr || model->num_observations() == 0) {
    return uniform_point();
  }

  // Hallucinate pending proposals at their posterior mean so a batch does not
  // re-propose the same region.
  const GpSurrogate* scored = model;
  std::optional<GpSurrogate> augmented;
  if (!pending.empty()) {
    std::vector<GpObservation> fantasies;
    for (const std::vector<double>& p : pending) {
      fantasies.push_back(GpObservation{p, model->posterior(p).first});
    }
    augmented = model->with_extra(std::move(fantasies));
    scored = &*augmented;
  }
  const double best = scored->best_observed();

  auto ei_at = [&](const std::vector<double>& x) {
    const auto [mu, var] = scored->posterior(x);
    return expected_improvement(mu, std::sqrt(var), best);
  };

  std::vector<double> best_x = uniform_point();
  double best_ei = ei_at(best_x);
  for (int r = 1; r < restarts; ++r) {
    std::vector<double> x = uniform_point();
    const double ei = ei_at(x);
    if (ei > best_ei) {
      best_ei = ei;
      best_x = x;
    }
  }

  // Coordinate-wise refinement with shrinking steps, clipped to the box.
  const double width = box.hi - box.lo;
  for (double step : {0.2, 0.05, 0.01, 0.002}) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int d = 0; d < box.dim; ++d) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> x = best_x;
          x[d] = std::clamp(x[d] + dir * step * width, box.lo, box.hi);
          const double ei = ei_at(x);
          if (ei > best_ei) {
            best_ei = ei;
            best_x = x;
          }
        }
      }
    }
  }
  return best_x;
}

}  // namespace mazerl
