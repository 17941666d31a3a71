#pragma once

// Negative-binomial model for annual outlier counts, its gamma-Poisson
// mixture representation, the annual -> daily parameter scaling, and the
// lognormal jump-size fit.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "qjd/descriptive.hpp"
#include "qjd/errors.hpp"
#include "qjd/quadrature.hpp"
#include "qjd/special_functions.hpp"

namespace qjd {

enum class Horizon { annual, daily };

// NB(gamma, p) count parameters together with the equivalent gamma mixing
// pair (s = gamma, tau = p/(1-p)) and the lognormal jump size (m, nu).
struct JumpParams {
  double gamma = 1.0;  // NB successes, non-integer allowed
  double p = 0.5;      // NB success probability
  double s = 1.0;      // gamma mixing shape (= gamma at this horizon)
  double tau = 1.0;    // gamma mixing rate = p/(1-p)
  double m = 1.0;      // mean jump size multiple
  double nu = 0.0;     // sd of log jump size
  Horizon horizon = Horizon::annual;

  static JumpParams from_nb(double gamma, double p, Horizon horizon,
                            double m = 1.0, double nu = 0.0) {
    if (!(gamma > 0.0)) throw ValidationError("JumpParams: gamma must be positive");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("JumpParams: p must be in (0,1)");
    if (!(m > 0.0)) throw ValidationError("JumpParams: m must be positive");
    if (!(nu >= 0.0)) throw ValidationError("JumpParams: nu must be nonnegative");
    return JumpParams{gamma, p, gamma, p / (1.0 - p), m, nu, horizon};
  }

  // For externally supplied (s, tau) pairs, e.g. typed in from a report
  // table; gamma and p are derived, never re-fit.
  static JumpParams from_gamma_mixing(double s, double tau, Horizon horizon,
                                      double m = 1.0, double nu = 0.0) {
    if (!(s > 0.0 && tau > 0.0))
      throw ValidationError("JumpParams: s and tau must be positive");
    return from_nb(s, tau / (1.0 + tau), horizon, m, nu);
  }

  double nb_mean() const { return gamma * (1.0 - p) / p; }
  double nb_variance() const { return gamma * (1.0 - p) / (p * p); }
};

// NB pmf (3): Gamma(k+gamma)/(Gamma(k+1) Gamma(gamma)) (1-p)^k p^gamma,
// evaluated in log space.
inline double nb_pmf(unsigned k, const JumpParams& params) {
  const double kk = static_cast<double>(k);
  const double log_pmf = sf::log_gamma(kk + params.gamma) - sf::log_gamma(kk + 1.0) -
                         sf::log_gamma(params.gamma) +
                         kk * std::log1p(-params.p) +
                         params.gamma * std::log(params.p);
  return std::exp(log_pmf);
}

// Method of moments: p = mean/variance, gamma = mean*p/(1-p). Requires
// overdispersion (variance > mean); otherwise a plain Poisson is the
// appropriate model and we refuse the fit.
inline JumpParams fit_nb_mom(std::span<const double> counts) {
  if (counts.size() < 2) throw ValidationError("fit_nb_mom: need at least 2 counts");
  const double m = mean(counts);
  const double v = sample_variance(counts);
  if (!(v > m))
    throw ValidationError(
        "fit_nb_mom: variance <= mean (no overdispersion); use a Poisson fit");
  const double p = m / v;
  const double gamma = m * p / (1.0 - p);
  return JumpParams::from_nb(gamma, p, Horizon::annual);
}

// Poisson alternative for comparison output only.
inline double fit_poisson_rate(std::span<const double> counts) {
  return mean(counts);
}

// Gamma mixing density (4): lambda^{s-1} e^{-tau lambda} tau^s / Gamma(s).
inline double gamma_mixing_density(double lambda, const JumpParams& params) {
  if (!(lambda > 0.0))
    throw ValidationError("gamma_mixing_density: requires lambda > 0");
  const double log_f = (params.s - 1.0) * std::log(lambda) -
                       params.tau * lambda + params.s * std::log(params.tau) -
                       sf::log_gamma(params.s);
  return std::exp(log_f);
}

namespace detail {

// Integrate g(lambda) * f_Lambda(lambda) over (0, inf). For s < 1 the
// substitution lambda = u^{1/s} removes the integrable endpoint
// singularity exactly.
template <class G>
double integrate_against_gamma(G&& g, const JumpParams& params,
                               double tail_mass, const quad::Options& opts) {
  const double s = params.s;
  const double tau = params.tau;
  const double lambda_max = sf::gamma_quantile(s, tau, 1.0 - tail_mass);
  if (s < 1.0) {
    const double log_front = s * std::log(tau) - sf::log_gamma(s) - std::log(s);
    auto integrand = [&](double u) {
      const double lambda = std::pow(u, 1.0 / s);
      return std::exp(log_front - tau * lambda) * g(lambda);
    };
    return quad::integrate(integrand, 0.0, std::pow(lambda_max, s), opts).value;
  }
  auto integrand = [&](double lambda) {
    return gamma_mixing_density(lambda, params) * g(lambda);
  };
  return quad::integrate(integrand, 0.0, lambda_max, opts).value;
}

}  // namespace detail

// Both sides of the gamma-Poisson mixture identity at count k:
// lhs integrates Poisson(k; lambda) against the gamma mixing density by
// quadrature, rhs is the closed-form NB pmf.
inline std::pair<double, double> gamma_poisson_equals_nb(unsigned k,
                                                         const JumpParams& params) {
  const double kk = static_cast<double>(k);
  const double log_k_factorial = sf::log_gamma(kk + 1.0);
  auto poisson = [&](double lambda) {
    // lambda can underflow to zero under the u^(1/s) substitution
    if (lambda == 0.0) return kk == 0.0 ? 1.0 : 0.0;
    return std::exp(-lambda + kk * std::log(lambda) - log_k_factorial);
  };
  quad::Options opts;
  opts.abs_tol = 1e-11;
  opts.rel_tol = 1e-11;
  const double lhs = detail::integrate_against_gamma(poisson, params, 1e-13, opts);
  return {lhs, nb_pmf(k, params)};
}

// Annual -> daily scaling: s divides by 252, tau unchanged.
inline JumpParams to_daily(const JumpParams& params) {
  if (params.horizon == Horizon::daily)
    throw ValidationError("to_daily: parameters are already daily");
  JumpParams daily = params;
  daily.s /= 252.0;
  daily.gamma = daily.s;
  daily.horizon = Horizon::daily;
  return daily;
}

struct JumpSizeFit {
  double m = 1.0;   // sample mean of exp(return)
  double nu = 0.0;  // sample sd of the log jump, i.e. of the raw return
};

// Jump sizes J = exp(return) on the outlier returns: m is the mean multiple
// and nu the sd of log J, consistent with the lognormal form
// m*exp(-nu^2/2 + nu Z).
inline JumpSizeFit fit_jump_size(std::span<const double> outlier_returns) {
  if (outlier_returns.size() < 2)
    throw ValidationError("fit_jump_size: need at least 2 outliers");
  std::vector<double> sizes(outlier_returns.size());
  for (std::size_t i = 0; i < sizes.size(); ++i)
    sizes[i] = std::exp(outlier_returns[i]);
  JumpSizeFit fit;
  fit.m = mean(sizes);
  fit.nu = sample_sd(outlier_returns);
  return fit;
}

}  // namespace qjd
