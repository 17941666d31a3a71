#pragma once

// Tsallis q-Gaussian family on 1 <= q < 5/3: deformed exp/log pair, the
// density G_q(beta; z) = (sqrt(beta)/C_q) e_q(-beta z^2) and its CDF, the
// variance mixture decomposition (mixing density over the volatility
// scale), chi-square sampling, and the two q estimation procedures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qjd/descriptive.hpp"
#include "qjd/errors.hpp"
#include "qjd/roots.hpp"
#include "qjd/special_functions.hpp"

namespace qjd {

inline constexpr double q_variance_limit = 5.0 / 3.0;

// Deformed exponential e_q(x) = [1 + (1-q)x]_+^{1/(1-q)}, e_1 = exp.
// For q > 1 the bracket hits zero at x = 1/(q-1) where e_q diverges.
inline double q_exp(double x, double q) {
  if (q == 1.0) return std::exp(x);
  const double base = 1.0 + (1.0 - q) * x;
  const double expo = 1.0 / (1.0 - q);
  if (base <= 0.0)
    return expo > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::pow(base, expo);
}

// Deformed logarithm ln_q(x) = (x^{1-q} - 1)/(1-q), ln_1 = ln; the inverse
// of q_exp wherever the positive-part clamp is inactive.
inline double q_log(double x, double q) {
  if (!(x > 0.0)) throw ValidationError("q_log: requires x > 0");
  if (q == 1.0) return std::log(x);
  return std::expm1((1.0 - q) * std::log(x)) / (1.0 - q);
}

// Norming constant C_q = sqrt(pi) Gamma((3-q)/(2(q-1))) /
// (sqrt(q-1) Gamma(1/(q-1))); the q -> 1 limit is sqrt(pi).
inline double norming_constant(double q) {
  if (q == 1.0) return sf::sqrt_pi;
  if (!(q > 1.0 && q < 3.0))
    throw ValidationError("norming_constant: requires 1 <= q < 3");
  const double x = 1.0 / (q - 1.0);
  // (3-q)/(2(q-1)) = x - 1/2, so work with the gamma ratio at x
  return std::exp(0.5 * std::log(sf::pi) - 0.5 * std::log(q - 1.0) +
                  sf::log_gamma_ratio(x, -0.5));
}

struct QGaussianParams {
  double q = 1.0;
  double beta = 0.5;

  QGaussianParams(double q_in, double beta_in) : q(q_in), beta(beta_in) {
    if (!(q >= 1.0 && q < q_variance_limit))
      throw ValidationError("QGaussianParams: q must lie in [1, 5/3)");
    if (!(beta > 0.0)) throw ValidationError("QGaussianParams: beta must be positive");
  }

  // variance * beta * (5 - 3q) = 1
  double variance() const { return 1.0 / (beta * (5.0 - 3.0 * q)); }
  double sd() const { return std::sqrt(variance()); }

  static QGaussianParams from_variance(double variance, double q);

  // Student-t equivalent: df = (3-q)/(q-1), scale = 1/sqrt(beta(3-q)).
  double t_degrees_of_freedom() const { return (3.0 - q) / (q - 1.0); }
  double t_scale() const { return 1.0 / std::sqrt(beta * (3.0 - q)); }
};

inline double beta_from_variance(double variance, double q) {
  if (!(q < q_variance_limit))
    throw ValidationError("beta_from_variance: requires q < 5/3");
  if (!(variance > 0.0))
    throw ValidationError("beta_from_variance: variance must be positive");
  return 1.0 / (variance * (5.0 - 3.0 * q));
}

inline QGaussianParams QGaussianParams::from_variance(double variance, double q) {
  return QGaussianParams(q, beta_from_variance(variance, q));
}

inline double density(double z, const QGaussianParams& p) {
  if (p.q == 1.0) {
    return std::sqrt(p.beta / sf::pi) * std::exp(-p.beta * z * z);
  }
  const double base = 1.0 + (p.q - 1.0) * p.beta * z * z;
  return std::sqrt(p.beta) / norming_constant(p.q) *
         std::pow(base, -1.0 / (p.q - 1.0));
}

inline double cdf(double z, const QGaussianParams& p) {
  if (p.q == 1.0) return sf::normal_cdf(z * std::sqrt(2.0 * p.beta));
  return sf::student_t_cdf(z / p.t_scale(), p.t_degrees_of_freedom());
}

// Mixing density f_V(v; q) of the volatility scale in the variance-mixture
// representation: integrating Normal(z; 0, v) against it reproduces the
// q-Gaussian. 1/(2(q-1) beta V^2) is Gamma((3-q)/(2(q-1)), 1) distributed.
inline double mixing_density(double v, const QGaussianParams& p) {
  if (!(v > 0.0)) throw ValidationError("mixing_density: requires v > 0");
  if (!(p.q > 1.0 && p.q < q_variance_limit))
    throw ValidationError("mixing_density: requires 1 < q < 5/3");
  const double q = p.q;
  const double alpha = (3.0 - q) / (2.0 * (q - 1.0));
  const double log_c =
      std::log(2.0) - sf::log_gamma(alpha) - alpha * std::log(2.0 * (q - 1.0));
  const double log_f = log_c + ((q - 3.0) / (2.0 * (q - 1.0))) * std::log(p.beta) -
                       1.0 / (2.0 * (q - 1.0) * p.beta * v * v) -
                       (2.0 / (q - 1.0)) * std::log(v);
  return std::exp(log_f);
}

// Quantile pair [v_lo, v_hi] leaving tail_mass of f_V outside on each side.
inline std::pair<double, double> mixing_v_bounds(const QGaussianParams& p,
                                                 double tail_mass) {
  const double q = p.q;
  const double alpha = (3.0 - q) / (2.0 * (q - 1.0));
  const double scale = 2.0 * (q - 1.0) * p.beta;
  const double u_hi = sf::gamma_quantile(alpha, 1.0, 1.0 - tail_mass);
  const double u_lo = sf::gamma_quantile(alpha, 1.0, tail_mass);
  return {1.0 / std::sqrt(scale * u_hi), 1.0 / std::sqrt(scale * u_lo)};
}

// Draws via the chi-square representation: X = V * Z with
// V^2 = 1/((q-1) beta chi2_df) and df = (3-q)/(q-1).
inline std::vector<double> sample(const QGaussianParams& p, std::size_t n,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  if (p.q == 1.0) {
    const double sd = 1.0 / std::sqrt(2.0 * p.beta);
    for (auto& x : out) x = sd * normal(rng);
    return out;
  }
  const double alpha = (3.0 - p.q) / (2.0 * (p.q - 1.0));
  const double scale = 2.0 * (p.q - 1.0) * p.beta;
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (auto& x : out) {
    const double u = gamma(rng);
    x = normal(rng) / std::sqrt(scale * u);
  }
  return out;
}

enum class CdfObjective { abs_diff, squared_diff };

struct QFitOptions {
  CdfObjective objective = CdfObjective::abs_diff;
  double q_min = 1.01;
  double q_max = 1.66;
  double grid_step = 0.01;
};

struct QFit {
  QGaussianParams params;
  double objective_value = 0.0;     // discrepancy (cdf method) or -|corr| (ferri)
  double beta_variance_check = 0.0;  // cross-check from the variance relation
  std::size_t n_used = 0;
  std::size_t n_zeros_dropped = 0;
  std::string method;
};

namespace detail {

struct PreparedSample {
  std::vector<double> centered;  // sorted
  double variance = 0.0;
  std::size_t n_zeros_dropped = 0;
};

inline PreparedSample prepare_for_estimation(std::span<const double> sample,
                                             std::size_t min_n) {
  PreparedSample prep;
  prep.centered.reserve(sample.size());
  for (double x : sample) {
    if (x == 0.0)
      ++prep.n_zeros_dropped;
    else
      prep.centered.push_back(x);
  }
  if (prep.centered.size() < min_n)
    throw ValidationError("q estimation: sample too small after dropping zeros");
  const double m = mean(prep.centered);
  for (auto& x : prep.centered) x -= m;
  prep.variance = sample_variance(prep.centered);
  if (!(prep.variance > 0.0))
    throw ValidationError("q estimation: sample has zero variance");
  std::sort(prep.centered.begin(), prep.centered.end());
  return prep;
}

}  // namespace detail

// Estimate q by minimizing the aggregate discrepancy between the model CDF
// (beta tied to the sample variance) and the empirical CDF. Zeros are
// dropped and the sample is centered first. Coarse grid, then golden
// section refinement around the best grid point.
inline QFit estimate_q_cdf(std::span<const double> sample,
                           const QFitOptions& options = {}) {
  const auto prep = detail::prepare_for_estimation(sample, 100);
  const auto& xs = prep.centered;
  const double n = static_cast<double>(xs.size());

  auto objective = [&](double q) {
    const QGaussianParams p = QGaussianParams::from_variance(prep.variance, q);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double model = cdf(xs[i], p);
      const double empirical = (static_cast<double>(i) + 0.5) / n;
      const double diff = model - empirical;
      total += options.objective == CdfObjective::abs_diff ? std::fabs(diff)
                                                           : diff * diff;
    }
    return total;
  };

  double best_q = options.q_min;
  double best_val = objective(best_q);
  for (double q = options.q_min + options.grid_step; q <= options.q_max + 1e-12;
       q += options.grid_step) {
    const double val = objective(q);
    if (val < best_val) {
      best_val = val;
      best_q = q;
    }
  }
  const double lo = std::max(options.q_min, best_q - options.grid_step);
  const double hi = std::min(options.q_max, best_q + options.grid_step);
  const double q_hat = roots::golden_min(objective, lo, hi, 1e-5);

  QFit fit{QGaussianParams::from_variance(prep.variance, q_hat),
           objective(q_hat),
           beta_from_variance(prep.variance, q_hat),
           xs.size(),
           prep.n_zeros_dropped,
           "cdf"};
  return fit;
}

// Ferri-style estimate: ln_q of the histogram density ratio g(z)/g(0) is
// linear in z^2 at the true q, so pick the q maximizing the magnitude of
// the (inverse-variance weighted) linear correlation; beta comes from the
// fitted slope. Freedman-Diaconis bins; bins with fewer than 5 counts or
// beyond the central 99% of the sample are excluded - the far-tail bins
// that clear the count cut are upward selection noise and would drag q
// high at moderate n.
inline QFit estimate_q_ferri(std::span<const double> sample,
                             const QFitOptions& options = {}) {
  const auto prep = detail::prepare_for_estimation(sample, 100);
  const auto& xs = prep.centered;
  const double n = static_cast<double>(xs.size());

  const double iqr = quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
  if (!(iqr > 0.0)) throw ValidationError("estimate_q_ferri: zero IQR");
  const double bin_width = 2.0 * iqr / std::cbrt(n);
  const double lo = xs.front();
  const double z_max = std::max(std::fabs(quantile_sorted(xs, 0.995)),
                                std::fabs(quantile_sorted(xs, 0.005)));
  const std::size_t n_bins =
      static_cast<std::size_t>(std::ceil((xs.back() - lo) / bin_width)) + 1;
  std::vector<std::size_t> counts(n_bins, 0);
  for (double x : xs) {
    auto idx = static_cast<std::size_t>((x - lo) / bin_width);
    if (idx >= n_bins) idx = n_bins - 1;
    ++counts[idx];
  }
  const auto center_bin = static_cast<std::size_t>((0.0 - lo) / bin_width);
  if (center_bin >= n_bins || counts[center_bin] < 5)
    throw ValidationError("estimate_q_ferri: empty bin at the center");
  const double g0 =
      static_cast<double>(counts[center_bin]) / (n * bin_width);

  std::vector<double> z2;      // bin centers squared
  std::vector<double> ratio;   // g(z)/g(0)
  std::vector<double> count;   // bin occupancy, the weighting basis
  for (std::size_t j = 0; j < n_bins; ++j) {
    if (counts[j] < 5) continue;
    const double center = lo + (static_cast<double>(j) + 0.5) * bin_width;
    if (std::fabs(center) > z_max) continue;
    const double g = static_cast<double>(counts[j]) / (n * bin_width);
    z2.push_back(center * center);
    ratio.push_back(g / g0);
    count.push_back(static_cast<double>(counts[j]));
  }
  if (z2.size() < 3)
    throw ValidationError("estimate_q_ferri: too few populated bins");

  auto regression = [&](double q) {
    // weighted (corr, slope) of ln_q(ratio) against z^2; the delta-method
    // variance of ln_q(g-hat) is (g/g0)^{-2(q-1)} / count up to constants
    std::vector<double> y(ratio.size());
    std::vector<double> w(ratio.size());
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      y[i] = q_log(ratio[i], q);
      w[i] = count[i] * std::pow(ratio[i], 2.0 * (q - 1.0));
    }
    double w_total = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      w_total += w[i];
      mx += w[i] * z2[i];
      my += w[i] * y[i];
    }
    mx /= w_total;
    my /= w_total;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double dx = z2[i] - mx;
      const double dy = y[i] - my;
      sxx += w[i] * dx * dx;
      syy += w[i] * dy * dy;
      sxy += w[i] * dx * dy;
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    return std::pair{corr, sxy / sxx};
  };
  auto objective = [&](double q) { return -std::fabs(regression(q).first); };

  double best_q = options.q_min;
  double best_val = objective(best_q);
  for (double q = options.q_min + options.grid_step; q <= options.q_max + 1e-12;
       q += options.grid_step) {
    const double val = objective(q);
    if (val < best_val) {
      best_val = val;
      best_q = q;
    }
  }
  const double lo_q = std::max(options.q_min, best_q - options.grid_step);
  const double hi_q = std::min(options.q_max, best_q + options.grid_step);
  const double q_hat = roots::golden_min(objective, lo_q, hi_q, 1e-5);

  const auto [corr, slope] = regression(q_hat);
  if (!(slope < 0.0))
    throw ValidationError("estimate_q_ferri: non-negative slope, not a density peak");
  QFit fit{QGaussianParams(q_hat, -slope),
           -std::fabs(corr),
           beta_from_variance(prep.variance, q_hat),
           xs.size(),
           prep.n_zeros_dropped,
           "ferri"};
  return fit;
}

}  // namespace qjd
