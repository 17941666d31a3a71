#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qjd/qgaussian.hpp"
#include "qjd/quadrature.hpp"
#include "support/oracles.hpp"

using namespace qjd;

namespace {

// fitted-scale parameters used throughout: the reference beta at q = 1.4 and the
// same daily variance refitted at other q values
const double kReferenceBeta = 14582.54;
const double kDailyVariance = 1.0 / (kReferenceBeta * (5.0 - 3.0 * 1.4));

double quad_over_line(const QGaussianParams& p, auto&& f, double tol = 1e-10) {
  quad::Options opts;
  opts.abs_tol = tol;
  opts.rel_tol = tol;
  opts.max_panels = 20000;
  return quad::integrate_real_line(f, 0.0, p.sd(), opts).value;
}

// inverse CDF by bisection, for quantile-placed samples
double quantile_of(const QGaussianParams& p, double prob) {
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid, p) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}


}  // namespace

TEST_CASE("q_exp basics") {
  for (double q : {0.5, 1.0, 1.4, 2.0})
    CHECK(q_exp(0.0, q) == doctest::Approx(1.0).epsilon(1e-15));
  // substitute by hand: q = 2, x = -1 -> [1 + (-1)(-1)]^{-1} = 1/2
  CHECK(q_exp(-1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q_exp(0.3, 1.0) == doctest::Approx(std::exp(0.3)).epsilon(1e-15));
  // long-double evaluation as the high-precision oracle
  const double q = 1.43, x = -5.0;
  const long double base = 1.0L + (1.0L - static_cast<long double>(q)) * x;
  const long double oracle =
      std::exp(std::log(base) / (1.0L - static_cast<long double>(q)));
  CHECK(std::fabs(q_exp(x, q) - static_cast<double>(oracle)) <=
        1e-12 * static_cast<double>(oracle));
  // positive-part clamp: compact support for q < 1 kicks in at x <= -2
  CHECK(q_exp(-3.0, 0.5) == 0.0);
}

TEST_CASE("q_log and the inverse round trip") {
  for (double q : {0.5, 1.0, 1.4, 2.0}) {
    CHECK(q_log(1.0, q) == doctest::Approx(0.0).epsilon(1e-15));
    for (double x = -1.0; x <= 1.0; x += 0.125) {
      CHECK(q_log(q_exp(x, q), q) == doctest::Approx(x).epsilon(1e-12));
    }
  }
  CHECK(std::fabs(q_log(2.0, 1.0 + 1e-8) - std::log(2.0)) < 1e-6);
  CHECK_THROWS_AS(q_log(0.0, 1.4), ValidationError);
  CHECK_THROWS_AS(q_log(-1.0, 1.4), ValidationError);
}

TEST_CASE("norming_constant") {
  CHECK(norming_constant(1.0) == doctest::Approx(sf::sqrt_pi).epsilon(1e-14));
  CHECK(norming_constant(1.0 + 1e-9) ==
        doctest::Approx(sf::sqrt_pi).epsilon(1e-7));
  // C_2 = sqrt(pi) Gamma(1/2) / Gamma(1) = pi
  CHECK(norming_constant(2.0) == doctest::Approx(sf::pi).epsilon(1e-12));
  CHECK_THROWS_AS(norming_constant(3.0), ValidationError);
  CHECK_THROWS_AS(norming_constant(0.9), ValidationError);

  // the constant is exactly what makes the density integrate to one
  const QGaussianParams p(1.43, beta_from_variance(kDailyVariance, 1.43));
  const double total = quad_over_line(p, [&](double z) { return density(z, p); });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("density values and the variance relation") {
  const QGaussianParams p(1.4, kReferenceBeta);
  CHECK(density(0.0, p) ==
        doctest::Approx(std::sqrt(p.beta) / norming_constant(p.q)).epsilon(1e-14));

  // quadrature variance equals 1/(beta(5-3q)) for the reference pair
  const double var =
      quad_over_line(p, [&](double z) { return z * z * density(z, p); }, 1e-13);
  CHECK(std::fabs(var - p.variance()) < 1e-6);
  CHECK(var * p.beta * (5.0 - 3.0 * p.q) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.variance() == doctest::Approx(8.5719e-5).epsilon(1e-4));
  CHECK(p.sd() == doctest::Approx(0.00926).epsilon(1e-2));  // ~0.93% daily

  // normal limit: q = 1, beta = 1/2 is the standard normal
  const QGaussianParams std_normal(1.0, 0.5);
  CHECK(density(0.0, std_normal) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * sf::pi)).epsilon(1e-14));
}

TEST_CASE("beta_from_variance") {
  CHECK(beta_from_variance(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(beta_from_variance(kDailyVariance, 1.4) ==
        doctest::Approx(kReferenceBeta).epsilon(1e-12));
  // round trip
  const QGaussianParams p(1.31, 7777.0);
  CHECK(beta_from_variance(p.variance(), 1.31) ==
        doctest::Approx(7777.0).epsilon(1e-12));
  CHECK_THROWS_AS(beta_from_variance(1.0, 5.0 / 3.0), ValidationError);
}

TEST_CASE("cdf agrees with direct integration of the density") {
  const QGaussianParams p(1.43, beta_from_variance(kDailyVariance, 1.43));
  quad::Options opts;
  opts.abs_tol = 1e-12;
  opts.rel_tol = 1e-11;
  opts.max_panels = 20000;
  // interval probabilities, so tail truncation never enters
  const double z_ref = -0.02;
  for (double z : {-0.005, 0.001, 0.03}) {
    const double by_quad =
        quad::integrate([&](double u) { return density(u, p); }, z_ref, z, opts).value;
    CHECK(std::fabs((cdf(z, p) - cdf(z_ref, p)) - by_quad) < 1e-9);
  }
  CHECK(cdf(0.0, p) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("mixing density: normalization, identity, mode") {
  const QGaussianParams p(1.43, beta_from_variance(kDailyVariance, 1.43));
  const auto [v_lo, v_hi] = mixing_v_bounds(p, 1e-14);
  quad::Options opts;
  opts.abs_tol = 1e-11;
  opts.rel_tol = 1e-10;
  opts.max_panels = 20000;

  const double total = quad::integrate_log_scaled(
      [&](double v) { return mixing_density(v, p); }, v_lo, v_hi, opts).value;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

  // the mixture identity: integrating the normal scale family against the
  // mixing density reproduces the q-Gaussian pointwise
  for (double z : {0.0, 0.01, -0.01, 0.05, -0.05}) {
    const double mixture = quad::integrate_log_scaled(
        [&](double v) {
          return sf::normal_pdf(z / v) / v * mixing_density(v, p);
        },
        v_lo, v_hi, opts).value;
    CHECK(std::fabs(mixture - density(z, p)) < 1e-7);
  }

  // mode: the numeric root of the derivative sits at 1/sqrt(2 beta)
  auto deriv = [&](double v) {
    const double h = 1e-6 * v;
    return (mixing_density(v + h, p) - mixing_density(v - h, p)) / (2.0 * h);
  };
  const double mode = roots::brent(deriv, v_lo, v_hi, 1e-14);
  CHECK(mode == doctest::Approx(1.0 / std::sqrt(2.0 * p.beta)).epsilon(1e-5));

  CHECK_THROWS_AS(mixing_density(0.0, p), ValidationError);
  CHECK_THROWS_AS(mixing_density(0.01, QGaussianParams(1.0, 0.5)),
                  ValidationError);
}

TEST_CASE("sampling matches the law it claims") {
  // q = 1: plain normal with variance 1/(2 beta)
  {
    const QGaussianParams p(1.0, 0.5);
    const auto xs = sample(p, 1000000, 2024);
    CHECK(std::fabs(mean(xs)) < 3.0 / std::sqrt(1e6));
    CHECK(std::fabs(sample_variance(xs) - 1.0) < 3.0 * std::sqrt(2.0 / 1e6));
  }
  // KS distance between draws and the model CDF
  {
    const QGaussianParams p(1.43, beta_from_variance(kDailyVariance, 1.43));
    auto xs = sample(p, 100000, 515151);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double c = cdf(xs[i], p);
      d = std::max({d, (i + 1.0) / n - c, c - i / n});
    }
    CHECK(d < 0.01);
  }
  // MC variance against the analytic relation; q = 1.3 keeps the fourth
  // moment finite so the estimator error is well behaved
  {
    const QGaussianParams p(1.3, beta_from_variance(kDailyVariance, 1.3));
    const auto xs = sample(p, 1000000, 77);
    const double nu = p.t_degrees_of_freedom();
    const double kurt = 3.0 * (nu - 2.0) / (nu - 4.0);
    const double se = p.variance() * std::sqrt((kurt - 1.0) / 1e6);
    CHECK(std::fabs(sample_variance(xs) - p.variance()) < 4.0 * se);
  }
  // heavy-tailed target: still consistent, loose band
  {
    const QGaussianParams p(1.43, beta_from_variance(kDailyVariance, 1.43));
    const auto xs = sample(p, 1000000, 99);
    CHECK(sample_variance(xs) == doctest::Approx(p.variance()).epsilon(0.10));
  }
}

TEST_CASE("estimate_q_cdf recovers known generators") {
  const QGaussianParams truth(1.43, beta_from_variance(kDailyVariance, 1.43));
  const auto xs = sample(truth, 22626, 8675309);
  const auto fit = estimate_q_cdf(xs);
  CHECK(std::fabs(fit.params.q - 1.43) <= 0.05);
  CHECK(fit.method == "cdf");
  CHECK(fit.n_used == 22626);
  CHECK(fit.n_zeros_dropped == 0);

  // normal data: the fit lands at the normal end of the grid
  const QGaussianParams normal_p(1.0, beta_from_variance(kDailyVariance, 1.0));
  const auto normal_xs = sample(normal_p, 100000, 4242);
  CHECK(estimate_q_cdf(normal_xs).params.q <= 1.05);

  std::vector<double> tiny(50, 0.01);
  CHECK_THROWS_AS(estimate_q_cdf(tiny), ValidationError);
  std::vector<double> flat(500, 0.01);
  CHECK_THROWS_AS(estimate_q_cdf(flat), ValidationError);
}

TEST_CASE("estimate_q_cdf on Student-t data reproduces the t density") {
  // t(5) scaled to daily-return size; the fitted q-Gaussian should overlay
  // the true t density
  std::mt19937_64 rng(314159);
  std::student_t_distribution<double> t5(5.0);
  const double scale = 0.01;
  std::vector<double> xs(100000);
  for (auto& x : xs) x = scale * t5(rng);
  const auto fit = estimate_q_cdf(xs);

  auto t5_density = [&](double z) {
    const double u = z / scale;
    const double c = std::exp(sf::log_gamma(3.0) - sf::log_gamma(2.5)) /
                     std::sqrt(5.0 * sf::pi);
    return c / scale * std::pow(1.0 + u * u / 5.0, -3.0);
  };
  const double peak = t5_density(0.0);
  double sup = 0.0;
  for (double z = -0.06; z <= 0.06; z += 0.001)
    sup = std::max(sup, std::fabs(density(z, fit.params) - t5_density(z)));
  CHECK(sup < 0.05 * peak);
}

TEST_CASE("estimate_q_ferri") {
  // synthetic q-Gaussian sample
  const QGaussianParams truth(1.4, beta_from_variance(kDailyVariance, 1.4));
  const auto xs = sample(truth, 100000, 1234567);
  const auto fit = estimate_q_ferri(xs);
  CHECK(std::fabs(fit.params.q - 1.4) <= 0.07);
  CHECK(-fit.objective_value > 0.95);  // |corr| at the chosen q, histogram noise included
  CHECK(fit.params.beta == doctest::Approx(truth.beta).epsilon(0.25));
  CHECK(fit.beta_variance_check == doctest::Approx(truth.beta).epsilon(0.25));
  CHECK(fit.method == "ferri");

  // quantile-placed sample: the histogram equals the density up to O(h^2),
  // so the regression is essentially exactly linear at the true q
  std::vector<double> ideal(60000);
  for (std::size_t i = 0; i < ideal.size(); ++i)
    ideal[i] = quantile_of(truth, (static_cast<double>(i) + 0.5) / ideal.size());
  const auto ideal_fit = estimate_q_ferri(ideal);
  CHECK(-ideal_fit.objective_value > 0.999);
  CHECK(std::fabs(ideal_fit.params.q - 1.4) <= 0.03);

  // normal sample: q near 1 and the correlation there near 1
  const auto normal_xs = sample(QGaussianParams(1.0, 0.5), 100000, 777);
  const auto normal_fit = estimate_q_ferri(normal_xs);
  CHECK(normal_fit.params.q <= 1.06);
  CHECK(-normal_fit.objective_value > 0.99);
}

TEST_CASE("module invariants") {
  std::mt19937_64 rng(2718281);
  std::uniform_real_distribution<double> q_draw(1.02, 1.64);
  std::uniform_real_distribution<double> log_beta(std::log(10.0), std::log(2e4));

  for (int trial = 0; trial < 20; ++trial) {
    const QGaussianParams p(q_draw(rng), std::exp(log_beta(rng)));
    const double total = quad_over_line(p, [&](double z) { return density(z, p); });
    CHECK(std::fabs(total - 1.0) < 1e-7);

    // symmetry is exact in floating point
    for (double z : {0.1 * p.sd(), p.sd(), 3.0 * p.sd()})
      CHECK(density(z, p) == density(-z, p));

    // monotone tails
    double prev = density(0.0, p);
    for (double z = 0.25 * p.sd(); z < 8.0 * p.sd(); z += 0.25 * p.sd()) {
      const double d = density(z, p);
      CHECK(d <= prev);
      prev = d;
    }
  }

  // variance identity on a few draws (quadrature cost is higher)
  for (int trial = 0; trial < 5; ++trial) {
    const QGaussianParams p(q_draw(rng), std::exp(log_beta(rng)));
    const double var = testsupport::variance_by_quadrature(p);
    CHECK(var * p.beta * (5.0 - 3.0 * p.q) == doctest::Approx(1.0).epsilon(1e-6));
  }

  // estimator consistency at n = 2e4, fixed seeds
  const QGaussianParams truth(1.43, beta_from_variance(kDailyVariance, 1.43));
  const auto xs = sample(truth, 20000, 31337);
  CHECK(std::fabs(estimate_q_cdf(xs).params.q - 1.43) <= 0.05);
  CHECK(std::fabs(estimate_q_ferri(xs).params.q - 1.43) <= 0.05);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(QGaussianParams(0.99, 1.0), ValidationError);
  CHECK_THROWS_AS(QGaussianParams(5.0 / 3.0, 1.0), ValidationError);
  CHECK_THROWS_AS(QGaussianParams(1.4, 0.0), ValidationError);
  CHECK_THROWS_AS(QGaussianParams(1.4, -2.0), ValidationError);
}

TEST_CASE("estimate_q_cdf squared objective and zero handling") {
  const QGaussianParams truth(1.43, beta_from_variance(kDailyVariance, 1.43));
  auto xs = sample(truth, 20000, 31337);

  // the squared-discrepancy objective is a configuration choice and
  // recovers the same generator
  QFitOptions squared;
  squared.objective = CdfObjective::squared_diff;
  CHECK(std::fabs(estimate_q_cdf(xs, squared).params.q - 1.43) <= 0.05);

  // exact zeros are dropped and counted, and do not perturb the fit
  const auto baseline = estimate_q_cdf(xs);
  xs.insert(xs.end(), 313, 0.0);
  const auto with_zeros = estimate_q_cdf(xs);
  CHECK(with_zeros.n_zeros_dropped == 313);
  CHECK(with_zeros.n_used == baseline.n_used);
  CHECK(with_zeros.params.q == doctest::Approx(baseline.params.q).epsilon(1e-3));
}
