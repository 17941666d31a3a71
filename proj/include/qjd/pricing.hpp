#pragma once

// European call pricing. Black-Scholes closed form, the Merton lognormal
// jump series, the variance-mixture price (BS integrated against the
// q-Gaussian mixing density), the generalized jump-diffusion price (gamma
// mixing of the jump intensity outside a Poisson series of variance-mixture
// prices, with v_k = sqrt(v^2 + k nu^2/T) and
// r_k = r - lambda(m-1) + k log(m)/T), and implied-volatility inversion.
//
// All model parameters are per trading day; maturities carry a unit tag
// with 252 trading days to the year.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "qjd/errors.hpp"
#include "qjd/jump_model.hpp"
#include "qjd/qgaussian.hpp"
#include "qjd/quadrature.hpp"
#include "qjd/roots.hpp"
#include "qjd/special_functions.hpp"

namespace qjd {

inline constexpr double trading_days_per_year = 252.0;

enum class TimeUnit { trading_days, years };

struct Maturity {
  double value = 0.0;
  TimeUnit unit = TimeUnit::trading_days;

  double days() const {
    return unit == TimeUnit::trading_days ? value : value * trading_days_per_year;
  }
  static Maturity in_days(double d) { return {d, TimeUnit::trading_days}; }
  static Maturity in_years(double y) { return {y, TimeUnit::years}; }
};

struct MarketInputs {
  double spot = 0.0;
  double strike = 0.0;
  double rate = 0.0;  // continuously compounded, per trading day
  Maturity maturity;

  MarketInputs(double spot_in, double strike_in, double rate_in, Maturity mat)
      : spot(spot_in), strike(strike_in), rate(rate_in), maturity(mat) {
    if (!(spot > 0.0 && strike > 0.0))
      throw ValidationError("MarketInputs: spot and strike must be positive");
    if (!(maturity.days() >= 0.0))
      throw ValidationError("MarketInputs: maturity must be nonnegative");
  }
};

struct GJDModel {
  QGaussianParams diffusion;  // daily q-Gaussian (q, beta)
  JumpParams jumps;           // daily horizon

  GJDModel(QGaussianParams d, JumpParams j) : diffusion(d), jumps(std::move(j)) {
    if (jumps.horizon != Horizon::daily)
      throw ValidationError("GJDModel: jump parameters must be daily");
  }

  // sd implied by the q-Gaussian variance; the matched-volatility BS input
  double historical_volatility() const { return diffusion.sd(); }
};

struct QuadratureConfig {
  double abs_tol = 1e-9;    // absolute, in price units
  double rel_tol = 1e-8;
  double series_tol = 1e-12;       // Poisson series tail cutoff
  int max_k = 60;                  // nominal series cap, see gjd_call
  double lambda_upper_quantile = 1.0 - 1e-10;  // f_Lambda truncation
  double v_tail_mass = 1e-13;      // f_V mass truncated per side
};

// ---------------------------------------------------------------------------
// Black-Scholes

inline double bs_call(double spot, double strike, double vol, double rate,
                      double t) {
  if (!(spot > 0.0 && strike > 0.0))
    throw ValidationError("bs_call: spot and strike must be positive");
  if (vol < 0.0 || t < 0.0)
    throw ValidationError("bs_call: vol and maturity must be nonnegative");
  if (t == 0.0) return std::max(spot - strike, 0.0);
  if (vol == 0.0) return std::max(spot - strike * std::exp(-rate * t), 0.0);
  const double sqrt_t = std::sqrt(t);
  const double d1 =
      (std::log(spot / strike) + (rate + 0.5 * vol * vol) * t) / (vol * sqrt_t);
  const double d2 = d1 - vol * sqrt_t;
  return spot * sf::normal_cdf(d1) -
         strike * std::exp(-rate * t) * sf::normal_cdf(d2);
}

inline double bs_vega(double spot, double strike, double vol, double rate,
                      double t) {
  if (t <= 0.0 || vol <= 0.0) return 0.0;
  const double sqrt_t = std::sqrt(t);
  const double d1 =
      (std::log(spot / strike) + (rate + 0.5 * vol * vol) * t) / (vol * sqrt_t);
  return spot * sf::normal_pdf(d1) * sqrt_t;
}

namespace detail {

// Poisson(mu) weights over a window covering all but ~1e-30 of the mass,
// built by stable recurrence outward from the mode. `clipped` reports that
// the hard cap cut the window short, i.e. the mass deficit is real rather
// than accumulated rounding.
struct PoissonWindow {
  unsigned k_lo = 0;
  std::vector<double> weights;  // weights[i] = pmf(k_lo + i)
  bool clipped = false;
};

inline PoissonWindow poisson_window(double mu, unsigned hard_cap) {
  PoissonWindow win;
  if (mu <= 0.0) {
    win.weights = {1.0};
    return win;
  }
  const double spread = 12.0 * std::sqrt(mu) + 30.0;
  const double lo = std::max(0.0, std::floor(mu - spread));
  double hi = std::ceil(mu + spread);
  if (hi > static_cast<double>(hard_cap)) {
    hi = static_cast<double>(hard_cap);
    win.clipped = true;
  }
  win.k_lo = static_cast<unsigned>(lo);
  if (hi < lo) {
    win.clipped = true;
    return win;
  }
  const auto count = static_cast<std::size_t>(hi - lo) + 1;
  win.weights.assign(count, 0.0);
  const double mode = std::min(hi, std::max(lo, std::floor(mu)));
  const auto mode_idx = static_cast<std::size_t>(mode - lo);
  win.weights[mode_idx] =
      std::exp(-mu + mode * std::log(mu) - sf::log_gamma(mode + 1.0));
  for (std::size_t i = mode_idx; i + 1 < count; ++i) {
    const double k = lo + static_cast<double>(i);
    win.weights[i + 1] = win.weights[i] * mu / (k + 1.0);
  }
  for (std::size_t i = mode_idx; i > 0; --i) {
    const double k = lo + static_cast<double>(i);
    win.weights[i - 1] = win.weights[i] * k / mu;
  }
  return win;
}

}  // namespace detail

// Merton jump-diffusion call: sum over jump counts of Poisson(m lambda T)
// weighted BS prices at (v_k, r_k). Truncated when the cumulative Poisson
// mass exceeds 1 - series_tol and the last term stopped contributing.
inline double merton_call(double spot, double strike, double vol, double rate,
                          double t, double m, double nu, double lambda,
                          double series_tol = 1e-12, unsigned max_k = 4000) {
  if (!(lambda >= 0.0)) throw ValidationError("merton_call: lambda must be nonnegative");
  if (!(m > 0.0)) throw ValidationError("merton_call: m must be positive");
  if (!(nu >= 0.0)) throw ValidationError("merton_call: nu must be nonnegative");
  if (t == 0.0) return std::max(spot - strike, 0.0);
  if (lambda == 0.0) return bs_call(spot, strike, vol, rate, t);

  const double mu = m * lambda * t;
  const double log_m = std::log(m);
  const auto win = detail::poisson_window(mu, max_k);
  double price = 0.0;
  double mass = 0.0;
  bool done = false;
  for (std::size_t i = 0; i < win.weights.size(); ++i) {
    const double k = static_cast<double>(win.k_lo + i);
    const double w = win.weights[i];
    const double v_k = std::sqrt(vol * vol + k * nu * nu / t);
    const double r_k = rate - lambda * (m - 1.0) + k * log_m / t;
    const double term = w * bs_call(spot, strike, v_k, r_k, t);
    price += term;
    mass += w;
    if (mass > 1.0 - series_tol && term < series_tol * std::max(price, 1e-300)) {
      done = true;
      break;
    }
  }
  if (!done && win.clipped && mass < 1.0 - series_tol)
    throw NumericError("merton_call: series cap reached before tolerance",
                       (1.0 - mass) * spot, series_tol * std::max(price, 1e-300));
  return price;
}

namespace detail {

// Fixed v-nodes for the mixing integral, derived from an adaptive pass and
// reused across every (lambda, k) pair of one gjd_call. Each evaluation
// also yields a Kronrod-vs-Gauss error estimate; pairs that miss the inner
// tolerance fall back to fully adaptive integration.
struct MixingGrid {
  std::vector<double> v;        // node locations
  std::vector<double> coef_k;   // K15 weight * Jacobian * f_V(v)
  std::vector<double> coef_g;   // G7 weight * same (zero on Kronrod-only nodes)
  double v_lo = 0.0, v_hi = 0.0;

  template <class F>
  std::pair<double, double> apply(F&& f) const {
    double k15 = 0.0, g7 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double fv = f(v[i]);
      k15 += coef_k[i] * fv;
      g7 += coef_g[i] * fv;
    }
    return {k15, std::fabs(k15 - g7)};
  }
};

template <class Probe>
inline MixingGrid build_mixing_grid(const QGaussianParams& diffusion,
                                    double v_tail_mass,
                                    const std::vector<Probe>& probes,
                                    double inner_tol) {
  MixingGrid grid;
  const auto [v_lo, v_hi] = mixing_v_bounds(diffusion, v_tail_mass);
  grid.v_lo = v_lo;
  grid.v_hi = v_hi;

  // Panel structure in w = ln v from adaptive runs on representative
  // integrands of the series (true scale, so the threshold is meaningful).
  std::vector<double> boundaries;
  for (const auto& bs_probe : probes) {
    auto probe = [&](double w) {
      const double v = std::exp(w);
      return mixing_density(v, diffusion) * bs_probe(v) * v;
    };
    struct Seg { double a, b; };
    std::vector<Seg> stack;
    const double w_lo = std::log(v_lo);
    const double w_hi = std::log(v_hi);
    for (int i = 0; i < 8; ++i)
      stack.push_back({w_lo + (w_hi - w_lo) * i / 8.0,
                       w_lo + (w_hi - w_lo) * (i + 1) / 8.0});
    std::vector<Seg> accepted;
    int budget = 400;
    while (!stack.empty() && budget-- > 0) {
      const Seg seg = stack.back();
      stack.pop_back();
      const auto panel = quad::detail::evaluate_panel(probe, seg.a, seg.b);
      if (panel.error < inner_tol * 0.05 || seg.b - seg.a < 1e-6) {
        accepted.push_back(seg);
      } else {
        const double mid = 0.5 * (seg.a + seg.b);
        stack.push_back({seg.a, mid});
        stack.push_back({mid, seg.b});
      }
    }
    for (const auto& seg : accepted) {
      boundaries.push_back(seg.a);
      boundaries.push_back(seg.b);
    }
  }
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end(),
                               [](double a, double b) { return b - a < 1e-9; }),
                   boundaries.end());

  for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
    const double a = boundaries[s];
    const double b = boundaries[s + 1];
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int j = 0; j < 15; ++j) {
      const int idx = j < 8 ? j : 14 - j;  // kronrod table is symmetric
      const double x = j < 8 ? -quad::detail::kronrod_x[idx]
                             : quad::detail::kronrod_x[idx];
      const double w = center + half * x;
      const double v = std::exp(w);
      const double base = half * v * mixing_density(v, diffusion);
      grid.v.push_back(v);
      grid.coef_k.push_back(base * quad::detail::kronrod_w[idx]);
      const bool gauss_node = idx % 2 == 1 || idx == 7;
      grid.coef_g.push_back(
          gauss_node ? base * quad::detail::gauss_w[idx == 7 ? 3 : idx / 2] : 0.0);
    }
  }
  return grid;
}

}  // namespace detail

// Variance-mixture call: BS integrated over the volatility scale v drawn
// from the q-Gaussian mixing density, with the series shift
// v_k = sqrt(v^2 + k nu^2 / T) applied under the integral.
inline double vmbm_call(double spot, double strike, double rate_eff, double t,
                        const QGaussianParams& diffusion, unsigned k_jumps,
                        double nu, const QuadratureConfig& cfg = {}) {
  if (t == 0.0) return std::max(spot - strike, 0.0);
  const double shift = static_cast<double>(k_jumps) * nu * nu / t;
  if (diffusion.q == 1.0) {
    const double v0 = 1.0 / std::sqrt(2.0 * diffusion.beta);
    return bs_call(spot, strike, std::sqrt(v0 * v0 + shift), rate_eff, t);
  }
  const auto [v_lo, v_hi] = mixing_v_bounds(diffusion, cfg.v_tail_mass);
  quad::Options opts;
  opts.abs_tol = cfg.abs_tol;
  opts.rel_tol = cfg.rel_tol;
  auto integrand = [&](double v) {
    return mixing_density(v, diffusion) *
           bs_call(spot, strike, std::sqrt(v * v + shift), rate_eff, t);
  };
  return quad::integrate_log_scaled(integrand, v_lo, v_hi, opts).value;
}

struct PriceResult {
  double price = 0.0;
  double error_bound = 0.0;
};

// Generalized jump-diffusion call, the pricing formula of this library:
//
//   P = int_0^inf sum_k exp(-m lambda T) (m lambda T)^k / k!
//                 * P_VMBM(S, K, r_k, T) f_Lambda(lambda; s, tau) dlambda
//
// evaluated lambda-outer / k-middle / v-inner. For s < 1 the outer
// integral uses the u = lambda^s substitution that removes the endpoint
// singularity. The nominal series cap cfg.max_k is widened per lambda to
// cover the Poisson bulk m lambda T + 12 sqrt(.) + 30; the fixed cap would
// spuriously fail in the gamma tail at long maturities.
inline PriceResult gjd_call(const MarketInputs& inputs, const GJDModel& model,
                            const QuadratureConfig& cfg = {}) {
  const double spot = inputs.spot;
  const double strike = inputs.strike;
  const double rate = inputs.rate;
  const double t = inputs.maturity.days();
  if (t == 0.0) return {std::max(spot - strike, 0.0), 0.0};

  const double m = model.jumps.m;
  const double nu = model.jumps.nu;
  const double s = model.jumps.s;
  const double tau = model.jumps.tau;
  const double log_m = std::log(m);
  const double lambda_max =
      sf::gamma_quantile(s, tau, cfg.lambda_upper_quantile);
  const double lambda_tail_mass = 1.0 - cfg.lambda_upper_quantile;

  const double price_scale =
      std::max(bs_call(spot, strike, model.diffusion.sd(), rate, t), 1e-3 * spot);
  const double outer_abs = std::max(cfg.abs_tol, cfg.rel_tol * price_scale);
  const double inner_tol = 0.02 * outer_abs;

  // Probes for grid construction: the k = 0 term at the mean intensity and
  // the term at the Poisson mode there.
  const double lambda_mean = s / tau;
  const double mu_mean = m * lambda_mean * t;
  const unsigned k_mode = static_cast<unsigned>(std::floor(mu_mean));
  const bool degenerate_diffusion = model.diffusion.q == 1.0;
  detail::MixingGrid grid;
  if (!degenerate_diffusion) {
    auto make_probe = [&](unsigned k) {
      const double shift = static_cast<double>(k) * nu * nu / t;
      const double r_k = rate - lambda_mean * (m - 1.0) + k * log_m / t;
      return [=](double v) {
        return bs_call(spot, strike, std::sqrt(v * v + shift), r_k, t);
      };
    };
    std::vector<std::function<double(double)>> probes{make_probe(0)};
    if (k_mode > 0) probes.push_back(make_probe(k_mode));
    grid = detail::build_mixing_grid(model.diffusion, cfg.v_tail_mass, probes,
                                     inner_tol);
  }

  auto mixture_price = [&](unsigned k, double r_k) {
    const double shift = static_cast<double>(k) * nu * nu / t;
    if (degenerate_diffusion) {
      const double v0 = 1.0 / std::sqrt(2.0 * model.diffusion.beta);
      return bs_call(spot, strike, std::sqrt(v0 * v0 + shift), r_k, t);
    }
    auto bs_at = [&](double v) {
      return bs_call(spot, strike, std::sqrt(v * v + shift), r_k, t);
    };
    const auto [value, err] = grid.apply(bs_at);
    if (err <= inner_tol) return value;
    // rare: fall back to fully adaptive integration for this pair
    quad::Options opts;
    opts.abs_tol = inner_tol;
    opts.rel_tol = cfg.rel_tol;
    auto integrand = [&](double v) {
      return mixing_density(v, model.diffusion) * bs_at(v);
    };
    return quad::integrate_log_scaled(integrand, grid.v_lo, grid.v_hi, opts).value;
  };

  auto series_price = [&](double lambda) {
    const double mu = m * lambda * t;
    const double drift = rate - lambda * (m - 1.0);
    const double spread = 12.0 * std::sqrt(mu) + 30.0;
    const auto cap = static_cast<unsigned>(
        std::max(static_cast<double>(cfg.max_k), mu + spread + 1.0));
    const auto win = detail::poisson_window(mu, cap);
    double price = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < win.weights.size(); ++i) {
      const double k = static_cast<double>(win.k_lo + i);
      const double w = win.weights[i];
      const double r_k = drift + k * log_m / t;
      const double term = w * mixture_price(win.k_lo + static_cast<unsigned>(i), r_k);
      price += term;
      mass += w;
      if (mass > 1.0 - cfg.series_tol &&
          term < cfg.series_tol * std::max(price, 1e-300))
        return price;
    }
    if (win.clipped && mass < 1.0 - cfg.series_tol)
      throw NumericError("gjd_call: Poisson series cap reached before tolerance",
                         (1.0 - mass) * spot, cfg.series_tol);
    return price;
  };

  quad::Options outer;
  outer.abs_tol = outer_abs;
  outer.rel_tol = cfg.rel_tol;
  quad::Result result;
  if (s < 1.0) {
    const double log_front = s * std::log(tau) - sf::log_gamma(s) - std::log(s);
    auto integrand = [&](double u) {
      // lambda may underflow to zero for tiny s; the limit is finite and
      // series_price degenerates to the single k = 0 term there
      const double lambda = std::pow(u, 1.0 / s);
      return std::exp(log_front - tau * lambda) * series_price(lambda);
    };
    result = quad::integrate(integrand, 0.0, std::pow(lambda_max, s), outer);
  } else {
    auto integrand = [&](double lambda) {
      if (lambda <= 0.0) return 0.0;
      return gamma_mixing_density(lambda, model.jumps) * series_price(lambda);
    };
    result = quad::integrate(integrand, 0.0, lambda_max, outer);
  }

  PriceResult out;
  out.price = result.value;
  out.error_bound = result.error + lambda_tail_mass * spot +
                    2.0 * cfg.v_tail_mass * spot + cfg.series_tol * spot;
  const double lower = 0.999 * std::max(spot - strike * std::exp(-rate * t), 0.0);
  if (!(out.price >= lower && out.price <= spot * (1.0 + 1e-9)))
    throw NumericError("gjd_call: price escaped the no-arbitrage band",
                       out.price, spot);
  return out;
}

// The unique BS volatility reproducing an observed call price, by Brent
// root-finding inside the no-arbitrage band.
inline double implied_vol(double price, const MarketInputs& inputs) {
  const double spot = inputs.spot;
  const double strike = inputs.strike;
  const double rate = inputs.rate;
  const double t = inputs.maturity.days();
  if (!(t > 0.0))
    throw ValidationError("implied_vol: maturity must be positive");
  const double lower = std::max(spot - strike * std::exp(-rate * t), 0.0);
  if (!(price > lower))
    throw ValidationError(
        "implied_vol: price at or below the intrinsic bound max(S - K e^{-rT}, 0)");
  if (!(price < spot))
    throw ValidationError("implied_vol: price at or above the spot bound");

  auto objective = [&](double v) {
    return bs_call(spot, strike, v, rate, t) - price;
  };
  double hi = 1.0;
  int guard = 0;
  while (objective(hi) < 0.0) {
    hi *= 2.0;
    if (++guard > 60)
      throw NumericError("implied_vol: could not bracket the volatility");
  }
  return roots::brent(objective, 0.0, hi, 1e-14);
}

struct SmilePoint {
  double strike = 0.0;
  double price = 0.0;
  double implied_vol = 0.0;
};

// Per-strike GJD price and implied volatility across a sorted strike list.
// Strikes are independent pure evaluations, so they run in parallel.
inline std::vector<SmilePoint> smile(const MarketInputs& base,
                                     const std::vector<double>& strikes,
                                     const GJDModel& model,
                                     const QuadratureConfig& cfg = {}) {
  if (strikes.empty()) throw ValidationError("smile: empty strike list");
  if (!std::is_sorted(strikes.begin(), strikes.end()))
    throw ValidationError("smile: strikes must be sorted ascending");
  for (double k : strikes)
    if (!(k > 0.0)) throw ValidationError("smile: strikes must be positive");

  auto price_one = [&](double k) -> SmilePoint {
    try {
      MarketInputs inputs(base.spot, k, base.rate, base.maturity);
      const double price = gjd_call(inputs, model, cfg).price;
      return {k, price, implied_vol(price, inputs)};
    } catch (const NumericError& e) {
      throw NumericError("strike " + std::to_string(k) + ": " + e.what(),
                         e.achieved(), e.requested());
    } catch (const ValidationError& e) {
      throw ValidationError("strike " + std::to_string(k) + ": " + e.what());
    }
  };

  std::vector<std::future<SmilePoint>> futures;
  futures.reserve(strikes.size());
  for (double k : strikes)
    futures.push_back(std::async(std::launch::async, price_one, k));
  std::vector<SmilePoint> out;
  out.reserve(strikes.size());
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace qjd
