#pragma once

// Adaptive Gauss-Kronrod (G7, K15) quadrature with worst-panel-first
// subdivision, plus the domain transforms used for the semi-infinite and
// whole-line integrals in this library.

#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "qjd/errors.hpp"

namespace qjd::quad {

struct Options {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  int max_panels = 4000;
  // Seed panels before any convergence claim; a single panel can overlook
  // structure much narrower than the domain.
  int initial_subdivisions = 8;
  // When false, running out of panels returns the best estimate instead of
  // throwing; the caller inspects Result::converged.
  bool throw_on_failure = true;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  bool converged = false;
};

namespace detail {

// K15 abscissae on [0,1]; even indices are also the G7 abscissae.
inline constexpr double kronrod_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kronrod_w[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double gauss_w[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  double value;   // K15 estimate
  double error;   // QUADPACK-style error estimate
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel evaluate_panel(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[15];
  const double fc = f(center);
  double resg = gauss_w[3] * fc;
  double resk = kronrod_w[7] * fc;
  double resabs = std::fabs(resk);
  fv[7] = fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kronrod_x[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv[j] = f1;
    fv[14 - j] = f2;
    const double sum = f1 + f2;
    resk += kronrod_w[j] * sum;
    if (j % 2 == 1) resg += gauss_w[j / 2] * sum;
    resabs += kronrod_w[j] * (std::fabs(f1) + std::fabs(f2));
  }
  const double mean = 0.5 * resk;
  double resasc = kronrod_w[7] * std::fabs(fc - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kronrod_w[j] *
              (std::fabs(fv[j] - mean) + std::fabs(fv[14 - j] - mean));
  }
  resabs *= std::fabs(half);
  resasc *= std::fabs(half);
  const double value = resk * half;
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  const double uflow = std::numeric_limits<double>::min();
  if (resabs > uflow / (50.0 * eps)) err = std::max(eps * 50.0 * resabs, err);
  return Panel{a, b, value, err};
}

}  // namespace detail

// Integrate f over the finite interval [a, b].
template <class F>
Result integrate(F&& f, double a, double b, const Options& opts = {}) {
  Result result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  std::priority_queue<detail::Panel> panels;
  const int seeds = std::max(1, opts.initial_subdivisions);
  double total = 0.0;
  double total_err = 0.0;
  for (int i = 0; i < seeds; ++i) {
    const double lo = a + (b - a) * i / seeds;
    const double hi = i + 1 == seeds ? b : a + (b - a) * (i + 1) / seeds;
    detail::Panel panel = detail::evaluate_panel(f, lo, hi);
    total += panel.value;
    total_err += panel.error;
    panels.push(panel);
  }
  int count = seeds;
  while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
    if (count >= opts.max_panels || panels.empty()) {
      if (opts.throw_on_failure)
        throw NumericError("quadrature did not converge", total_err,
                           std::max(opts.abs_tol, opts.rel_tol * std::fabs(total)));
      result.value = total;
      result.error = total_err;
      result.panels = count;
      result.converged = false;
      return result;
    }
    const detail::Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval at floating point resolution; accept its estimate
      total_err -= worst.error;
      continue;
    }
    detail::Panel left = detail::evaluate_panel(f, worst.a, mid);
    detail::Panel right = detail::evaluate_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  result.value = total;
  result.error = total_err;
  result.panels = count;
  result.converged = true;
  return result;
}

// Integrate f over the whole real line through z = center + scale * tan(t).
// scale should be on the order of the integrand's width.
template <class F>
Result integrate_real_line(F&& f, double center, double scale,
                           const Options& opts = {}) {
  if (!(scale > 0.0)) throw ValidationError("integrate_real_line: scale must be positive");
  auto transformed = [&](double t) {
    const double c = std::cos(t);
    const double z = center + scale * std::tan(t);
    const double jac = scale / (c * c);
    const double fz = f(z);
    return fz == 0.0 ? 0.0 : fz * jac;
  };
  constexpr double half_pi = 1.57079632679489661923;
  return integrate(transformed, -half_pi, half_pi, opts);
}

// Integrate f over [lo, hi], 0 < lo < hi, in log space. Spreads the many
// decades that the positive-scale integrands here span.
template <class F>
Result integrate_log_scaled(F&& f, double lo, double hi,
                            const Options& opts = {}) {
  if (!(lo > 0.0 && hi > lo))
    throw ValidationError("integrate_log_scaled: requires 0 < lo < hi");
  auto transformed = [&](double w) {
    const double v = std::exp(w);
    const double fv = f(v);
    return fv == 0.0 ? 0.0 : fv * v;
  };
  return integrate(transformed, std::log(lo), std::log(hi), opts);
}

}  // namespace qjd::quad
