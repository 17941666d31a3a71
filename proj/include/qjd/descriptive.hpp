#pragma once

// Small sample-statistics helpers shared by the fitting and diagnostic
// modules. Sample variance uses the n-1 denominator; the raw central
// moments used for skewness/kurtosis use 1/n.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qjd/errors.hpp"

namespace qjd {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ValidationError("sample_variance: need at least 2 values");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double sample_sd(std::span<const double> xs) {
  return std::sqrt(sample_variance(xs));
}

// Central moment with 1/n normalization.
inline double central_moment(std::span<const double> xs, int order) {
  if (xs.empty()) throw ValidationError("central_moment: empty sample");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += std::pow(x - m, order);
  return s / static_cast<double>(xs.size());
}

// Linear-interpolation quantile at position (n-1)*p of the sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile_sorted: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> xs, double p) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

}  // namespace qjd
