#pragma once

// Per-block diagnostics on annual return blocks: the IQR truncation split,
// one-sample Kolmogorov-Smirnov normality test, raw skewness/kurtosis,
// two-sided variance F-tests, and the fence tail-probability check.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qjd/descriptive.hpp"
#include "qjd/errors.hpp"
#include "qjd/special_functions.hpp"

namespace qjd {

struct TruncationSplit {
  std::vector<double> truncated;
  std::vector<double> outliers;
  double fence_low = 0.0;
  double fence_high = 0.0;
  std::size_t block_index = 0;
};

struct NormalityReport {
  double ks_distance = 0.0;
  double p_value = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // raw, so a normal sample gives 3
  double sample_sd = 0.0;
};

// Split a block at the Tukey fences [Q1 - mult*IQR, Q3 + mult*IQR], closed
// on both ends. Quartiles use linear interpolation at (n-1)*p.
inline TruncationSplit iqr_split(std::span<const double> block,
                                 double multiplier = 1.5,
                                 std::size_t block_index = 0) {
  if (block.empty()) throw ValidationError("iqr_split: empty block");
  std::vector<double> sorted(block.begin(), block.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  TruncationSplit split;
  split.fence_low = q1 - multiplier * iqr;
  split.fence_high = q3 + multiplier * iqr;
  split.block_index = block_index;
  for (double x : block) {
    if (x >= split.fence_low && x <= split.fence_high)
      split.truncated.push_back(x);
    else
      split.outliers.push_back(x);
  }
  return split;
}

// Skewness m3/m2^1.5 and raw kurtosis m4/m2^2 with 1/n central moments.
inline std::pair<double, double> moment_diagnostics(std::span<const double> sample) {
  if (sample.size() < 4) throw ValidationError("moment_diagnostics: need n >= 4");
  const double m2 = central_moment(sample, 2);
  if (!(m2 > 0.0)) throw ValidationError("moment_diagnostics: zero variance");
  const double m3 = central_moment(sample, 3);
  const double m4 = central_moment(sample, 4);
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

// One-sample KS test against Normal(sample mean, sample sd). The p-value
// comes from the asymptotic Kolmogorov law at sqrt(n) * D; no correction is
// applied for the estimated parameters.
inline NormalityReport ks_normal_test(std::span<const double> sample) {
  if (sample.size() < 8) throw ValidationError("ks_normal_test: need n >= 8");
  const double mu = mean(sample);
  const double sd = sample_sd(sample);
  if (!(sd > 0.0)) throw ValidationError("ks_normal_test: constant sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = sf::normal_cdf((sorted[i] - mu) / sd);
    const double above = (static_cast<double>(i) + 1.0) / n - cdf;
    const double below = cdf - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  NormalityReport report;
  report.ks_distance = d;
  report.p_value = sf::kolmogorov_tail(std::sqrt(n) * d);
  report.sample_sd = sd;
  const auto [skew, kurt] = moment_diagnostics(sample);
  report.skewness = skew;
  report.kurtosis = kurt;
  return report;
}

// Two-sided F-test p-value for equal variances: p = 2*min(P(F<=f), P(F>=f))
// with f = (sd_a/sd_b)^2 on (n_a-1, n_b-1) degrees of freedom.
inline double variance_ratio_ftest(double sd_a, std::size_t n_a, double sd_b,
                                   std::size_t n_b) {
  if (!(sd_a > 0.0 && sd_b > 0.0))
    throw ValidationError("variance_ratio_ftest: sds must be positive");
  if (n_a < 2 || n_b < 2)
    throw ValidationError("variance_ratio_ftest: need n >= 2 in both samples");
  const double f = (sd_a / sd_b) * (sd_a / sd_b);
  const double cdf = sf::f_cdf(f, static_cast<double>(n_a - 1),
                               static_cast<double>(n_b - 1));
  return 2.0 * std::min(cdf, 1.0 - cdf);
}

// P(X < low) + P(X > high) under a normal fitted to the truncated part:
// the probability that a value lands beyond the fences.
inline double fence_tail_probability(const TruncationSplit& split) {
  if (split.truncated.size() < 2)
    throw ValidationError("fence_tail_probability: truncated part too small");
  const double mu = mean(split.truncated);
  const double sd = sample_sd(split.truncated);
  if (!(sd > 0.0))
    throw ValidationError("fence_tail_probability: degenerate truncated part");
  return sf::normal_cdf((split.fence_low - mu) / sd) +
         (1.0 - sf::normal_cdf((split.fence_high - mu) / sd));
}

}  // namespace qjd
