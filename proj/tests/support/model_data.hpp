#pragma once

// Synthetic daily-return data drawn from the fitted model: one volatility
// scale per year from the q-Gaussian mixing law, one jump intensity per
// year from the gamma mixing law, Poisson-many lognormal jumps landing on
// uniformly chosen days. Used by the diagnostics tests and the acceptance
// battery.

#include <cstdint>
#include <random>
#include <vector>

#include "qjd/qgaussian.hpp"

namespace testsupport {

struct ModelDataConfig {
  double q = 1.43;
  double daily_variance = 8.5718948825101800e-05;  // 1/(14582.54 * 0.8)
  double s_annual = 3.4;
  double tau = 0.3227;
  double m = 0.9962895;
  double nu = 0.03687745;
  int days_per_year = 252;
  // The fitted jump-size law describes fence exceedances (outliers are
  // defined as exactly that), so by default planted jumps are conditioned
  // to clear the normal-theory fence of their year.
  bool condition_jumps_on_exceedance = true;
};

inline std::vector<std::vector<double>> generate_annual_blocks(
    const ModelDataConfig& cfg, std::size_t n_years, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double beta = qjd::beta_from_variance(cfg.daily_variance, cfg.q);
  const double alpha = (3.0 - cfg.q) / (2.0 * (cfg.q - 1.0));
  const double scale = 2.0 * (cfg.q - 1.0) * beta;
  std::gamma_distribution<double> mixing_u(alpha, 1.0);
  std::gamma_distribution<double> intensity(cfg.s_annual, 1.0 / cfg.tau);
  const double log_jump_mean = std::log(cfg.m) - 0.5 * cfg.nu * cfg.nu;

  std::vector<std::vector<double>> blocks;
  blocks.reserve(n_years);
  for (std::size_t y = 0; y < n_years; ++y) {
    const double v = 1.0 / std::sqrt(scale * mixing_u(rng));
    std::vector<double> block(static_cast<std::size_t>(cfg.days_per_year));
    for (auto& r : block) r = v * z(rng);
    const double lambda = intensity(rng);
    std::poisson_distribution<int> n_jumps(lambda);
    const int jumps = n_jumps(rng);
    std::uniform_int_distribution<int> day(0, cfg.days_per_year - 1);
    // 2.698 v = Q3 + 1.5 IQR of the year's diffusive normal
    const double fence = 2.698 * v;
    for (int j = 0; j < jumps; ++j) {
      double jump = log_jump_mean + cfg.nu * z(rng);
      if (cfg.condition_jumps_on_exceedance) {
        int guard = 0;
        while (std::fabs(jump) <= fence && guard++ < 1000)
          jump = log_jump_mean + cfg.nu * z(rng);
      }
      block[static_cast<std::size_t>(day(rng))] += jump;
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace testsupport
