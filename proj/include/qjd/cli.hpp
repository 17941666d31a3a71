#pragma once

// Batch orchestration behind the command-line front end: fit a parameter
// document from a price CSV, price strike/maturity grids against it, and
// render the diagnostic and overlay tables as plot data. Every error is
// tagged with the pipeline stage that raised it.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qjd/errors.hpp"
#include "qjd/jump_model.hpp"
#include "qjd/market_data.hpp"
#include "qjd/params_io.hpp"
#include "qjd/pricing.hpp"
#include "qjd/qgaussian.hpp"
#include "qjd/robust_stats.hpp"

namespace qjd::cli {

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

template <class F>
auto stage(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError("stage '" + name + "': " + e.what(), e.achieved(),
                       e.requested());
  } catch (const ValidationError& e) {
    throw ValidationError("stage '" + name + "': " + e.what());
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write output file: " + path);
  return out;
}

// fixed-width bin table for the report histograms
inline void write_histogram(const std::string& path,
                            const std::vector<double>& values, int bins) {
  auto out = open_out(path);
  out << "bin_low,bin_high,count\n";
  if (values.empty()) return;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double width = std::max((*mx - lo) / bins, 1e-300);
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - lo) / width);
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  for (std::size_t b = 0; b < counts.size(); ++b) {
    out << fmt(lo + b * width) << ',' << fmt(lo + (b + 1) * width) << ','
        << counts[b] << '\n';
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fit

struct FitConfig {
  std::string prices_path;
  std::string out_params = "params.json";
  std::string out_diagnostics = "diagnostics.csv";
  int block_length = 252;
  double iqr_mult = 1.5;
  std::string q_method = "cdf";  // or "ferri"
};

struct FitOutput {
  FittedParameters parameters;
  std::vector<std::string> warnings;
};

inline FitOutput cmd_fit(const FitConfig& cfg) {
  using detail::stage;
  if (cfg.q_method != "cdf" && cfg.q_method != "ferri")
    throw ValidationError("fit: --q-method must be cdf or ferri, got '" +
                          cfg.q_method + "'");

  const auto loaded =
      stage("load_prices", [&] { return load_prices(cfg.prices_path); });
  const auto returns = stage("log_returns", [&] {
    return log_returns(loaded.prices, cfg.block_length);
  });
  const auto blocks =
      stage("block_annual", [&] { return block_annual(returns); });

  std::vector<TruncationSplit> splits;
  stage("iqr_split", [&] {
    splits.reserve(blocks.blocks.size());
    for (std::size_t b = 0; b < blocks.blocks.size(); ++b)
      splits.push_back(iqr_split(blocks.blocks[b], cfg.iqr_mult, b));
    return 0;
  });

  std::vector<double> truncated_pool;
  std::vector<double> outlier_pool;
  std::vector<double> outlier_counts;
  for (const auto& split : splits) {
    truncated_pool.insert(truncated_pool.end(), split.truncated.begin(),
                          split.truncated.end());
    outlier_pool.insert(outlier_pool.end(), split.outliers.begin(),
                        split.outliers.end());
    outlier_counts.push_back(static_cast<double>(split.outliers.size()));
  }

  const QFit q_fit = stage("estimate_q", [&] {
    return cfg.q_method == "cdf" ? estimate_q_cdf(truncated_pool)
                                 : estimate_q_ferri(truncated_pool);
  });
  const JumpParams nb_annual =
      stage("fit_nb_mom", [&] { return fit_nb_mom(outlier_counts); });
  const JumpParams nb_daily = stage("to_daily", [&] { return to_daily(nb_annual); });
  const JumpSizeFit jump_size =
      stage("fit_jump_size", [&] { return fit_jump_size(outlier_pool); });

  FittedParameters fp;
  fp.q = q_fit.params.q;
  fp.beta = q_fit.params.beta;
  fp.variance = q_fit.params.variance();
  fp.method = q_fit.method;
  fp.n_used = q_fit.n_used;
  fp.n_zeros_dropped = q_fit.n_zeros_dropped;
  fp.gamma = nb_annual.gamma;
  fp.p = nb_annual.p;
  fp.s_annual = nb_annual.s;
  fp.s_daily = nb_daily.s;
  fp.tau = nb_annual.tau;
  fp.m = jump_size.m;
  fp.nu = jump_size.nu;

  stage("write_outputs", [&] {
    save_parameters(fp, cfg.out_params);
    auto out = detail::open_out(cfg.out_diagnostics);
    out << "block_index,n_truncated,n_outliers,sd,skewness,kurtosis,"
           "ks_distance,p_value,tail_probability\n";
    for (const auto& split : splits) {
      const auto report = ks_normal_test(split.truncated);
      out << split.block_index << ',' << split.truncated.size() << ','
          << split.outliers.size() << ',' << detail::fmt(report.sample_sd)
          << ',' << detail::fmt(report.skewness) << ','
          << detail::fmt(report.kurtosis) << ','
          << detail::fmt(report.ks_distance) << ','
          << detail::fmt(report.p_value) << ','
          << detail::fmt(fence_tail_probability(split)) << '\n';
    }
    return 0;
  });

  return {fp, loaded.warnings};
}

// ---------------------------------------------------------------------------
// price / smile

struct PriceConfig {
  std::string params_path;
  double spot = 0.0;
  std::vector<double> strikes;
  double rate_annual = 0.04;
  double day_count = 365.0;  // divisor turning the annual rate into daily
  std::vector<double> maturities;  // trading days, or calendar days when set
  bool calendar_days = false;
  std::string start_date;  // required with calendar_days
  std::string out_prefix = "prices";
  bool write_json = false;
  QuadratureConfig quadrature;
};

inline double daily_rate(const PriceConfig& cfg) {
  if (!(cfg.day_count > 0.0))
    throw ValidationError("price: --day-count must be positive");
  return cfg.rate_annual / cfg.day_count;
}

inline std::vector<double> trading_maturities(const PriceConfig& cfg) {
  if (cfg.maturities.empty())
    throw ValidationError("price: at least one maturity required");
  if (!cfg.calendar_days) return cfg.maturities;
  if (cfg.start_date.empty())
    throw ValidationError("price: --start-date required with --calendar-days");
  const Date start = Date::parse(cfg.start_date, 0, 0);
  std::vector<double> out;
  out.reserve(cfg.maturities.size());
  for (double cd : cfg.maturities)
    out.push_back(trading_days_after(start, static_cast<int>(cd)));
  return out;
}

// One CSV per maturity with the model price, the matched-volatility BS
// price, and both implied vols; per-row implied-vol failures are recorded
// in the note column and the run continues.
inline std::vector<std::string> cmd_price(const PriceConfig& cfg) {
  using detail::fmt;
  if (!(cfg.spot > 0.0)) throw ValidationError("price: --spot must be positive");
  if (cfg.strikes.empty()) throw ValidationError("price: no strikes given");
  const auto fp = detail::stage("load_parameters",
                                [&] { return load_parameters(cfg.params_path); });
  const GJDModel model = fp.to_model();
  const double hist_vol = model.historical_volatility();
  const double rate = daily_rate(cfg);
  const auto maturities = trading_maturities(cfg);

  std::vector<std::string> files;
  for (double t : maturities) {
    const std::string path =
        cfg.out_prefix + "_T" + std::to_string(static_cast<long>(t)) + ".csv";
    auto out = detail::open_out(path);
    out << "strike,model_price,bs_price,implied_vol_model,implied_vol_bs,note\n";
    nlohmann::json rows = nlohmann::json::array();
    for (double strike : cfg.strikes) {
      MarketInputs inputs(cfg.spot, strike, rate, Maturity::in_days(t));
      const PriceResult priced = detail::stage("gjd_call", [&] {
        return gjd_call(inputs, model, cfg.quadrature);
      });
      const double bs = bs_call(cfg.spot, strike, hist_vol, rate, t);
      std::string iv_model = "nan", iv_bs = "nan", note;
      try {
        iv_model = fmt(implied_vol(priced.price, inputs));
      } catch (const ValidationError& e) {
        note = "model: " + std::string(e.what());
      }
      try {
        iv_bs = fmt(implied_vol(bs, inputs));
      } catch (const ValidationError& e) {
        note += note.empty() ? "" : "; ";
        note += "bs: " + std::string(e.what());
      }
      std::replace(note.begin(), note.end(), ',', ';');
      out << fmt(strike) << ',' << fmt(priced.price) << ',' << fmt(bs) << ','
          << iv_model << ',' << iv_bs << ',' << note << '\n';
      if (cfg.write_json) {
        rows.push_back({{"strike", strike},
                        {"model_price", priced.price},
                        {"error_bound", priced.error_bound},
                        {"bs_price", bs},
                        {"implied_vol_model", iv_model},
                        {"implied_vol_bs", iv_bs}});
      }
    }
    if (cfg.write_json) {
      auto jout = detail::open_out(cfg.out_prefix + "_T" +
                                   std::to_string(static_cast<long>(t)) +
                                   ".json");
      jout << rows.dump(2) << "\n";
    }
    files.push_back(path);
  }
  return files;
}

// Strict single-maturity smile: any per-strike failure aborts the run with
// the strike identified.
inline std::string cmd_smile(const PriceConfig& cfg) {
  if (!(cfg.spot > 0.0)) throw ValidationError("smile: --spot must be positive");
  const auto fp = detail::stage("load_parameters",
                                [&] { return load_parameters(cfg.params_path); });
  const GJDModel model = fp.to_model();
  const double rate = daily_rate(cfg);
  const auto maturities = trading_maturities(cfg);
  if (maturities.size() != 1)
    throw ValidationError("smile: exactly one maturity required");
  const double t = maturities.front();

  std::vector<double> strikes = cfg.strikes;
  std::sort(strikes.begin(), strikes.end());
  MarketInputs base(cfg.spot, cfg.spot, rate, Maturity::in_days(t));
  const auto points = detail::stage(
      "smile", [&] { return smile(base, strikes, model, cfg.quadrature); });

  const std::string path =
      cfg.out_prefix + "_T" + std::to_string(static_cast<long>(t)) + ".csv";
  auto out = detail::open_out(path);
  out << "strike,price,implied_vol\n";
  for (const auto& p : points)
    out << detail::fmt(p.strike) << ',' << detail::fmt(p.price) << ','
        << detail::fmt(p.implied_vol) << '\n';
  return path;
}

// ---------------------------------------------------------------------------
// report

struct ReportConfig {
  std::string prices_path;
  std::string params_path;
  std::vector<std::string> smile_csvs;  // price outputs to bundle, optional
  std::string out_dir = "report";
  int block_length = 252;
  double iqr_mult = 1.5;
  std::uint64_t seed = 20240205;
};

// Emits the figure contents as plot data: q-q pairs for the most recent
// blocks, diagnostic histograms, the empirical-vs-model density overlay,
// the mixing density, the NB count overlay in [0,5), [5,10), ... bins, and
// a q-q table against a seeded synthetic NB sample.
inline void cmd_report(const ReportConfig& cfg) {
  using detail::fmt;
  namespace fs = std::filesystem;
  const auto fp = detail::stage("load_parameters",
                                [&] { return load_parameters(cfg.params_path); });
  const auto loaded =
      detail::stage("load_prices", [&] { return load_prices(cfg.prices_path); });
  const auto returns = detail::stage("log_returns", [&] {
    return log_returns(loaded.prices, cfg.block_length);
  });
  const auto blocks =
      detail::stage("block_annual", [&] { return block_annual(returns); });

  fs::create_directories(cfg.out_dir);
  auto path_in_dir = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  std::vector<TruncationSplit> splits;
  std::vector<double> sds, skews, kurts, pvals, counts, tail_probs;
  std::vector<double> truncated_pool, outlier_pool;
  detail::stage("diagnostics", [&] {
    for (std::size_t b = 0; b < blocks.blocks.size(); ++b)
      splits.push_back(iqr_split(blocks.blocks[b], cfg.iqr_mult, b));
    for (const auto& split : splits) {
      const auto report = ks_normal_test(split.truncated);
      sds.push_back(report.sample_sd);
      skews.push_back(report.skewness);
      kurts.push_back(report.kurtosis);
      pvals.push_back(report.p_value);
      counts.push_back(static_cast<double>(split.outliers.size()));
      tail_probs.push_back(fence_tail_probability(split));
      truncated_pool.insert(truncated_pool.end(), split.truncated.begin(),
                            split.truncated.end());
      outlier_pool.insert(outlier_pool.end(), split.outliers.begin(),
                          split.outliers.end());
    }
    return 0;
  });

  // q-q point pairs for the last six blocks (or fewer)
  const std::size_t first_qq = splits.size() > 6 ? splits.size() - 6 : 0;
  for (std::size_t b = first_qq; b < splits.size(); ++b) {
    auto sorted = splits[b].truncated;
    std::sort(sorted.begin(), sorted.end());
    const double mu = mean(sorted);
    const double sd = sample_sd(sorted);
    auto out = detail::open_out(path_in_dir("qq_normal_block" +
                                            std::to_string(b) + ".csv"));
    out << "theoretical,sample\n";
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double theo =
          mu + sd * sf::normal_quantile((static_cast<double>(i) + 0.5) / n);
      out << fmt(theo) << ',' << fmt(sorted[i]) << '\n';
    }
  }

  detail::write_histogram(path_in_dir("hist_sd.csv"), sds, 12);
  detail::write_histogram(path_in_dir("hist_skewness.csv"), skews, 12);
  detail::write_histogram(path_in_dir("hist_kurtosis.csv"), kurts, 12);
  detail::write_histogram(path_in_dir("hist_p_values.csv"), pvals, 12);
  detail::write_histogram(path_in_dir("hist_outlier_counts.csv"), counts, 12);
  detail::write_histogram(path_in_dir("hist_tail_probabilities.csv"),
                          tail_probs, 12);

  // density overlay over the central 99.9% of the truncated pool, after
  // the same zero-drop-and-center treatment the estimator applies
  {
    std::vector<double> centered;
    centered.reserve(truncated_pool.size());
    for (double x : truncated_pool)
      if (x != 0.0) centered.push_back(x);
    const double mu = mean(centered);
    for (auto& x : centered) x -= mu;
    std::sort(centered.begin(), centered.end());
    const double z_lo = quantile_sorted(centered, 0.0005);
    const double z_hi = quantile_sorted(centered, 0.9995);
    const double iqr = quantile_sorted(centered, 0.75) -
                       quantile_sorted(centered, 0.25);
    const double h =
        2.0 * iqr / std::cbrt(static_cast<double>(centered.size()));
    const QGaussianParams params(fp.q, fp.beta);
    auto out = detail::open_out(path_in_dir("density_overlay.csv"));
    out << "z,empirical,model\n";
    for (double z = z_lo; z <= z_hi; z += h) {
      const auto lo_it = std::lower_bound(centered.begin(), centered.end(),
                                          z - 0.5 * h);
      const auto hi_it = std::lower_bound(centered.begin(), centered.end(),
                                          z + 0.5 * h);
      const double empirical = static_cast<double>(hi_it - lo_it) /
                               (static_cast<double>(centered.size()) * h);
      out << fmt(z) << ',' << fmt(empirical) << ',' << fmt(density(z, params))
          << '\n';
    }
  }

  // mixing density over its central mass, the model curve behind the
  // annual sd histogram
  {
    const QGaussianParams params(fp.q, fp.beta);
    const auto [v_lo, v_hi] = mixing_v_bounds(params, 1e-4);
    auto out = detail::open_out(path_in_dir("mixing_density.csv"));
    out << "v,density\n";
    const int steps = 200;
    for (int i = 0; i <= steps; ++i) {
      const double v = v_lo + (v_hi - v_lo) * i / steps;
      out << fmt(v) << ',' << fmt(mixing_density(v, params)) << '\n';
    }
  }

  // NB overlay grouped in [0,5), [5,10), ... plus expected block counts
  {
    const auto nb = JumpParams::from_nb(fp.gamma, fp.p, Horizon::annual);
    const double max_count =
        counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end());
    const int n_bins = static_cast<int>(max_count / 5.0) + 2;
    auto out = detail::open_out(path_in_dir("nb_overlay.csv"));
    out << "bin_low,bin_high,observed,expected\n";
    for (int b = 0; b < n_bins; ++b) {
      const int lo = 5 * b;
      const int hi = 5 * (b + 1);
      int observed = 0;
      for (double c : counts)
        if (c >= lo && c < hi) ++observed;
      double mass = 0.0;
      for (int k = lo; k < hi; ++k) mass += nb_pmf(static_cast<unsigned>(k), nb);
      out << lo << ',' << hi << ',' << observed << ','
          << fmt(mass * static_cast<double>(counts.size())) << '\n';
    }
  }

  // q-q of observed annual counts against a seeded synthetic NB sample
  {
    std::mt19937_64 rng(cfg.seed);
    std::gamma_distribution<double> lambda_draw(fp.gamma,
                                                (1.0 - fp.p) / fp.p);
    std::vector<double> simulated(counts.size());
    for (auto& s : simulated) {
      std::poisson_distribution<int> pois(lambda_draw(rng));
      s = pois(rng);
    }
    std::sort(simulated.begin(), simulated.end());
    auto observed = counts;
    std::sort(observed.begin(), observed.end());
    auto out = detail::open_out(path_in_dir("nb_qq.csv"));
    out << "simulated,observed\n";
    for (std::size_t i = 0; i < observed.size(); ++i)
      out << fmt(simulated[i]) << ',' << fmt(observed[i]) << '\n';
  }

  // bundle smile tables when provided
  for (const auto& src : cfg.smile_csvs) {
    if (!fs::exists(src))
      throw ValidationError("report: missing price output " + src);
    fs::copy_file(src, fs::path(cfg.out_dir) / fs::path(src).filename(),
                  fs::copy_options::overwrite_existing);
  }

  // headline summary
  {
    std::size_t total = 0, outliers = 0;
    for (const auto& split : splits) {
      total += split.truncated.size() + split.outliers.size();
      outliers += split.outliers.size();
    }
    int pvals_below = 0;
    for (double p : pvals)
      if (p < 0.1) ++pvals_below;
    int tails_below = 0;
    for (double p : tail_probs)
      if (p < 0.01) ++tails_below;
    auto out = detail::open_out(path_in_dir("summary.txt"));
    out << "blocks: " << splits.size() << "\n"
        << "returns used: " << total << "\n"
        << "dropped tail: " << blocks.dropped_tail << "\n"
        << "outliers: " << outliers << " ("
        << fmt(100.0 * static_cast<double>(outliers) / total) << "%)\n"
        << "mean skewness: " << fmt(mean(skews)) << "\n"
        << "mean kurtosis: " << fmt(mean(kurts)) << "\n"
        << "p-values below 0.1: " << pvals_below << " of " << pvals.size()
        << "\n"
        << "tail probabilities below 0.01: " << tails_below << " of "
        << tail_probs.size() << "\n"
        << "poisson rate (comparison only): "
        << fmt(fit_poisson_rate(counts)) << "\n"
        << "q: " << fmt(fp.q) << " (" << fp.method << ")\n"
        << "beta: " << fmt(fp.beta) << "\n"
        << "variance: " << fmt(fp.variance) << "\n"
        << "gamma: " << fmt(fp.gamma) << "  p: " << fmt(fp.p) << "\n"
        << "s_annual: " << fmt(fp.s_annual) << "  s_daily: " << fmt(fp.s_daily)
        << "  tau: " << fmt(fp.tau) << "\n"
        << "m: " << fmt(fp.m) << "  nu: " << fmt(fp.nu) << "\n";
  }
}

}  // namespace qjd::cli
