// Command-line front end: fit, price, smile, and report subcommands over
// the calibration-and-pricing library. Exit codes: 0 success, 1 validation
// error, 2 numerical-convergence error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qjd/cli.hpp"

namespace {

void add_quadrature_flags(CLI::App* cmd, qjd::QuadratureConfig* q) {
  cmd->add_option("--tol-abs", q->abs_tol, "absolute price tolerance");
  cmd->add_option("--tol-rel", q->rel_tol, "relative price tolerance");
  cmd->add_option("--series-tol", q->series_tol, "Poisson series tail cutoff");
  cmd->add_option("--max-k", q->max_k, "nominal jump-count series cap");
}

void add_maturity_flags(CLI::App* cmd, qjd::cli::PriceConfig* cfg) {
  cmd->add_option("--maturities-days", cfg->maturities,
                  "maturities in trading days (calendar with --calendar-days)")
      ->delimiter(',')
      ->required();
  cmd->add_flag("--calendar-days", cfg->calendar_days,
                "treat maturities as calendar days; weekends are discarded");
  cmd->add_option("--start-date", cfg->start_date,
                  "ISO date the calendar maturities count from");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-Gaussian jump-diffusion calibration and option pricing"};
  app.require_subcommand(1);

  qjd::cli::FitConfig fit_cfg;
  auto* fit = app.add_subcommand("fit", "fit model parameters from a price CSV");
  fit->add_option("--prices", fit_cfg.prices_path, "date,close CSV")->required();
  fit->add_option("--out-params", fit_cfg.out_params, "parameter JSON to write");
  fit->add_option("--out-diagnostics", fit_cfg.out_diagnostics,
                  "per-block diagnostics CSV to write");
  fit->add_option("--block-length", fit_cfg.block_length, "returns per block");
  fit->add_option("--iqr-mult", fit_cfg.iqr_mult, "fence multiplier");
  fit->add_option("--q-method", fit_cfg.q_method, "cdf or ferri")
      ->check(CLI::IsMember({"cdf", "ferri"}));

  qjd::cli::PriceConfig price_cfg;
  auto* price = app.add_subcommand("price", "price a strike/maturity grid");
  price->add_option("--params", price_cfg.params_path, "parameter JSON")->required();
  price->add_option("--spot", price_cfg.spot, "spot price")->required();
  price->add_option("--strikes", price_cfg.strikes, "strike list")
      ->delimiter(',')
      ->required();
  price->add_option("--rate-annual", price_cfg.rate_annual, "annual rate");
  price->add_option("--day-count", price_cfg.day_count,
                    "divisor turning the annual rate into a daily one");
  price->add_option("--out-prefix", price_cfg.out_prefix, "output path prefix");
  price->add_flag("--json", price_cfg.write_json,
                  "also write JSON rows with per-price error bounds");
  add_maturity_flags(price, &price_cfg);
  add_quadrature_flags(price, &price_cfg.quadrature);

  qjd::cli::PriceConfig smile_cfg;
  smile_cfg.out_prefix = "smile";
  auto* smile = app.add_subcommand("smile", "single-maturity smile table");
  smile->add_option("--params", smile_cfg.params_path, "parameter JSON")->required();
  smile->add_option("--spot", smile_cfg.spot, "spot price")->required();
  smile->add_option("--strikes", smile_cfg.strikes, "strike list")
      ->delimiter(',')
      ->required();
  smile->add_option("--rate-annual", smile_cfg.rate_annual, "annual rate");
  smile->add_option("--day-count", smile_cfg.day_count,
                    "divisor turning the annual rate into a daily one");
  smile->add_option("--out-prefix", smile_cfg.out_prefix, "output path prefix");
  add_maturity_flags(smile, &smile_cfg);
  add_quadrature_flags(smile, &smile_cfg.quadrature);

  qjd::cli::ReportConfig report_cfg;
  auto* report = app.add_subcommand("report", "emit plot-data tables");
  report->add_option("--prices", report_cfg.prices_path, "date,close CSV")
      ->required();
  report->add_option("--params", report_cfg.params_path, "parameter JSON")
      ->required();
  report->add_option("--smile-csv", report_cfg.smile_csvs,
                     "price outputs to bundle into the report");
  report->add_option("--out-dir", report_cfg.out_dir, "report directory");
  report->add_option("--block-length", report_cfg.block_length, "returns per block");
  report->add_option("--iqr-mult", report_cfg.iqr_mult, "fence multiplier");
  report->add_option("--seed", report_cfg.seed, "seed for the synthetic q-q sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) {
      const auto result = qjd::cli::cmd_fit(fit_cfg);
      for (const auto& warning : result.warnings)
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
      std::printf("wrote %s and %s\n", fit_cfg.out_params.c_str(),
                  fit_cfg.out_diagnostics.c_str());
    } else if (*price) {
      for (const auto& file : qjd::cli::cmd_price(price_cfg))
        std::printf("wrote %s\n", file.c_str());
    } else if (*smile) {
      std::printf("wrote %s\n", qjd::cli::cmd_smile(smile_cfg).c_str());
    } else if (*report) {
      qjd::cli::cmd_report(report_cfg);
      std::printf("wrote report to %s\n", report_cfg.out_dir.c_str());
    }
  } catch (const qjd::NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const qjd::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
