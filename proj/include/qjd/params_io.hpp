#pragma once

// The parameter document shared by `fit` and `price`/`smile`. A full
// document records everything the fit produced; a hand-written one needs
// only the pricing fields (q, beta or variance, s_daily, tau, m, nu).

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qjd/errors.hpp"
#include "qjd/jump_model.hpp"
#include "qjd/pricing.hpp"
#include "qjd/qgaussian.hpp"

namespace qjd {

struct FittedParameters {
  // diffusion half
  double q = 1.0;
  double beta = 0.5;
  double variance = 1.0;
  std::string method = "manual";  // cdf, ferri, or manual
  std::uint64_t n_used = 0;
  std::uint64_t n_zeros_dropped = 0;
  // jump half
  double gamma = 0.0;  // annual NB successes
  double p = 0.0;
  double s_annual = 0.0;
  double s_daily = 0.0;
  double tau = 0.0;
  double m = 1.0;
  double nu = 0.0;

  GJDModel to_model() const {
    return GJDModel(QGaussianParams(q, beta),
                    JumpParams::from_gamma_mixing(s_daily, tau, Horizon::daily,
                                                  m, nu));
  }
};

inline nlohmann::json to_json(const FittedParameters& fp) {
  return nlohmann::json{{"q", fp.q},
                        {"beta", fp.beta},
                        {"variance", fp.variance},
                        {"method", fp.method},
                        {"n_used", fp.n_used},
                        {"n_zeros_dropped", fp.n_zeros_dropped},
                        {"gamma", fp.gamma},
                        {"p", fp.p},
                        {"s_annual", fp.s_annual},
                        {"s_daily", fp.s_daily},
                        {"tau", fp.tau},
                        {"m", fp.m},
                        {"nu", fp.nu}};
}

inline FittedParameters parameters_from_json(const nlohmann::json& j) {
  FittedParameters fp;
  try {
    if (!j.contains("q")) throw ValidationError("parameter document: missing q");
    fp.q = j.at("q").get<double>();
    if (j.contains("beta")) {
      fp.beta = j.at("beta").get<double>();
      fp.variance = QGaussianParams(fp.q, fp.beta).variance();
    } else if (j.contains("variance")) {
      fp.variance = j.at("variance").get<double>();
      fp.beta = beta_from_variance(fp.variance, fp.q);
    } else {
      throw ValidationError("parameter document: need beta or variance");
    }
    if (j.contains("s_daily")) {
      fp.s_daily = j.at("s_daily").get<double>();
    } else if (j.contains("s_annual")) {
      fp.s_daily = j.at("s_annual").get<double>() / trading_days_per_year;
    } else {
      throw ValidationError("parameter document: need s_daily or s_annual");
    }
    fp.s_annual = j.value("s_annual", fp.s_daily * trading_days_per_year);
    if (!j.contains("tau")) throw ValidationError("parameter document: missing tau");
    fp.tau = j.at("tau").get<double>();
    fp.m = j.value("m", 1.0);
    fp.nu = j.value("nu", 0.0);
    fp.gamma = j.value("gamma", fp.s_annual);
    fp.p = j.value("p", fp.tau / (1.0 + fp.tau));
    fp.method = j.value("method", std::string("manual"));
    fp.n_used = j.value("n_used", std::uint64_t{0});
    fp.n_zeros_dropped = j.value("n_zeros_dropped", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("parameter document: ") + e.what());
  }
  return fp;
}

inline void save_parameters(const FittedParameters& fp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write parameter file: " + path);
  out << to_json(fp).dump(2) << "\n";
}

inline FittedParameters load_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open parameter file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("parameter file " + path + ": " + e.what());
  }
  return parameters_from_json(j);
}

}  // namespace qjd
