#pragma once

// Scalar hyperpriors and the named prior presets.

#include <cctype>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/stats.hpp"

namespace mhp {

/// Exponential(rate), Gamma(shape, rate) or Lomax(shape, scale) prior on a positive scalar.
struct ScalarPrior {
  enum class Kind { exponential, gamma, lomax };
  Kind kind = Kind::exponential;
  double shape = 1.0;
  double param = 1.0;  // rate for exponential/gamma, scale for Lomax

  static ScalarPrior exponential(double rate) { return {Kind::exponential, 1.0, rate}; }
  static ScalarPrior gamma(double shape, double rate) { return {Kind::gamma, shape, rate}; }
  static ScalarPrior lomax(double shape, double scale) { return {Kind::lomax, shape, scale}; }

  bool is_gamma_family() const { return kind != Kind::lomax; }
  double gamma_shape() const { return kind == Kind::exponential ? 1.0 : shape; }
  double rate() const { return param; }

  double log_pdf(double x) const {
    if (!(x > 0.0)) return stats::kNegInf;
    switch (kind) {
      case Kind::exponential: return std::log(param) - param * x;
      case Kind::gamma: return stats::log_gamma_pdf(x, shape, param);
      case Kind::lomax: return stats::log_lomax_pdf(x, shape, param);
    }
    return stats::kNegInf;
  }

  double sample(stats::SeededRng& rng) const {
    switch (kind) {
      case Kind::exponential: return stats::sample_exponential(param, rng);
      case Kind::gamma: return stats::sample_gamma(shape, param, rng);
      case Kind::lomax: return stats::lomax_isf(rng.uniform(), shape, param);
    }
    return 0.0;
  }

  // Prior mean, or the median for Lomax priors whose mean may not exist.
  double initial() const {
    switch (kind) {
      case Kind::exponential: return 1.0 / param;
      case Kind::gamma: return shape / param;
      case Kind::lomax: return param * (std::pow(2.0, 1.0 / shape) - 1.0);
    }
    return 1.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::exponential: return "Exp(" + detail::format_real(param) + ")";
      case Kind::gamma: return "Ga(" + detail::format_real(shape) + "," + detail::format_real(param) + ")";
      case Kind::lomax: return "Lomax(" + detail::format_real(shape) + "," + detail::format_real(param) + ")";
    }
    return "?";
  }
};

/// Parses "exp(r)", "ga(s,r)" / "gamma(s,r)" or "lomax(s,c)".
inline ScalarPrior parse_prior(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (ch != ' ') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const auto open = s.find('(');
  ensure(open != std::string::npos && s.back() == ')', "malformed prior '" + std::string(text) + "'");
  const std::string name = s.substr(0, open);
  const std::string args = s.substr(open + 1, s.size() - open - 2);
  std::vector<double> values;
  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_real(item);
    ensure(v.has_value() && *v > 0.0, "prior parameters must be positive in '" + std::string(text) + "'");
    values.push_back(*v);
  }
  if (name == "exp" && values.size() == 1) return ScalarPrior::exponential(values[0]);
  if ((name == "ga" || name == "gamma") && values.size() == 2) return ScalarPrior::gamma(values[0], values[1]);
  if (name == "lomax" && values.size() == 2) return ScalarPrior::lomax(values[0], values[1]);
  throw ValidationError("unknown prior '" + std::string(text) + "'");
}

struct NonparPriors {
  int L = 20;
  int M = 15;
  ScalarPrior theta = ScalarPrior::lomax(2, 0.1);
  ScalarPrior d = ScalarPrior::exponential(1);
  ScalarPrior c0 = ScalarPrior::lomax(2, 2000);
  ScalarPrior b1 = ScalarPrior::exponential(10);
  ScalarPrior b2 = ScalarPrior::exponential(10);
  ScalarPrior a_beta = ScalarPrior::exponential(1);
  ScalarPrior b_beta = ScalarPrior::exponential(0.321);
  ScalarPrior mu = ScalarPrior::exponential(22.3);
  // Erlang-mixture background.
  int J = 100;
  ScalarPrior phi = ScalarPrior::lomax(2, 600);
  ScalarPrior e0 = ScalarPrior::exponential(0.1);
  ScalarPrior b_g0 = ScalarPrior::exponential(0.007);
};

// a, b and psi are truncated to the stability region.
struct EtasPriors {
  ScalarPrior mu = ScalarPrior::exponential(22.3);
  ScalarPrior a = ScalarPrior::exponential(2);
  ScalarPrior b = ScalarPrior::exponential(0.2);
  ScalarPrior psi = ScalarPrior::exponential(0.1);
  ScalarPrior p = ScalarPrior::exponential(0.005);
  ScalarPrior c = ScalarPrior::exponential(0.1);
};

struct SemiparPriors {
  ScalarPrior alpha0 = ScalarPrior::gamma(5, 0.25);
  ScalarPrior a0 = ScalarPrior::exponential(1);
  ScalarPrior b0 = ScalarPrior::exponential(1.5);
  int N = 50;
};

struct PriorSet {
  std::string name = "s42";
  MarkBounds nonpar_bounds{4.0, 10.0};
  MarkBounds baseline_bounds{4.0, stats::kInf};
  NonparPriors nonpar;
  EtasPriors etas;
  SemiparPriors semipar;
};

/// Named hyperprior sets: "s42" (alias "mark-lomax"), "s43" ("lomax-mixture"),
/// "lomax" and "japan".
inline PriorSet prior_preset(std::string_view name) {
  PriorSet p;
  auto set_mu = [&](double rate) {
    p.nonpar.mu = ScalarPrior::exponential(rate);
    p.etas.mu = ScalarPrior::exponential(rate);
  };
  if (name == "s42" || name == "mark-lomax") {
    p.name = "s42";
    set_mu(22.3);
  } else if (name == "s43" || name == "lomax-mixture") {
    p.name = "s43";
    p.nonpar.L = 60;
    p.nonpar.theta = ScalarPrior::lomax(2, 0.5);
    p.nonpar.b2 = ScalarPrior::exponential(13);
    p.nonpar.b_beta = ScalarPrior::exponential(0.334);
    set_mu(22);
  } else if (name == "lomax") {
    p.name = "lomax";
    p.nonpar.L = 15;
    p.nonpar.M = 20;
    p.nonpar.b2 = ScalarPrior::exponential(8);
    p.nonpar.b_beta = ScalarPrior::exponential(0.204);
    set_mu(11);
  } else if (name == "japan") {
    p.name = "japan";
    p.nonpar_bounds = {6.0, 8.6};
    p.baseline_bounds = {6.0, stats::kInf};
    p.nonpar.L = 20;
    p.nonpar.M = 160;
    p.nonpar.theta = ScalarPrior::lomax(2, 9);
    p.nonpar.b2 = ScalarPrior::exponential(60);
    p.nonpar.b_beta = ScalarPrior::exponential(0.241);
    set_mu(139);
  } else {
    throw ValidationError("unknown prior preset '" + std::string(name) + "'");
  }
  return p;
}

}  // namespace mhp
