#pragma once

// Immigrant intensity: constant, or a gamma-process weighted Erlang mixture
// mu(t) = sum_j omega_j ga(t | j, 1/phi).

#include <cmath>
#include <variant>
#include <vector>

#include "mhp/errors.hpp"
#include "mhp/excitation.hpp"
#include "mhp/stats.hpp"

namespace mhp {

struct ConstantBackground {
  double mu = 0.0;
};

struct ErlangMixtureBackground {
  int J = 100;
  double phi = 1.0;
  std::vector<double> omega;
  double e0 = 1.0;
  double b_g0 = 1.0;

  void validate() const {
    ensure(J >= 1 && static_cast<int>(omega.size()) == J, "mixture weights must have J entries");
    ensure(phi > 0.0 && e0 > 0.0 && b_g0 > 0.0, "mixture hyperparameters must be positive");
    for (double w : omega) ensure(w >= 0.0, "mixture weights must be non-negative");
  }
  // Upper end of the basis support, J phi + 2 phi sqrt(J).
  double effective_support() const { return J * phi + 2.0 * phi * std::sqrt(static_cast<double>(J)); }
};

using Background = std::variant<ConstantBackground, ErlangMixtureBackground>;

inline double mu_of_t(double t, const ConstantBackground& bg) {
  (void)t;
  return bg.mu;
}

inline double mu_of_t(double t, const ErlangMixtureBackground& bg) {
  std::vector<double> pdf(bg.J);
  erlang_pdf_row(t, bg.phi, pdf);
  double s = 0.0;
  for (int j = 0; j < bg.J; ++j) s += bg.omega[j] * pdf[j];
  return s;
}

inline double mu_of_t(double t, const Background& bg) {
  return std::visit([t](const auto& b) { return mu_of_t(t, b); }, bg);
}

/// S_j(phi) = P(j, T / phi), mass of the j-th basis density inside (0, T).
inline double s_j(int j, double phi, double T) { return stats::erlang_cdf(T, j, 1.0 / phi); }

inline std::vector<double> s_vector(int J, double phi, double T) {
  std::vector<double> terms(J);
  stats::poisson_terms(T / phi, terms);
  std::vector<double> out(J);
  double upper = 0.0;
  for (int j = 0; j < J; ++j) {
    upper += terms[j];
    out[j] = std::max(0.0, 1.0 - upper);
  }
  return out;
}

inline double integrated_background(const ConstantBackground& bg, double T) { return bg.mu * T; }

inline double integrated_background(const ErlangMixtureBackground& bg, double T) {
  const auto S = s_vector(bg.J, bg.phi, T);
  double s = 0.0;
  for (int j = 0; j < bg.J; ++j) s += bg.omega[j] * S[j];
  return s;
}

inline double integrated_background(const Background& bg, double T) {
  return std::visit([T](const auto& b) { return integrated_background(b, T); }, bg);
}

/// Mass of the background on (t0, t1).
inline double integrated_background(const Background& bg, double t0, double t1) {
  return integrated_background(bg, t1) - integrated_background(bg, t0);
}

/// Largest value of the Erlang(j, 1/phi) density.
inline double erlang_peak(int j, double phi) {
  if (j == 1) return 1.0 / phi;
  return stats::erlang_pdf((j - 1) * phi, j, 1.0 / phi);
}

/// Upper bound on mu(t) for thinning: sum of component peaks.
inline double intensity_bound(const Background& bg) {
  if (const auto* c = std::get_if<ConstantBackground>(&bg)) return c->mu;
  const auto& m = std::get<ErlangMixtureBackground>(bg);
  double s = 0.0;
  for (int j = 1; j <= m.J; ++j) s += m.omega[j - 1] * erlang_peak(j, m.phi);
  return s;
}

}  // namespace mhp
