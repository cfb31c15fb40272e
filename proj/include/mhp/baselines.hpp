#pragma once

// ETAS excitation a e^{b(k - k0)} Lomax(x | p, c) and its semiparametric
// variant whose lag density is a scale-uniform mixture over DP atoms.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mhp/errors.hpp"
#include "mhp/stats.hpp"

namespace mhp {

struct EtasState {
  double mu = 0.0;
  double a = 0.0;
  double b = 0.0;
  double psi = 1.0;
  double p = 1.0;
  double c = 1.0;
};

// psi > b and a psi / (psi - b) < 1.
inline bool etas_stable(double a, double b, double psi) {
  return a > 0.0 && b > 0.0 && psi > b && a * psi / (psi - b) < 1.0;
}

inline double etas_alpha(double kappa, double a, double b, double kappa0) {
  return a * std::exp(b * (kappa - kappa0));
}

inline double etas_excitation(double x, double kappa, const EtasState& s, double kappa0) {
  return etas_alpha(kappa, s.a, s.b, kappa0) * stats::lomax_pdf(x, s.p, s.c);
}

/// Branching ratio with exponential(psi) marks on (k0, k_max). Without
/// truncation this is a psi / (psi - b); truncation to a finite k_max scales
/// it by (1 - e^{-(psi - b) w}) / (1 - e^{-psi w}), w = k_max - k0.
inline double etas_rho(double a, double b, double psi, double kappa0, double kappa_max, bool truncated) {
  ensure(psi > b, "branching ratio requires psi > b");
  const double base = a * psi / (psi - b);
  if (!truncated || std::isinf(kappa_max)) return base;
  const double w = kappa_max - kappa0;
  return base * std::expm1(-(psi - b) * w) / std::expm1(-psi * w);
}

inline double etas_rho(const EtasState& s, double kappa0, double kappa_max, bool truncated) {
  return etas_rho(s.a, s.b, s.psi, kappa0, kappa_max, truncated);
}

struct SemiparState {
  double mu = 0.0;
  double a = 0.0;
  double b = 0.0;
  double psi = 1.0;
  std::vector<double> atoms;    // theta*_k
  std::vector<double> weights;  // pi_k
  std::vector<double> sticks;   // v_k, last one fixed at 1
  double alpha0 = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;

  int truncation() const { return static_cast<int>(atoms.size()); }
};

/// g(x) = sum_k pi_k / theta*_k 1[x < theta*_k]; a non-increasing step function.
inline double semipar_offspring_density(double x, const std::vector<double>& atoms,
                                        const std::vector<double>& weights) {
  if (x < 0.0) return 0.0;
  double g = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k)
    if (x < atoms[k]) g += weights[k] / atoms[k];
  return g;
}

inline double semipar_offspring_density(double x, const SemiparState& s) {
  return semipar_offspring_density(x, s.atoms, s.weights);
}

inline double semipar_offspring_cdf(double x, const std::vector<double>& atoms,
                                    const std::vector<double>& weights) {
  if (x <= 0.0) return 0.0;
  double G = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) G += weights[k] * std::min(x, atoms[k]) / atoms[k];
  return std::min(G, 1.0);
}

inline double semipar_offspring_cdf(double x, const SemiparState& s) {
  return semipar_offspring_cdf(x, s.atoms, s.weights);
}

}  // namespace mhp
