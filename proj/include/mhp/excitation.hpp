#pragma once

// Nonparametric excitation h(x, k) = sum_lm nu_lm ga(x | l, 1/theta) b_m(k; d)
// with Erlang lag bases and polynomial mark bases, plus derived functionals.

#include <cmath>
#include <span>
#include <vector>

#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/stats.hpp"

namespace mhp {

struct BasisGrid {
  int L = 1;
  int M = 2;
  double theta = 1.0;
  double d = 1.0;

  void validate() const {
    ensure(L >= 1, "L must be at least 1");
    ensure(M >= 2, "M must be at least 2");
    ensure(theta > 0.0 && std::isfinite(theta), "theta must be positive and finite");
    ensure(d > 0.0 && std::isfinite(d), "d must be positive and finite");
  }
};

struct GammaProcessHyper {
  double c0 = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
};

struct MarkDensityParams {
  double a_beta = 1.0;
  double b_beta = 1.0;
};

/// L x M weights, 1-based accessors, row-major storage (l major).
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int L, int M, double fill = 0.0)
      : L_(L), M_(M), data_(static_cast<std::size_t>(L) * M, fill) {}

  int L() const { return L_; }
  int M() const { return M_; }
  double& operator()(int l, int m) { return data_[index(l, m)]; }
  double operator()(int l, int m) const { return data_[index(l, m)]; }
  std::span<double> raw() { return data_; }
  std::span<const double> raw() const { return data_; }

  // V_m = sum_l nu_lm.
  std::vector<double> column_sums() const {
    std::vector<double> v(M_, 0.0);
    for (int l = 0; l < L_; ++l)
      for (int m = 0; m < M_; ++m) v[m] += data_[l * M_ + m];
    return v;
  }
  double total() const {
    double s = 0.0;
    for (double x : data_) s += x;
    return s;
  }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t index(int l, int m) const { return static_cast<std::size_t>(l - 1) * M_ + (m - 1); }
  int L_ = 0;
  int M_ = 0;
  std::vector<double> data_;
};

/// Exponent (m-1)^d of the m-th mark basis, with the first one fixed at 0.
inline double mark_exponent(int m, double d) {
  return m == 1 ? 0.0 : std::exp(d * std::log(static_cast<double>(m - 1)));
}

/// b_m as a function of the rescaled mark u in (0, 1). 0^0 is taken as 1.
inline double basis_mark_u(double u, int m, int M, double d) {
  if (m == 1) return static_cast<double>(M);
  return M * std::pow(u, mark_exponent(m, d));
}

inline double basis_mark(double kappa, int m, const BasisGrid& grid, const MarkBounds& bounds) {
  ensure(bounds.contains(kappa), "mark outside the open mark interval");
  ensure(m >= 1 && m <= grid.M, "mark basis index out of range");
  return basis_mark_u(bounds.u(kappa), m, grid.M, grid.d);
}

inline double basis_mark(double kappa, int m, const BasisGrid& grid, double kappa0, double kappa_max) {
  return basis_mark(kappa, m, grid, MarkBounds{kappa0, kappa_max});
}

// All M mark bases at u.
inline void basis_row(double u, const BasisGrid& grid, std::span<double> out) {
  const double log_u = std::log(u);
  out[0] = grid.M;
  for (int m = 2; m <= grid.M; ++m) out[m - 1] = grid.M * std::exp(mark_exponent(m, grid.d) * log_u);
}

/// Gamma-process centering mass of cell (l, m):
/// [(l theta)^b1 - ((l-1) theta)^b1] * b2 / M.
inline double h0_cell(int l, int m, const BasisGrid& grid, const GammaProcessHyper& hyper) {
  ensure(l >= 1 && l <= grid.L && m >= 1 && m <= grid.M, "cell index out of range");
  const double upper = std::pow(l * grid.theta, hyper.b1);
  const double lower = l == 1 ? 0.0 : std::pow((l - 1) * grid.theta, hyper.b1);
  return (upper - lower) * hyper.b2 / grid.M;
}

inline WeightMatrix h0_matrix(const BasisGrid& grid, const GammaProcessHyper& hyper) {
  WeightMatrix out(grid.L, grid.M);
  for (int l = 1; l <= grid.L; ++l) {
    const double cell = h0_cell(l, 1, grid, hyper);
    for (int m = 1; m <= grid.M; ++m) out(l, m) = cell;
  }
  return out;
}

/// Erlang(l, 1/theta) densities at x for l = 1..out.size().
inline void erlang_pdf_row(double x, double theta, std::span<double> out) {
  stats::poisson_terms(x / theta, out);
  for (double& v : out) v /= theta;
}

/// Per-lag-component mark weights c_l(k) = sum_m nu_lm b_m(k; d).
inline std::vector<double> lag_weights(double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                                       const MarkBounds& bounds) {
  ensure(bounds.contains(kappa), "mark outside the open mark interval");
  std::vector<double> b(grid.M);
  basis_row(bounds.u(kappa), grid, b);
  std::vector<double> c(grid.L, 0.0);
  for (int l = 1; l <= grid.L; ++l)
    for (int m = 1; m <= grid.M; ++m) c[l - 1] += nu(l, m) * b[m - 1];
  return c;
}

inline double excitation_h(double x, double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                           const MarkBounds& bounds) {
  const auto c = lag_weights(kappa, nu, grid, bounds);
  std::vector<double> pdf(grid.L);
  erlang_pdf_row(x, grid.theta, pdf);
  double h = 0.0;
  for (int l = 0; l < grid.L; ++l) h += c[l] * pdf[l];
  return h;
}

/// Total offspring intensity alpha(k) = sum_m V_m b_m(k; d).
inline double alpha_of_kappa(double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                             const MarkBounds& bounds) {
  const auto c = lag_weights(kappa, nu, grid, bounds);
  double a = 0.0;
  for (double v : c) a += v;
  return a;
}

/// Branching ratio under the rescaled beta mark density.
inline double rho(const WeightMatrix& nu, const BasisGrid& grid, const MarkDensityParams& mark) {
  const auto V = nu.column_sums();
  const double base = stats::log_beta_fn(mark.a_beta, mark.b_beta);
  double s = 0.0;
  for (int m = 1; m <= grid.M; ++m)
    s += V[m - 1] * std::exp(stats::log_beta_fn(mark.a_beta + mark_exponent(m, grid.d), mark.b_beta) - base);
  return grid.M * s;
}

/// Mixing weights W_l(k) of the offspring density; they sum to one.
inline std::vector<double> offspring_weights(double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                                             const MarkBounds& bounds) {
  auto c = lag_weights(kappa, nu, grid, bounds);
  double a = 0.0;
  for (double v : c) a += v;
  ensure<NumericalError>(a > 0.0, "zero total offspring intensity at this mark");
  for (double& v : c) v /= a;
  return c;
}

inline double offspring_density(double x, double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                                const MarkBounds& bounds) {
  const auto W = offspring_weights(kappa, nu, grid, bounds);
  std::vector<double> pdf(grid.L);
  erlang_pdf_row(x, grid.theta, pdf);
  double g = 0.0;
  for (int l = 0; l < grid.L; ++l) g += W[l] * pdf[l];
  return g;
}

/// Probability that a direct offspring arrives more than x after its parent.
inline double tail_probability(double x, double kappa, const WeightMatrix& nu, const BasisGrid& grid,
                               const MarkBounds& bounds) {
  const auto W = offspring_weights(kappa, nu, grid, bounds);
  double s = 0.0;
  for (int l = 1; l <= grid.L; ++l) s += W[l - 1] * stats::erlang_sf(x, l, 1.0 / grid.theta);
  return std::clamp(s, 0.0, 1.0);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Prior mean and variance of alpha(k) under the gamma-process prior on nu.
inline Moments prior_alpha_moments(double kappa, const BasisGrid& grid, const GammaProcessHyper& hyper,
                                   const MarkBounds& bounds) {
  ensure(bounds.contains(kappa), "mark outside the open mark interval");
  const double u = bounds.u(kappa);
  const double scale = hyper.b2 * std::pow(grid.L * grid.theta, hyper.b1);
  double s1 = 0.0, s2 = 0.0;
  for (int m = 1; m <= grid.M; ++m) {
    const double e = mark_exponent(m, grid.d);
    s1 += m == 1 ? 1.0 : std::pow(u, e);
    s2 += m == 1 ? 1.0 : std::pow(u, 2.0 * e);
  }
  return {scale * s1, scale * grid.M / hyper.c0 * s2};
}

/// K_lm = sum_j b_m(k_j; d) P(l, (T - t_j) / theta), the expected number of
/// offspring in cell (l, m) per unit weight inside the window.
inline WeightMatrix k_matrix(const BasisGrid& grid, const MarkedPointPattern& pattern) {
  WeightMatrix K(grid.L, grid.M);
  std::vector<double> b(grid.M);
  std::vector<double> terms(grid.L);
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    basis_row(pattern.bounds.u(pattern.marks[j]), grid, b);
    stats::poisson_terms((pattern.window_end - pattern.times[j]) / grid.theta, terms);
    double upper = 0.0;
    for (int l = 1; l <= grid.L; ++l) {
      upper += terms[l - 1];
      const double cdf = std::max(0.0, 1.0 - upper);
      for (int m = 1; m <= grid.M; ++m) K(l, m) += b[m - 1] * cdf;
    }
  }
  return K;
}

inline double k_lm(int l, int m, const BasisGrid& grid, const MarkedPointPattern& pattern) {
  ensure(l >= 1 && l <= grid.L && m >= 1 && m <= grid.M, "cell index out of range");
  double s = 0.0;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    s += basis_mark_u(pattern.bounds.u(pattern.marks[j]), m, grid.M, grid.d) *
         stats::erlang_cdf(pattern.window_end - pattern.times[j], l, 1.0 / grid.theta);
  }
  return s;
}

/// 200 equispaced interior marks (cell midpoints) by default.
inline std::vector<double> kappa_grid(const MarkBounds& bounds, int points = 200) {
  std::vector<double> out(points);
  for (int k = 0; k < points; ++k) out[k] = bounds.kappa0 + bounds.width() * (k + 0.5) / points;
  return out;
}

/// Lags over (0, L theta + 2 theta sqrt(L)], the effective support of the basis.
inline std::vector<double> lag_grid(const BasisGrid& grid, int points = 500) {
  const double upper = grid.L * grid.theta + 2.0 * grid.theta * std::sqrt(static_cast<double>(grid.L));
  std::vector<double> out(points);
  for (int k = 0; k < points; ++k) out[k] = upper * (k + 1) / points;
  return out;
}

}  // namespace mhp
