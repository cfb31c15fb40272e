#pragma once

// Independent reference computations used by the test suites.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

// Adaptive Gauss-Kronrod; infinite limits are mapped by Boost.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

// Splits at interior breakpoints so kinks and peaks are resolved.
inline double integrate_pieces(const std::function<double(double)>& f, std::vector<double> points) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) s += integrate(f, points[i], points[i + 1]);
  return s;
}

// Running mean and standard error of the mean.
struct MeanSe {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double se() const { return std::sqrt(variance() / n); }
};

// |estimate - truth| in units of the standard error.
inline double z_score(const MeanSe& m, double truth) {
  const double se = m.se();
  if (se == 0.0) return m.mean == truth ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(m.mean - truth) / se;
}

}  // namespace oracle
