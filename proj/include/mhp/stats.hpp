#pragma once

// Densities, distribution functions and seeded samplers shared by every model.
//
// Conventions: Erlang and gamma laws are parameterized by shape and *rate*, so
// the Erlang lag basis with scale theta is erlang_pdf(x, l, 1.0 / theta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "mhp/errors.hpp"

namespace mhp::stats {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Reproducible 64-bit generator addressed by (seed, stream).
///
/// Streams are derived by hashing, so chains and predictive replicates that use
/// distinct stream ids draw from decorrelated sequences. The engine is
/// std::mt19937_64, whose output sequence is fixed by the standard.
class SeededRng {
 public:
  using result_type = std::uint64_t;

  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(derive(seed, stream)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child generator; used for per-replicate streams.
  SeededRng split(std::uint64_t child) const {
    return SeededRng(seed_, splitmix64(stream_ ^ splitmix64(child + 0x632be59bd9b4e019ULL)));
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  std::string serialize() const {
    std::ostringstream os;
    os << seed_ << ' ' << stream_ << ' ' << engine_;
    return os.str();
  }
  static SeededRng deserialize(const std::string& text) {
    std::istringstream is(text);
    SeededRng rng;
    is >> rng.seed_ >> rng.stream_ >> rng.engine_;
    ensure(!is.fail(), "corrupt generator state");
    return rng;
  }

  friend bool operator==(const SeededRng& a, const SeededRng& b) {
    return a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.engine_ == b.engine_;
  }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream ^ 0xd1b54a32d192ed03ULL));
  }
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Special functions

inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_sum_exp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

/// Poisson probabilities e^{-z} z^k / k! for k = 0..count-1, written to out.
/// These are the building blocks of Erlang densities and distribution functions.
inline void poisson_terms(double z, std::span<double> out) {
  const std::size_t count = out.size();
  if (count == 0) return;
  if (z <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = 1.0;
    return;
  }
  if (z <= 700.0) {
    double t = std::exp(-z);
    out[0] = t;
    for (std::size_t k = 1; k < count; ++k) {
      t *= z / static_cast<double>(k);
      out[k] = t;
    }
    return;
  }
  // e^{-z} underflows: anchor at the largest requested term, which Boost
  // evaluates without cancellation, and recur outward from it.
  const std::size_t anchor = std::min(count - 1, static_cast<std::size_t>(z));
  out[anchor] = boost::math::gamma_p_derivative(static_cast<double>(anchor) + 1.0, z);
  for (std::size_t k = anchor; k > 0; --k) out[k - 1] = out[k] * (static_cast<double>(k) / z);
  for (std::size_t k = anchor + 1; k < count; ++k) out[k] = out[k - 1] * (z / static_cast<double>(k));
}

// ---------------------------------------------------------------------------
// Erlang (integer-shape gamma)

inline double log_erlang_pdf(double x, int shape, double rate) {
  if (x < 0.0) return kNegInf;
  if (x == 0.0) return shape == 1 ? std::log(rate) : kNegInf;
  const double l = static_cast<double>(shape);
  return l * std::log(rate) + (l - 1.0) * std::log(x) - rate * x - std::lgamma(l);
}

inline double erlang_pdf(double x, int shape, double rate) {
  return std::exp(log_erlang_pdf(x, shape, rate));
}

/// Upper tail e^{-z} sum_{k<l} z^k/k! of the Erlang(l, rate) law at x, z = rate*x.
inline double erlang_sf(double x, int shape, double rate) {
  const double z = rate * x;
  if (z <= 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  const int last = shape - 1;
  double sum = 0.0;
  if (z < static_cast<double>(last)) {
    // Terms grow towards k ~ z then shrink; e^{-z} is representable here.
    double t = std::exp(-z);
    sum = t;
    for (int k = 1; k <= last; ++k) {
      t *= z / k;
      sum += t;
    }
  } else {
    // Largest term is k = last; walk downward so nothing underflows early.
    double t = std::exp(last * std::log(z) - z - std::lgamma(last + 1.0));
    sum = t;
    for (int k = last; k >= 1 && t > 0.0; --k) {
      t *= k / z;
      sum += t;
    }
  }
  return std::min(sum, 1.0);
}

/// Regularized lower incomplete gamma P(l, rate*x) for integer l.
inline double erlang_cdf(double x, int shape, double rate) {
  const double z = rate * x;
  if (z <= 0.0) return 0.0;
  const double l = static_cast<double>(shape);
  if (z < l) {
    // Lower region: sum the complementary series directly for relative accuracy.
    double t = std::exp(l * std::log(z) - z - std::lgamma(l + 1.0));
    double sum = t;
    for (int k = shape + 1; t > 1e-17 * sum && k < shape + 10000; ++k) {
      t *= z / k;
      sum += t;
    }
    return std::min(sum, 1.0);
  }
  return 1.0 - erlang_sf(x, shape, rate);
}

// ---------------------------------------------------------------------------
// Lomax (Pareto type II): p c^p / (c + x)^{p+1}

inline double log_lomax_pdf(double x, double p, double c) {
  if (x < 0.0) return kNegInf;
  return std::log(p) + p * std::log(c) - (p + 1.0) * std::log(c + x);
}
inline double lomax_pdf(double x, double p, double c) { return std::exp(log_lomax_pdf(x, p, c)); }
inline double lomax_sf(double x, double p, double c) {
  if (x <= 0.0) return 1.0;
  return std::exp(-p * std::log1p(x / c));
}
inline double lomax_cdf(double x, double p, double c) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-p * std::log1p(x / c));
}
// Inverse of the survival function.
inline double lomax_isf(double s, double p, double c) { return c * std::expm1(-std::log(s) / p); }

// ---------------------------------------------------------------------------
// Exponential marks truncated to (kappa0, kappa_max); kappa_max may be +inf.

inline double trunc_exp_normalizer(double psi, double kappa0, double kappa_max) {
  if (std::isinf(kappa_max)) return 1.0;
  return -std::expm1(-psi * (kappa_max - kappa0));
}

inline double log_trunc_exp_pdf(double kappa, double psi, double kappa0, double kappa_max) {
  ensure(kappa > kappa0 && kappa < kappa_max, "mark outside the truncated exponential support");
  return std::log(psi) - psi * (kappa - kappa0) - std::log(trunc_exp_normalizer(psi, kappa0, kappa_max));
}
inline double trunc_exp_pdf(double kappa, double psi, double kappa0, double kappa_max) {
  return std::exp(log_trunc_exp_pdf(kappa, psi, kappa0, kappa_max));
}
inline double trunc_exp_cdf(double kappa, double psi, double kappa0, double kappa_max) {
  if (kappa <= kappa0) return 0.0;
  if (kappa >= kappa_max) return 1.0;
  return -std::expm1(-psi * (kappa - kappa0)) / trunc_exp_normalizer(psi, kappa0, kappa_max);
}

// ---------------------------------------------------------------------------
// Beta and gamma densities

inline double log_beta_pdf(double u, double a, double b) {
  if (u <= 0.0 || u >= 1.0) return kNegInf;
  return (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_beta_fn(a, b);
}

inline double log_gamma_pdf(double x, double shape, double rate) {
  if (x < 0.0) return kNegInf;
  if (x == 0.0) {
    if (shape < 1.0) return kInf;
    return shape == 1.0 ? std::log(rate) : kNegInf;
  }
  return shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape);
}

// ---------------------------------------------------------------------------
// Samplers

inline double sample_uniform(SeededRng& rng) { return rng.uniform(); }

inline double sample_normal(SeededRng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double sample_exponential(double rate, SeededRng& rng) {
  ensure(rate > 0.0, "exponential rate must be positive");
  return -std::log(rng.uniform()) / rate;
}

/// Gamma(shape, rate) with mean shape/rate. Shapes below one are drawn as
/// Ga(shape + 1) * U^{1/shape} in log space; the result is floored at the
/// smallest normal double so downstream log densities stay finite.
inline double sample_gamma(double shape, double rate, SeededRng& rng) {
  ensure(shape > 0.0 && rate > 0.0 && std::isfinite(shape) && std::isfinite(rate),
         "gamma shape and rate must be positive and finite");
  double draw;
  if (shape >= 1.0) {
    boost::random::gamma_distribution<double> dist(shape, 1.0);
    draw = dist(rng) / rate;
  } else {
    boost::random::gamma_distribution<double> dist(shape + 1.0, 1.0);
    const double log_draw = std::log(dist(rng)) + std::log(rng.uniform()) / shape - std::log(rate);
    draw = std::exp(log_draw);
  }
  return std::max(draw, std::numeric_limits<double>::min());
}

inline double sample_beta(double a, double b, SeededRng& rng) {
  ensure(a > 0.0 && b > 0.0, "beta shapes must be positive");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

inline long long sample_poisson(double mean, SeededRng& rng) {
  ensure(mean >= 0.0 && std::isfinite(mean), "poisson mean must be finite and non-negative");
  if (mean == 0.0) return 0;
  boost::random::poisson_distribution<long long, double> dist(mean);
  return dist(rng);
}

/// Log-normal random-walk proposal: current * exp(scale * N(0, 1)).
inline double sample_lognormal_step(double current, double scale, SeededRng& rng) {
  return current * std::exp(scale * sample_normal(rng));
}

/// Index i drawn with probability weights[i] / sum(weights).
inline std::size_t sample_discrete(std::span<const double> weights, SeededRng& rng) {
  double total = 0.0;
  for (double w : weights) {
    ensure<NumericalError>(w >= 0.0, "negative weight in discrete distribution");
    total += w;
  }
  ensure<NumericalError>(total > 0.0 && std::isfinite(total),
                         "discrete distribution has no positive finite mass");
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    cumulative += weights[i];
    if (cumulative > target) return i;
  }
  return last_positive;
}

/// Same as sample_discrete with log weights; max-subtracted before exponentiation.
inline std::size_t sample_discrete_log(std::span<const double> log_weights, SeededRng& rng,
                                       std::vector<double>& scratch) {
  double peak = kNegInf;
  for (double v : log_weights) peak = std::max(peak, v);
  ensure<NumericalError>(peak > kNegInf && !std::isnan(peak),
                         "all candidate weights are zero or undefined");
  scratch.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) scratch[i] = std::exp(log_weights[i] - peak);
  return sample_discrete(scratch, rng);
}

inline std::size_t sample_discrete_log(std::span<const double> log_weights, SeededRng& rng) {
  std::vector<double> scratch;
  return sample_discrete_log(log_weights, rng, scratch);
}

/// Gamma(shape, rate) restricted to (lower, upper), by inverse CDF.
///
/// When the interval carries less than 1e-12 of the mass the inverse CDF is
/// unreliable and an exact rejection sampler takes over: a power-law proposal
/// for intervals near the origin, a shifted exponential for the right tail.
inline double sample_truncated_gamma(double shape, double rate, double lower, double upper,
                                     SeededRng& rng) {
  ensure(shape > 0.0 && rate > 0.0, "gamma shape and rate must be positive");
  ensure(lower >= 0.0 && upper > lower, "truncation interval must satisfy 0 <= lower < upper");
  namespace bm = boost::math;
  const double zl = rate * lower;
  const double zu = rate * upper;
  const double p_lo = zl > 0.0 ? bm::gamma_p(shape, zl) : 0.0;
  const double u = rng.uniform();
  auto clamp_inside = [&](double x) {
    if (x <= lower) x = std::nextafter(lower, kInf);
    if (x >= upper) x = std::nextafter(upper, 0.0);
    return x;
  };
  if (p_lo < 0.5) {
    const double p_hi = std::isinf(zu) ? 1.0 : bm::gamma_p(shape, zu);
    const double mass = p_hi - p_lo;
    if (mass >= 1e-12) return clamp_inside(bm::gamma_p_inv(shape, p_lo + u * mass) / rate);
  } else {
    const double q_lo = bm::gamma_q(shape, zl);
    const double q_hi = std::isinf(zu) ? 0.0 : bm::gamma_q(shape, zu);
    const double mass = q_lo - q_hi;
    if (mass >= 1e-12) {
      const double target = std::max(q_lo - u * mass, std::numeric_limits<double>::min());
      return clamp_inside(bm::gamma_q_inv(shape, target) / rate);
    }
  }

  constexpr int kMaxTries = 10'000'000;
  const bool near_origin = std::isfinite(zu) && (zu - zl < 1.0 || zu <= std::max(shape, 1.0));
  if (near_origin) {
    // Proposal density proportional to x^{shape-1} on (lower, upper).
    const double lo_s = std::pow(lower, shape);
    const double hi_s = std::pow(upper, shape);
    for (int i = 0; i < kMaxTries; ++i) {
      const double x = std::pow(lo_s + rng.uniform() * (hi_s - lo_s), 1.0 / shape);
      if (rng.uniform() <= std::exp(-rate * (x - lower))) return clamp_inside(x);
    }
  } else {
    const double tilt = rate - std::max(shape - 1.0, 0.0) / lower;
    ensure<NumericalError>(tilt > 0.0, "truncated gamma tail sampler needs lower beyond the mode");
    for (int i = 0; i < kMaxTries; ++i) {
      const double x = lower + sample_exponential(tilt, rng);
      if (x >= upper) continue;
      const double log_accept = (shape - 1.0) * std::log(x / lower) - (rate - tilt) * (x - lower);
      if (std::log(rng.uniform()) <= log_accept) return x;
    }
  }
  throw NumericalError("truncated gamma rejection sampler did not terminate");
}

inline double sample_truncated_gamma(double shape, double rate, double upper, SeededRng& rng) {
  return sample_truncated_gamma(shape, rate, 0.0, upper, rng);
}

/// Erlang(shape, rate) restricted to (lower, upper) by inverse CDF.
inline double sample_truncated_erlang(int shape, double rate, double lower, double upper,
                                      SeededRng& rng) {
  return sample_truncated_gamma(static_cast<double>(shape), rate, lower, upper, rng);
}

}  // namespace mhp::stats
