#pragma once

// Posterior functionals, branching accuracy and forecast scoring.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/simulate.hpp"

namespace mhp {

inline double interval_score(double l, double u, double y, double alpha) {
  ensure(alpha > 0.0 && alpha < 1.0, "interval score level alpha must lie in (0, 1)");
  ensure(l <= u, "interval score needs l <= u");
  double s = u - l;
  if (y < l) s += 2.0 / alpha * (l - y);
  if (y > u) s += 2.0 / alpha * (y - u);
  return s;
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  ensure(!sorted.empty(), "quantile of an empty sample");
  ensure(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

// ---------------------------------------------------------------------------
// Branching accuracy

struct BranchingScore {
  std::vector<double> draws;
  double mean = 0.0;
  double sd = 0.0;
};

inline double misclassification_rate(const std::vector<int>& parent, const std::vector<EventLabel>& labels) {
  ensure(parent.size() == labels.size(), "branching and labels differ in length");
  ensure(!parent.empty(), "misclassification needs at least one event");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    const bool immigrant = parent[i] == 0;
    if (immigrant != (labels[i] == EventLabel::main)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(parent.size());
}

inline BranchingScore misclassification(const std::vector<std::vector<int>>& draws,
                                        const std::optional<std::vector<EventLabel>>& labels) {
  ensure(labels.has_value(), "misclassification needs main/aftershock labels");
  ensure(!draws.empty(), "misclassification needs at least one branching draw");
  BranchingScore out;
  for (const auto& y : draws) out.draws.push_back(misclassification_rate(y, *labels));
  const double n = static_cast<double>(out.draws.size());
  for (double r : out.draws) out.mean += r / n;
  if (out.draws.size() > 1) {
    double ss = 0.0;
    for (double r : out.draws) ss += (r - out.mean) * (r - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

inline BranchingScore misclassification(const ChainOutput& chain, const std::optional<std::vector<EventLabel>>& labels) {
  std::vector<std::vector<int>> draws;
  for (const auto& s : chain.snapshots) draws.push_back(s.parent);
  return misclassification(draws, labels);
}

// ---------------------------------------------------------------------------
// Forecasts

struct ForecastResult {
  std::vector<long> draws;
  std::optional<long> observed;
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  std::optional<double> score;
};

/// Equal-tailed predictive interval from the order statistics of the count
/// draws, rounded outward to the nearest order statistic.
inline ForecastResult forecast_result(std::vector<long> draws, double level, std::optional<long> observed) {
  ensure(!draws.empty(), "forecast needs at least one predictive draw");
  ensure(level > 0.0 && level < 1.0, "forecast level must lie in (0, 1)");
  ForecastResult r;
  r.level = level;
  r.observed = observed;
  std::vector<long> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  const double alpha = 1.0 - level;
  const double n1 = static_cast<double>(sorted.size() - 1);
  r.lower = static_cast<double>(sorted[static_cast<std::size_t>(std::floor(n1 * alpha / 2.0 + 1e-9))]);
  r.upper = static_cast<double>(sorted[static_cast<std::size_t>(std::ceil(n1 * (1.0 - alpha / 2.0) - 1e-9))]);
  for (long d : sorted) r.mean += static_cast<double>(d) / static_cast<double>(sorted.size());
  if (observed) r.score = interval_score(r.lower, r.upper, static_cast<double>(*observed), alpha);
  r.draws = std::move(draws);
  return r;
}

// ---------------------------------------------------------------------------
// Functionals

inline double offspring_pdf(double x, double kappa, const Excitation& exc) {
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) {
    if (const auto* lm = std::get_if<LomaxMixtureLag>(&e->lag)) return lm->pdf(x, kappa);
    const auto& su = std::get<ScaleUniformLag>(e->lag);
    return semipar_offspring_density(x, su.atoms, su.weights);
  }
  const auto& n = std::get<NonparExcitation>(exc);
  return offspring_density(x, kappa, n.nu, n.grid, n.bounds);
}

/// P(lag > x) for a direct offspring of a mark-k parent.
inline double offspring_tail(double x, double kappa, const Excitation& exc) {
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) {
    if (const auto* lm = std::get_if<LomaxMixtureLag>(&e->lag)) {
      double s = 0.0;
      for (const auto& cp : lm->components) s += cp.weight * stats::lomax_sf(x, cp.p(kappa), cp.c(kappa));
      return s;
    }
    const auto& su = std::get<ScaleUniformLag>(e->lag);
    return 1.0 - semipar_offspring_cdf(x, su.atoms, su.weights);
  }
  const auto& n = std::get<NonparExcitation>(exc);
  return tail_probability(x, kappa, n.nu, n.grid, n.bounds);
}

enum class FunctionalKind { alpha, offspring_density, tail_prob, background, rho, mark_density };

inline std::string_view to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::alpha: return "alpha";
    case FunctionalKind::offspring_density: return "offspring_density";
    case FunctionalKind::tail_prob: return "tail_prob";
    case FunctionalKind::background: return "background";
    case FunctionalKind::rho: return "rho";
    case FunctionalKind::mark_density: return "mark_density";
  }
  return "?";
}

/// `grid` is the evaluation axis (marks, lags or times); `kappas` lists the
/// parent marks for offspring_density and tail_prob.
struct FunctionalRequest {
  FunctionalKind kind = FunctionalKind::rho;
  std::vector<double> grid;
  std::vector<double> kappas;
};

struct BandRow {
  double kappa = 0.0;  // parent mark, where applicable
  double x = 0.0;      // grid coordinate
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct FunctionalTable {
  FunctionalKind kind = FunctionalKind::rho;
  double level = 0.95;
  std::vector<BandRow> rows;
};

namespace detail {

inline BandRow band(std::vector<double>& values, double level) {
  BandRow r;
  for (double v : values) r.mean += v / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  r.lower = quantile_sorted(values, (1.0 - level) / 2.0);
  r.upper = quantile_sorted(values, 1.0 - (1.0 - level) / 2.0);
  // Rounding in the mean can step outside a zero-width band.
  r.mean = std::clamp(r.mean, r.lower, r.upper);
  return r;
}

}  // namespace detail

/// Pointwise posterior mean and equal-tailed band over the saved snapshots.
inline FunctionalTable functional_summary(const ChainOutput& chain, const FunctionalRequest& req,
                                          double level = 0.95) {
  ensure(!chain.snapshots.empty(), "chain has no snapshots");
  ensure(level > 0.0 && level < 1.0, "band level must lie in (0, 1)");
  const bool per_kappa =
      req.kind == FunctionalKind::offspring_density || req.kind == FunctionalKind::tail_prob;
  ensure(!per_kappa || !req.kappas.empty(), "offspring functionals need at least one parent mark");
  ensure(req.kind == FunctionalKind::rho || !req.grid.empty(), "functional needs a non-empty grid");

  struct Point {
    double kappa, x;
  };
  std::vector<Point> points;
  if (req.kind == FunctionalKind::rho) {
    points.push_back({0.0, 0.0});
  } else if (per_kappa) {
    for (double k : req.kappas)
      for (double x : req.grid) points.push_back({k, x});
  } else {
    for (double x : req.grid) points.push_back({0.0, x});
  }

  std::vector<std::vector<double>> values(points.size(), std::vector<double>(chain.snapshots.size()));
  for (std::size_t s = 0; s < chain.snapshots.size(); ++s) {
    const auto& snap = chain.snapshots[s];
    if (req.kind == FunctionalKind::rho) {
      values[0][s] = snap.scalar("rho");
      continue;
    }
    const PredictiveModel pm = predictive_model(chain.meta, snap);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const auto [k, x] = points[p];
      double v = 0.0;
      switch (req.kind) {
        case FunctionalKind::alpha: v = excitation_alpha(x, pm.excitation); break;
        case FunctionalKind::offspring_density: v = offspring_pdf(x, k, pm.excitation); break;
        case FunctionalKind::tail_prob: v = offspring_tail(x, k, pm.excitation); break;
        case FunctionalKind::background: v = mu_of_t(x, pm.background); break;
        case FunctionalKind::mark_density: v = mark_pdf(x, pm.marks); break;
        case FunctionalKind::rho: break;
      }
      values[p][s] = v;
    }
  }

  FunctionalTable table;
  table.kind = req.kind;
  table.level = level;
  for (std::size_t p = 0; p < points.size(); ++p) {
    BandRow r = detail::band(values[p], level);
    r.kappa = points[p].kappa;
    r.x = points[p].x;
    table.rows.push_back(r);
  }
  return table;
}

/// Number of grid points whose band contains truth(kappa, x).
template <class Truth>
int band_coverage(const FunctionalTable& table, Truth&& truth) {
  int covered = 0;
  for (const auto& r : table.rows) {
    const double t = truth(r.kappa, r.x);
    if (t >= r.lower && t <= r.upper) ++covered;
  }
  return covered;
}

}  // namespace mhp
