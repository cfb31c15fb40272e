#pragma once

// Exact simulation of marked Hawkes processes through the cluster
// representation, and posterior predictive event counts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mhp/background.hpp"
#include "mhp/baselines.hpp"
#include "mhp/catalog.hpp"
#include "mhp/errors.hpp"
#include "mhp/excitation.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/stats.hpp"

namespace mhp {

// ---------------------------------------------------------------------------
// Mark laws

struct TruncExpMarks {
  double psi = 1.0;
  MarkBounds bounds;
};

// Beta(a, b) rescaled to a bounded mark interval.
struct BetaMarks {
  double a = 1.0;
  double b = 1.0;
  MarkBounds bounds;
};

using MarkLaw = std::variant<TruncExpMarks, BetaMarks>;

inline const MarkBounds& mark_bounds(const MarkLaw& law) {
  return std::visit([](const auto& m) -> const MarkBounds& { return m.bounds; }, law);
}

inline double mark_pdf(double kappa, const MarkLaw& law) {
  if (const auto* e = std::get_if<TruncExpMarks>(&law))
    return stats::trunc_exp_pdf(kappa, e->psi, e->bounds.kappa0, e->bounds.kappa_max);
  const auto& b = std::get<BetaMarks>(law);
  return std::exp(stats::log_beta_pdf(b.bounds.u(kappa), b.a, b.b)) / b.bounds.width();
}

inline double sample_mark(const MarkLaw& law, stats::SeededRng& rng) {
  const MarkBounds& bd = mark_bounds(law);
  double kappa;
  if (const auto* e = std::get_if<TruncExpMarks>(&law)) {
    const double u = rng.uniform();
    const double w = bd.width();
    kappa = bd.kappa0 - std::log1p(u * (std::isinf(w) ? -1.0 : std::expm1(-e->psi * w))) / e->psi;
  } else {
    const auto& b = std::get<BetaMarks>(law);
    kappa = bd.kappa0 + bd.width() * stats::sample_beta(b.a, b.b, rng);
  }
  if (kappa <= bd.kappa0) kappa = std::nextafter(bd.kappa0, stats::kInf);
  if (kappa >= bd.kappa_max) kappa = std::nextafter(bd.kappa_max, bd.kappa0);
  return kappa;
}

// ---------------------------------------------------------------------------
// Excitation laws

/// One Lomax component with shape and scale linear in the mark.
struct LomaxComponent {
  double weight = 1.0;
  double shape = 1.0;
  double shape_slope = 0.0;
  double scale = 1.0;
  double scale_slope = 0.0;

  double p(double kappa) const { return shape + shape_slope * kappa; }
  double c(double kappa) const { return scale + scale_slope * kappa; }
};

/// Lag density sum_c w_c Lomax(x | p_c(k), c_c(k)); covers the ETAS Lomax and
/// the mark-dependent Lomax scenarios.
struct LomaxMixtureLag {
  std::vector<LomaxComponent> components;

  static LomaxMixtureLag lomax(double p, double c) { return {{{1.0, p, 0.0, c, 0.0}}}; }
  // Lomax(offset + k, 1).
  static LomaxMixtureLag mark_lomax(double offset) { return {{{1.0, offset, 1.0, 1.0, 0.0}}}; }
  // 0.6 Lomax(10 + k, 1) + 0.4 Lomax(10, 1 + k).
  static LomaxMixtureLag lomax_mixture() { return {{{0.6, 10.0, 1.0, 1.0, 0.0}, {0.4, 10.0, 0.0, 1.0, 1.0}}}; }

  double pdf(double x, double kappa) const {
    double g = 0.0;
    for (const auto& cp : components) g += cp.weight * stats::lomax_pdf(x, cp.p(kappa), cp.c(kappa));
    return g;
  }
};

struct ScaleUniformLag {
  std::vector<double> atoms;
  std::vector<double> weights;
};

using LagLaw = std::variant<LomaxMixtureLag, ScaleUniformLag>;

/// alpha(k) = a e^{b (k - k0)} with a mark-free or mark-dependent lag law.
struct EtasFormExcitation {
  double a = 0.0;
  double b = 0.0;
  double kappa0 = 0.0;
  LagLaw lag = LomaxMixtureLag::lomax(1.0, 1.0);
};

struct NonparExcitation {
  BasisGrid grid;
  WeightMatrix nu;
  MarkBounds bounds;
};

using Excitation = std::variant<EtasFormExcitation, NonparExcitation>;

inline double excitation_alpha(double kappa, const Excitation& exc) {
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) return etas_alpha(kappa, e->a, e->b, e->kappa0);
  const auto& n = std::get<NonparExcitation>(exc);
  return alpha_of_kappa(kappa, n.nu, n.grid, n.bounds);
}

namespace detail {

// Expected offspring of a mark-k parent with lags in (lo, hi), split by component.
inline void component_masses(const Excitation& exc, double kappa, double lo, double hi, std::vector<double>& out) {
  out.clear();
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) {
    const double alpha = etas_alpha(kappa, e->a, e->b, e->kappa0);
    if (const auto* lm = std::get_if<LomaxMixtureLag>(&e->lag)) {
      for (const auto& cp : lm->components) {
        const double p = cp.p(kappa), c = cp.c(kappa);
        out.push_back(alpha * cp.weight * (stats::lomax_sf(lo, p, c) - stats::lomax_sf(hi, p, c)));
      }
    } else {
      const auto& su = std::get<ScaleUniformLag>(e->lag);
      for (std::size_t k = 0; k < su.atoms.size(); ++k) {
        const double th = su.atoms[k];
        out.push_back(alpha * su.weights[k] * (std::min(hi, th) - std::min(lo, th)) / th);
      }
    }
    return;
  }
  const auto& n = std::get<NonparExcitation>(exc);
  const auto c = lag_weights(kappa, n.nu, n.grid, n.bounds);
  const double rate = 1.0 / n.grid.theta;
  for (int l = 1; l <= n.grid.L; ++l) {
    const double mass = (std::isinf(hi) ? 1.0 : stats::erlang_cdf(hi, l, rate)) - stats::erlang_cdf(lo, l, rate);
    out.push_back(c[l - 1] * std::max(mass, 0.0));
  }
}

inline double draw_lag(const Excitation& exc, std::size_t component, double kappa, double lo, double hi,
                       stats::SeededRng& rng) {
  double x;
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) {
    if (const auto* lm = std::get_if<LomaxMixtureLag>(&e->lag)) {
      const auto& cp = lm->components[component];
      const double p = cp.p(kappa), c = cp.c(kappa);
      const double s_lo = stats::lomax_sf(lo, p, c), s_hi = stats::lomax_sf(hi, p, c);
      x = stats::lomax_isf(s_lo - rng.uniform() * (s_lo - s_hi), p, c);
    } else {
      const auto& su = std::get<ScaleUniformLag>(e->lag);
      x = lo + rng.uniform() * (std::min(hi, su.atoms[component]) - lo);
    }
  } else {
    const auto& n = std::get<NonparExcitation>(exc);
    x = stats::sample_truncated_erlang(static_cast<int>(component) + 1, 1.0 / n.grid.theta, lo, hi, rng);
  }
  if (x <= lo) x = std::nextafter(lo, stats::kInf);
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generator

struct GeneratorSpec {
  Background background = ConstantBackground{};
  Excitation excitation = EtasFormExcitation{};
  MarkLaw marks = TruncExpMarks{};
  double window_end = 1.0;
  std::uint64_t seed = 0;
  bool unstable = false;
  std::size_t cap = 1'000'000;
};

/// Branching ratio E[alpha(k)] under the mark law; closed form when
/// available, adaptive Gauss-Kronrod quadrature otherwise.
inline double spec_rho(const Excitation& exc, const MarkLaw& marks) {
  if (const auto* e = std::get_if<EtasFormExcitation>(&exc)) {
    if (const auto* te = std::get_if<TruncExpMarks>(&marks); te && te->bounds.kappa0 == e->kappa0 && te->psi > e->b)
      return etas_rho(e->a, e->b, te->psi, te->bounds.kappa0, te->bounds.kappa_max, true);
  }
  if (const auto* n = std::get_if<NonparExcitation>(&exc)) {
    if (const auto* bm = std::get_if<BetaMarks>(&marks);
        bm && bm->bounds.kappa0 == n->bounds.kappa0 && bm->bounds.kappa_max == n->bounds.kappa_max)
      return rho(n->nu, n->grid, MarkDensityParams{bm->a, bm->b});
  }
  const MarkBounds& bd = mark_bounds(marks);
  auto f = [&](double k) {
    if (!(k > bd.kappa0 && k < bd.kappa_max)) return 0.0;
    return excitation_alpha(k, exc) * mark_pdf(k, marks);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, bd.kappa0, bd.kappa_max, 15, 1e-12);
}

inline double spec_rho(const GeneratorSpec& spec) { return spec_rho(spec.excitation, spec.marks); }

/// Poisson process with intensity(t) <= bound on (t0, t1), by thinning.
inline std::vector<double> simulate_nhpp(const std::function<double(double)>& intensity, double bound, double t0,
                                         double t1, stats::SeededRng& rng) {
  ensure(t1 >= t0, "window must satisfy t0 <= t1");
  ensure(bound >= 0.0 && std::isfinite(bound), "thinning bound must be finite and non-negative");
  std::vector<double> out;
  if (bound == 0.0) return out;
  const long long count = stats::sample_poisson(bound * (t1 - t0), rng);
  std::vector<double> candidates(static_cast<std::size_t>(count));
  for (auto& t : candidates) t = t0 + (t1 - t0) * rng.uniform();
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    const double lam = intensity(t);
    ensure<NumericalError>(lam <= bound * (1.0 + 1e-12), "intensity exceeds the thinning bound");
    if (rng.uniform() * bound < lam) out.push_back(t);
  }
  return out;
}

/// Immigrant times on (t0, t1).
inline std::vector<double> simulate_background(const Background& bg, double t0, double t1, stats::SeededRng& rng) {
  if (const auto* c = std::get_if<ConstantBackground>(&bg)) {
    std::vector<double> times(static_cast<std::size_t>(stats::sample_poisson(c->mu * (t1 - t0), rng)));
    for (auto& t : times) t = t0 + (t1 - t0) * rng.uniform();
    std::sort(times.begin(), times.end());
    return times;
  }
  return simulate_nhpp([&](double t) { return mu_of_t(t, bg); }, intensity_bound(bg), t0, t1, rng);
}

struct SimulationResult {
  LabeledPattern data;
  std::vector<int> parent;  // 1-based, 0 for immigrants
  double rho = 0.0;
};

namespace detail {

struct RawEvent {
  double time;
  double mark;
  long parent;  // index into the raw list, -1 for immigrants and history
};

// Appends all descendants of events[first..] whose times fall before t_end.
inline void grow_clusters(std::vector<RawEvent>& events, std::size_t first, const Excitation& exc,
                          const MarkLaw& marks, double t_end, std::size_t cap, stats::SeededRng& rng) {
  std::vector<double> masses;
  for (std::size_t idx = first; idx < events.size(); ++idx) {
    const RawEvent parent = events[idx];
    component_masses(exc, parent.mark, 0.0, t_end - parent.time, masses);
    for (std::size_t c = 0; c < masses.size(); ++c) {
      const long long count = stats::sample_poisson(masses[c], rng);
      for (long long r = 0; r < count; ++r) {
        const double lag = draw_lag(exc, c, parent.mark, 0.0, t_end - parent.time, rng);
        events.push_back({parent.time + lag, sample_mark(marks, rng), static_cast<long>(idx)});
      }
      ensure<NumericalError>(events.size() <= cap, "simulation exceeded the event cap of " + std::to_string(cap) +
                                                       " events; the process is likely explosive");
    }
  }
}

}  // namespace detail

/// One realization on (0, T) with ground-truth branching.
inline SimulationResult simulate_mhp(const GeneratorSpec& spec, stats::SeededRng& rng) {
  ensure(spec.window_end > 0.0, "window end must be positive");
  const double r = spec_rho(spec);
  ensure(spec.unstable || r < 1.0,
         "generator is not stable (branching ratio " + std::to_string(r) + " >= 1); pass the unstable override");
  std::vector<detail::RawEvent> events;
  for (double t : simulate_background(spec.background, 0.0, spec.window_end, rng))
    events.push_back({t, sample_mark(spec.marks, rng), -1});
  ensure<NumericalError>(events.size() <= spec.cap, "background alone exceeds the event cap");
  detail::grow_clusters(events, 0, spec.excitation, spec.marks, spec.window_end, spec.cap, rng);

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return events[a].time < events[b].time; });
  std::vector<long> position(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<long>(i);

  SimulationResult out;
  out.rho = r;
  auto& p = out.data.pattern;
  p.window_end = spec.window_end;
  p.bounds = mark_bounds(spec.marks);
  out.data.labels.emplace();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& e = events[order[i]];
    ensure<NumericalError>(i == 0 || e.time > p.times.back(), "simulated event times collided");
    p.times.push_back(e.time);
    p.marks.push_back(e.mark);
    out.parent.push_back(e.parent < 0 ? 0 : static_cast<int>(position[e.parent]) + 1);
    out.data.labels->push_back(e.parent < 0 ? EventLabel::main : EventLabel::aftershock);
  }
  return out;
}

inline SimulationResult simulate_mhp(const GeneratorSpec& spec) {
  stats::SeededRng rng(spec.seed, 0);
  return simulate_mhp(spec, rng);
}

/// Total descendants of each immigrant, from a ground-truth branching.
inline std::vector<long> cluster_sizes(const std::vector<int>& parent) {
  std::vector<long> root(parent.size());
  std::vector<long> size;
  std::vector<long> slot(parent.size(), -1);
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] == 0) {
      slot[i] = static_cast<long>(size.size());
      size.push_back(0);
    } else {
      slot[i] = slot[parent[i] - 1];
      ++size[slot[i]];
    }
  }
  return size;
}

// ---------------------------------------------------------------------------
// Scenario presets

struct Scenario {
  std::string name;
  double mu = 0.0;
  double a = 0.0;
  double b = 0.0;
  double psi = 0.0;
  MarkBounds bounds{4.0, 10.0};
  double window_end = 5000.0;
  LagLaw lag = LomaxMixtureLag::lomax(1.0, 1.0);

  GeneratorSpec spec(std::uint64_t seed) const {
    GeneratorSpec g;
    g.background = ConstantBackground{mu};
    g.excitation = EtasFormExcitation{a, b, bounds.kappa0, lag};
    g.marks = TruncExpMarks{psi, bounds};
    g.window_end = window_end;
    g.seed = seed;
    return g;
  }
};

/// "lomax": ETAS-form with Lomax(20, 2) lags; "mark-lomax": Lomax(5 + k, 1);
/// "lomax-mixture": 0.6 Lomax(10 + k, 1) + 0.4 Lomax(10, 1 + k).
inline Scenario scenario_preset(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  if (name == "lomax") {
    s.mu = 0.02;
    s.a = 0.47;
    s.b = 0.5;
    s.psi = 1.0;
    s.lag = LomaxMixtureLag::lomax(20.0, 2.0);
  } else if (name == "mark-lomax" || name == "s42") {
    s.name = "mark-lomax";
    s.mu = 0.01;
    s.a = 0.32;
    s.b = 0.5;
    s.psi = 0.6;
    s.lag = LomaxMixtureLag::mark_lomax(5.0);
  } else if (name == "lomax-mixture" || name == "s43") {
    s.name = "lomax-mixture";
    s.mu = 0.01;
    s.a = 0.32;
    s.b = 0.5;
    s.psi = 0.6;
    s.lag = LomaxMixtureLag::lomax_mixture();
  } else {
    throw ValidationError("unknown scenario '" + std::string(name) + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Posterior predictive

/// Generator components implied by one posterior snapshot.
struct PredictiveModel {
  Background background;
  Excitation excitation;
  MarkLaw marks;
};

inline PredictiveModel predictive_model(const ChainMeta& meta, const Snapshot& s) {
  PredictiveModel pm;
  const MarkBounds& bd = meta.bounds;
  switch (meta.model) {
    case ModelKind::nonpar:
    case ModelKind::nonpar_general: {
      NonparExcitation n;
      n.grid = {meta.L, meta.M, s.scalar("theta"), s.scalar("d")};
      n.nu = WeightMatrix(meta.L, meta.M);
      const auto& nu = s.vector("nu");
      ensure(nu.size() == n.nu.raw().size(), "snapshot weight matrix has the wrong size");
      std::copy(nu.begin(), nu.end(), n.nu.raw().begin());
      n.bounds = bd;
      pm.excitation = std::move(n);
      pm.marks = BetaMarks{s.scalar("a_beta"), s.scalar("b_beta"), bd};
      if (meta.model == ModelKind::nonpar_general) {
        ErlangMixtureBackground bg;
        bg.omega = s.vector("omega");
        bg.J = static_cast<int>(bg.omega.size());
        bg.phi = s.scalar("phi");
        bg.e0 = s.scalar("e0");
        bg.b_g0 = s.scalar("b_g0");
        pm.background = bg;
      } else {
        pm.background = ConstantBackground{s.scalar("mu")};
      }
      break;
    }
    case ModelKind::etas:
    case ModelKind::semipar: {
      EtasFormExcitation e;
      e.a = s.scalar("a");
      e.b = s.scalar("b");
      e.kappa0 = bd.kappa0;
      if (meta.model == ModelKind::etas)
        e.lag = LomaxMixtureLag::lomax(s.scalar("p"), s.scalar("c"));
      else
        e.lag = ScaleUniformLag{s.vector("atoms"), s.vector("weights")};
      pm.excitation = std::move(e);
      pm.marks = TruncExpMarks{s.scalar("psi"), MarkBounds{bd.kappa0, stats::kInf}};
      pm.background = ConstantBackground{s.scalar("mu")};
      break;
    }
  }
  return pm;
}

/// Number of events in (t_from, t_end) when the history is continued past
/// its window end T <= t_from: residual offspring of history events, new
/// immigrants, and their clusters. t_from defaults to T.
inline long predictive_count(const PredictiveModel& pm, const MarkedPointPattern& history, double t_end,
                             stats::SeededRng& rng, std::size_t cap = 1'000'000,
                             std::optional<double> t_from = std::nullopt) {
  const double T = history.window_end;
  ensure(t_end > T, "forecast horizon must extend beyond the fitted window");
  const double from = t_from.value_or(T);
  ensure(from >= T && from < t_end, "forecast horizon overlaps the fitted window");
  std::vector<detail::RawEvent> events;
  std::vector<double> masses;
  for (std::size_t j = 0; j < history.size(); ++j) {
    const double t = history.times[j], kappa = history.marks[j];
    detail::component_masses(pm.excitation, kappa, T - t, t_end - t, masses);
    for (std::size_t c = 0; c < masses.size(); ++c) {
      const long long count = stats::sample_poisson(masses[c], rng);
      for (long long r = 0; r < count; ++r)
        events.push_back({t + detail::draw_lag(pm.excitation, c, kappa, T - t, t_end - t, rng),
                          sample_mark(pm.marks, rng), -1});
    }
  }
  for (double t : simulate_background(pm.background, T, t_end, rng))
    events.push_back({t, sample_mark(pm.marks, rng), -1});
  ensure<NumericalError>(events.size() <= cap, "forecast exceeded the event cap");
  detail::grow_clusters(events, 0, pm.excitation, pm.marks, t_end, cap, rng);
  return static_cast<long>(std::count_if(events.begin(), events.end(), [&](const auto& e) { return e.time > from; }));
}

/// One predictive count per snapshot, each on its own generator stream, so
/// results do not depend on the thread count.
inline std::vector<long> posterior_predictive_counts(const ChainOutput& chain, const MarkedPointPattern& history,
                                                     double t_end, std::uint64_t seed, int threads = 1,
                                                     std::size_t cap = 1'000'000,
                                                     std::optional<double> t_from = std::nullopt) {
  ensure(!chain.snapshots.empty(), "chain has no snapshots");
  ensure(t_end > history.window_end, "forecast horizon must extend beyond the fitted window");
  const std::size_t count = chain.snapshots.size();
  std::vector<long> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const stats::SeededRng base(seed, 0x70726564ULL);
  auto work = [&] {
    for (std::size_t s = next++; s < count; s = next++) {
      try {
        auto rng = base.split(s);
        out[s] = predictive_count(predictive_model(chain.meta, chain.snapshots[s]), history, t_end, rng, cap, t_from);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::max(1, threads); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mhp
