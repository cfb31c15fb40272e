#pragma once

// Gibbs sampler for the ETAS model, and the updates of (mu, a, b, psi) that
// the semiparametric variant shares with it.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mhp/baselines.hpp"
#include "mhp/catalog.hpp"
#include "mhp/priors.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/stats.hpp"

namespace mhp {

namespace ground {

// Sufficient quantities of the branching structure for (mu, a, b, psi).
struct BranchSummary {
  double immigrants = 0.0;
  double offspring = 0.0;
  double parent_excess = 0.0;  // sum over offspring of (kappa_parent - kappa0)
};

inline BranchSummary summarize(const std::vector<int>& parent, std::span<const double> excess) {
  BranchSummary s;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] == 0) {
      s.immigrants += 1.0;
    } else {
      s.offspring += 1.0;
      s.parent_excess += excess[parent[i] - 1];
    }
  }
  return s;
}

// sum_j e^{b (k_j - k0)} G(T - t_j), the expected offspring count per unit a.
inline double edge_mass(double b, std::span<const double> excess, std::span<const double> G) {
  double s = 0.0;
  for (std::size_t j = 0; j < excess.size(); ++j) s += std::exp(b * excess[j]) * G[j];
  return s;
}

inline double draw_mu(const ScalarPrior& prior, double immigrants, double T, stats::SeededRng& rng) {
  ensure(prior.is_gamma_family(), "mu needs an exponential or gamma prior");
  return stats::sample_gamma(prior.gamma_shape() + immigrants, prior.rate() + T, rng);
}

// Gamma full conditional truncated to a < (psi - b) / psi.
inline double draw_a(const ScalarPrior& prior, double offspring, double mass, double b, double psi,
                     stats::SeededRng& rng) {
  ensure(prior.is_gamma_family(), "a needs an exponential or gamma prior");
  return stats::sample_truncated_gamma(prior.gamma_shape() + offspring, prior.rate() + mass, 0.0,
                                       (psi - b) / psi, rng);
}

// Gamma full conditional truncated to psi > b / (1 - a).
inline double draw_psi(const ScalarPrior& prior, double n, double mark_excess, double a, double b,
                       stats::SeededRng& rng) {
  ensure(prior.is_gamma_family(), "psi needs an exponential or gamma prior");
  return stats::sample_truncated_gamma(prior.gamma_shape() + n, prior.rate() + mark_excess, b / (1.0 - a),
                                       stats::kInf, rng);
}

// Metropolis step for b; proposals outside the stability region are rejected.
inline void step_b(double& b, double a, double psi, const BranchSummary& br, std::span<const double> excess,
                   std::span<const double> G, const ScalarPrior& prior, AdaptiveScale& scale,
                   stats::SeededRng& rng, bool adapt) {
  auto target = [&](double x) {
    if (!etas_stable(a, x, psi)) return stats::kNegInf;
    return x * br.parent_excess - a * edge_mass(x, excess, G) + prior.log_pdf(x);
  };
  mh_lognormal_step(b, target, scale, rng, adapt);
}

inline double log_lik_ground(double mu, double a, double b, double psi, double T, const BranchSummary& br,
                             std::span<const double> excess, std::span<const double> G) {
  double mark_excess = 0.0;
  for (double e : excess) mark_excess += e;
  const double n = static_cast<double>(excess.size());
  return br.immigrants * std::log(mu) - mu * T + br.offspring * std::log(a) + b * br.parent_excess -
         a * edge_mass(b, excess, G) + n * std::log(psi) - psi * mark_excess;
}

}  // namespace ground

class EtasSampler {
 public:
  EtasSampler(const MarkedPointPattern& pattern, const EtasPriors& priors) : priors_(priors) {
    for (const char* name : {"b", "p", "c"}) scales_[name] = {};
    set_data(pattern);
    set_state(initial_state(), std::vector<int>(n_, 0));
  }

  void set_data(const MarkedPointPattern& pattern) {
    pattern.validate();
    pattern_ = pattern;
    n_ = pattern.size();
    T_ = pattern.window_end;
    excess_.resize(n_);
    mark_excess_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) mark_excess_ += excess_[j] = pattern.marks[j] - pattern.bounds.kappa0;
  }

  /// psi at its maximum-likelihood value, b and a well inside the stability
  /// region, mu, p and c at their prior means.
  EtasState initial_state() const {
    EtasState s;
    s.psi = n_ > 0 && mark_excess_ > 0.0 ? static_cast<double>(n_) / mark_excess_ : priors_.psi.initial();
    s.b = std::min(priors_.b.initial(), 0.5 * s.psi);
    s.a = 0.5 * (s.psi - s.b) / s.psi;
    s.mu = priors_.mu.initial();
    s.p = priors_.p.initial();
    s.c = priors_.c.initial();
    return s;
  }

  void set_state(const EtasState& s, const std::vector<int>& parent) {
    ensure(etas_stable(s.a, s.b, s.psi), "ETAS state violates the stability constraint");
    ensure(s.mu > 0.0 && s.p > 0.0 && s.c > 0.0, "ETAS parameters must be positive");
    ensure(parent.size() == n_ && valid_branching(parent), "invalid branching structure");
    state_ = s;
    parent_ = parent;
    rebuild_G(state_.p, state_.c, G_);
  }

  const EtasState& state() const { return state_; }
  const std::vector<int>& parent() const { return parent_; }
  std::map<std::string, AdaptiveScale>& scales() { return scales_; }

  void sweep(stats::SeededRng& rng, bool adapt, std::map<std::string, double>* timings = nullptr) {
    BlockTimer t(timings);
    t.time("branching", [&] { update_branching(rng); });
    t.time("gibbs", [&] { update_gibbs(rng); });
    t.time("mh", [&] { update_mh(rng, adapt); });
  }

  void update_branching(stats::SeededRng& rng) {
    const double log_norm = std::log(state_.p) + state_.p * std::log(state_.c);
    std::vector<double> w(n_);
    for (std::size_t k = 0; k < n_; ++k) w[k] = state_.a * std::exp(state_.b * excess_[k]);
    for (std::size_t i = 1; i < n_; ++i) {
      weights_.assign(1, state_.mu);
      for (std::size_t k = 0; k < i; ++k) {
        const double lag = pattern_.times[i] - pattern_.times[k];
        weights_.push_back(w[k] * std::exp(log_norm - (state_.p + 1.0) * std::log(state_.c + lag)));
      }
      const std::size_t pick = stats::sample_discrete(weights_, rng);
      parent_[i] = static_cast<int>(pick);
    }
  }

  // mu, a and psi from their (truncated) gamma full conditionals.
  void update_gibbs(stats::SeededRng& rng) {
    const auto br = ground::summarize(parent_, excess_);
    state_.mu = ground::draw_mu(priors_.mu, br.immigrants, T_, rng);
    state_.a = ground::draw_a(priors_.a, br.offspring, ground::edge_mass(state_.b, excess_, G_), state_.b,
                              state_.psi, rng);
    state_.psi = ground::draw_psi(priors_.psi, static_cast<double>(n_), mark_excess_, state_.a, state_.b, rng);
  }

  // b, then the Lomax shape p and scale c.
  void update_mh(stats::SeededRng& rng, bool adapt) {
    const auto br = ground::summarize(parent_, excess_);
    ground::step_b(state_.b, state_.a, state_.psi, br, excess_, G_, priors_.b, scales_["b"], rng, adapt);
    std::vector<double> G;
    auto target = [&](double p, double c) {
      rebuild_G(p, c, G);
      return lag_loglik(p, c) - state_.a * ground::edge_mass(state_.b, excess_, G);
    };
    mh_lognormal_step(
        state_.p, [&](double p) { return target(p, state_.c) + priors_.p.log_pdf(p); }, scales_["p"], rng, adapt);
    mh_lognormal_step(
        state_.c, [&](double c) { return target(state_.p, c) + priors_.c.log_pdf(c); }, scales_["c"], rng, adapt);
    rebuild_G(state_.p, state_.c, G_);
  }

  double log_likelihood() const {
    const auto br = ground::summarize(parent_, excess_);
    return ground::log_lik_ground(state_.mu, state_.a, state_.b, state_.psi, T_, br, excess_, G_) +
           lag_loglik(state_.p, state_.c);
  }

  Snapshot snapshot(long iteration) const {
    Snapshot s;
    s.iteration = iteration;
    s.scalars = {{"mu", state_.mu},
                 {"a", state_.a},
                 {"b", state_.b},
                 {"psi", state_.psi},
                 {"p", state_.p},
                 {"c", state_.c},
                 {"rho", etas_rho(state_, pattern_.bounds.kappa0, stats::kInf, false)},
                 {"log_lik", log_likelihood()}};
    s.parent = parent_;
    return s;
  }

  static EtasState state_from_snapshot(const Snapshot& s) {
    return {s.scalar("mu"), s.scalar("a"), s.scalar("b"), s.scalar("psi"), s.scalar("p"), s.scalar("c")};
  }

  void restore(const Snapshot& s) { set_state(state_from_snapshot(s), s.parent); }

  void check_invariants() const {
    ensure<NumericalError>(valid_branching(parent_), "branching structure is invalid");
    ensure<NumericalError>(etas_stable(state_.a, state_.b, state_.psi), "stability constraint violated");
  }

 private:
  void rebuild_G(double p, double c, std::vector<double>& G) const {
    G.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) G[j] = stats::lomax_cdf(T_ - pattern_.times[j], p, c);
  }

  double lag_loglik(double p, double c) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      if (parent_[i] != 0) s += stats::log_lomax_pdf(pattern_.times[i] - pattern_.times[parent_[i] - 1], p, c);
    return s;
  }

  MarkedPointPattern pattern_;
  EtasPriors priors_;
  std::size_t n_ = 0;
  double T_ = 0.0;
  std::vector<double> excess_;
  double mark_excess_ = 0.0;
  EtasState state_;
  std::vector<int> parent_;
  std::vector<double> G_;
  std::map<std::string, AdaptiveScale> scales_;
  std::vector<double> weights_;
};

}  // namespace mhp
