#pragma once

// Blocked Gibbs sampler for ETAS with a scale-uniform DP mixture lag density,
// on a truncated stick-breaking representation.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "mhp/baselines.hpp"
#include "mhp/catalog.hpp"
#include "mhp/priors.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/sampler/etas.hpp"
#include "mhp/stats.hpp"

namespace mhp {

/// Weights pi_k from sticks v_1..v_N (v_N = 1).
inline std::vector<double> stick_weights(const std::vector<double>& sticks) {
  std::vector<double> w(sticks.size());
  double rest = 1.0;
  for (std::size_t k = 0; k < sticks.size(); ++k) {
    w[k] = rest * sticks[k];
    rest *= 1.0 - sticks[k];
  }
  return w;
}

/// Inverse-gamma(a, b) log density.
inline double log_inv_gamma_pdf(double x, double a, double b) {
  if (!(x > 0.0)) return stats::kNegInf;
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

class SemiparSampler {
 public:
  SemiparSampler(const MarkedPointPattern& pattern, const EtasPriors& etas, const SemiparPriors& dp)
      : etas_priors_(etas), dp_(dp) {
    ensure(dp.N >= 2, "stick-breaking truncation needs at least two atoms");
    ensure(dp.alpha0.is_gamma_family() && dp.b0.is_gamma_family(), "alpha0 and b0 need gamma-family priors");
    for (const char* name : {"b", "a0"}) scales_[name] = {};
    set_data(pattern);
    set_state(initial_state(), std::vector<int>(n_, 0));
  }

  void set_data(const MarkedPointPattern& pattern) {
    pattern.validate();
    pattern_ = pattern;
    n_ = pattern.size();
    T_ = pattern.window_end;
    excess_.resize(n_);
    horizon_.resize(n_);
    mark_excess_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      mark_excess_ += excess_[j] = pattern.marks[j] - pattern.bounds.kappa0;
      horizon_[j] = T_ - pattern.times[j];
    }
  }

  /// Equal stick weights; atoms at evenly spaced quantiles of F0 under the
  /// initial (a0, b0); other scalars as for ETAS.
  SemiparState initial_state() const {
    EtasSampler helper(pattern_, etas_priors_);
    const EtasState e = helper.initial_state();
    SemiparState s;
    s.mu = e.mu;
    s.a = e.a;
    s.b = e.b;
    s.psi = e.psi;
    s.alpha0 = dp_.alpha0.initial();
    s.a0 = dp_.a0.initial();
    s.b0 = dp_.b0.initial();
    const int N = dp_.N;
    s.atoms.resize(N);
    s.sticks.resize(N);
    for (int k = 0; k < N; ++k) {
      const double q = (k + 0.5) / N;
      s.atoms[k] = s.b0 / boost::math::gamma_p_inv(s.a0, q);
      s.sticks[k] = 1.0 / (N - k);
    }
    s.weights = stick_weights(s.sticks);
    return s;
  }

  void set_state(const SemiparState& s, const std::vector<int>& parent) {
    ensure(etas_stable(s.a, s.b, s.psi), "state violates the stability constraint");
    ensure(static_cast<int>(s.atoms.size()) == dp_.N && s.sticks.size() == s.atoms.size(),
           "atom count differs from the truncation level");
    ensure(parent.size() == n_ && valid_branching(parent), "invalid branching structure");
    state_ = s;
    state_.sticks.back() = 1.0;
    state_.weights = stick_weights(state_.sticks);
    parent_ = parent;
    rebuild_density();
  }

  const SemiparState& state() const { return state_; }
  const std::vector<int>& parent() const { return parent_; }
  const std::vector<int>& allocation() const { return alloc_; }
  std::map<std::string, AdaptiveScale>& scales() { return scales_; }
  const std::map<std::string, AdaptiveScale>& scales() const { return scales_; }
  // Metropolis acceptance of the independence proposals for atoms and sticks.
  const AdaptiveScale& atom_acceptance() const { return atom_acc_; }
  const AdaptiveScale& stick_acceptance() const { return stick_acc_; }

  void sweep(stats::SeededRng& rng, bool adapt, std::map<std::string, double>* timings = nullptr) {
    BlockTimer t(timings);
    t.time("branching", [&] { update_branching(rng); });
    t.time("dp", [&] { update_dp(rng, adapt); });
    t.time("gibbs", [&] { update_gibbs(rng); });
    t.time("mh", [&] { update_b(rng, adapt); });
  }

  void update_branching(stats::SeededRng& rng) {
    std::vector<double> w(n_);
    for (std::size_t k = 0; k < n_; ++k) w[k] = state_.a * std::exp(state_.b * excess_[k]);
    for (std::size_t i = 1; i < n_; ++i) {
      weights_.assign(1, state_.mu);
      for (std::size_t k = 0; k < i; ++k) weights_.push_back(w[k] * density(pattern_.times[i] - pattern_.times[k]));
      parent_[i] = static_cast<int>(stats::sample_discrete(weights_, rng));
    }
  }

  /// Allocations, atoms, sticks, alpha0, a0 and b0.
  void update_dp(stats::SeededRng& rng, bool adapt) {
    const int N = dp_.N;
    auto& s = state_;

    // Allocations: Pr(s_i = k) proportional to pi_k / theta_k 1[x_i < theta_k].
    alloc_.assign(n_, -1);
    std::vector<double> count(N, 0.0), max_lag(N, 0.0), w(N);
    for (std::size_t i = 0; i < n_; ++i) {
      if (parent_[i] == 0) continue;
      const double x = lag(i);
      for (int k = 0; k < N; ++k) w[k] = x < s.atoms[k] ? s.weights[k] / s.atoms[k] : 0.0;
      const auto k = stats::sample_discrete(w, rng);
      alloc_[i] = static_cast<int>(k);
      count[k] += 1.0;
      max_lag[k] = std::max(max_lag[k], x);
    }

    // Atoms: truncated inverse-gamma proposal from the conjugate update,
    // corrected for the edge term exp(-a sum_j w_j G(T - t_j)).
    std::vector<double> wj(n_);
    for (std::size_t j = 0; j < n_; ++j) wj[j] = std::exp(s.b * excess_[j]);
    auto edge_share = [&](double theta) {
      double e = 0.0;
      for (std::size_t j = 0; j < n_; ++j) e += wj[j] * std::min(horizon_[j], theta) / theta;
      return e;
    };
    for (int k = 0; k < N; ++k) {
      const double shape = s.a0 + count[k];
      const double upper = count[k] > 0.0 ? 1.0 / max_lag[k] : stats::kInf;
      const double proposal = 1.0 / stats::sample_truncated_gamma(shape, s.b0, 0.0, upper, rng);
      const double log_ratio = -s.a * s.weights[k] * (edge_share(proposal) - edge_share(s.atoms[k]));
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) s.atoms[k] = proposal;
      atom_acc_.record(accept, false);
    }

    // Sticks: joint proposal from the conjugate beta updates, same correction.
    std::vector<double> E(N);
    for (int k = 0; k < N; ++k) E[k] = edge_share(s.atoms[k]);
    std::vector<double> sticks(N, 1.0);
    double tail = 0.0;
    for (int k = N - 1; k >= 0; --k) {
      if (k < N - 1) sticks[k] = std::min(stats::sample_beta(1.0 + count[k], s.alpha0 + tail, rng), kStickMax);
      tail += count[k];
    }
    const auto weights = stick_weights(sticks);
    double delta = 0.0;
    for (int k = 0; k < N; ++k) delta += (weights[k] - s.weights[k]) * E[k];
    const bool accept = std::log(rng.uniform()) < -s.a * delta;
    if (accept) {
      s.sticks = sticks;
      s.weights = weights;
    }
    stick_acc_.record(accept, false);

    // alpha0 | sticks is gamma; b0 | atoms is gamma; a0 by Metropolis.
    double log_rest = 0.0;
    for (int k = 0; k < N - 1; ++k) log_rest += std::log1p(-s.sticks[k]);
    s.alpha0 = stats::sample_gamma(dp_.alpha0.gamma_shape() + N - 1, dp_.alpha0.rate() - log_rest, rng);
    auto atoms_target = [&](double a0, double b0) {
      double t = 0.0;
      for (double th : s.atoms) t += log_inv_gamma_pdf(th, a0, b0);
      return t;
    };
    mh_lognormal_step(
        s.a0, [&](double a0) { return atoms_target(a0, s.b0) + dp_.a0.log_pdf(a0); }, scales_["a0"], rng, adapt);
    double inv_sum = 0.0;
    for (double th : s.atoms) inv_sum += 1.0 / th;
    s.b0 = stats::sample_gamma(dp_.b0.gamma_shape() + N * s.a0, dp_.b0.rate() + inv_sum, rng);
    rebuild_density();
  }

  void update_gibbs(stats::SeededRng& rng) {
    const auto br = ground::summarize(parent_, excess_);
    state_.mu = ground::draw_mu(etas_priors_.mu, br.immigrants, T_, rng);
    state_.a = ground::draw_a(etas_priors_.a, br.offspring, ground::edge_mass(state_.b, excess_, G_), state_.b,
                              state_.psi, rng);
    state_.psi =
        ground::draw_psi(etas_priors_.psi, static_cast<double>(n_), mark_excess_, state_.a, state_.b, rng);
  }

  void update_b(stats::SeededRng& rng, bool adapt) {
    const auto br = ground::summarize(parent_, excess_);
    ground::step_b(state_.b, state_.a, state_.psi, br, excess_, G_, etas_priors_.b, scales_["b"], rng, adapt);
  }

  /// Lag density at x from the current atoms and weights.
  double density(double x) const {
    const auto it = std::upper_bound(sorted_atoms_.begin(), sorted_atoms_.end(), x);
    return suffix_[static_cast<std::size_t>(it - sorted_atoms_.begin())];
  }

  double log_likelihood() const {
    const auto br = ground::summarize(parent_, excess_);
    double ll = ground::log_lik_ground(state_.mu, state_.a, state_.b, state_.psi, T_, br, excess_, G_);
    for (std::size_t i = 0; i < n_; ++i)
      if (parent_[i] != 0) ll += std::log(density(lag(i)));
    return ll;
  }

  Snapshot snapshot(long iteration) const {
    Snapshot s;
    s.iteration = iteration;
    s.scalars = {{"mu", state_.mu},
                 {"a", state_.a},
                 {"b", state_.b},
                 {"psi", state_.psi},
                 {"alpha0", state_.alpha0},
                 {"a0", state_.a0},
                 {"b0", state_.b0},
                 {"last_stick_mass", state_.weights.back()},
                 {"rho", etas_rho(state_.a, state_.b, state_.psi, pattern_.bounds.kappa0, stats::kInf, false)},
                 {"log_lik", log_likelihood()}};
    s.vectors["atoms"] = state_.atoms;
    s.vectors["weights"] = state_.weights;
    s.vectors["sticks"] = state_.sticks;
    s.parent = parent_;
    return s;
  }

  static SemiparState state_from_snapshot(const Snapshot& s) {
    SemiparState st;
    st.mu = s.scalar("mu");
    st.a = s.scalar("a");
    st.b = s.scalar("b");
    st.psi = s.scalar("psi");
    st.alpha0 = s.scalar("alpha0");
    st.a0 = s.scalar("a0");
    st.b0 = s.scalar("b0");
    st.atoms = s.vector("atoms");
    st.sticks = s.vector("sticks");
    st.weights = s.vector("weights");
    return st;
  }

  void restore(const Snapshot& s) { set_state(state_from_snapshot(s), s.parent); }

  void check_invariants() const {
    ensure<NumericalError>(valid_branching(parent_), "branching structure is invalid");
    ensure<NumericalError>(etas_stable(state_.a, state_.b, state_.psi), "stability constraint violated");
    double total = 0.0;
    for (double w : state_.weights) total += w;
    ensure<NumericalError>(std::abs(total - 1.0) < 1e-9, "stick weights do not sum to one");
    for (std::size_t i = 0; i < n_; ++i)
      if (parent_[i] != 0) ensure<NumericalError>(density(lag(i)) > 0.0, "offspring lag outside every atom");
  }

 private:
  static constexpr double kStickMax = 1.0 - 0x1.0p-53;

  double lag(std::size_t i) const { return pattern_.times[i] - pattern_.times[parent_[i] - 1]; }

  void rebuild_density() {
    const int N = static_cast<int>(state_.atoms.size());
    std::vector<int> order(N);
    for (int k = 0; k < N; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return state_.atoms[x] < state_.atoms[y]; });
    sorted_atoms_.resize(N);
    suffix_.assign(N + 1, 0.0);
    for (int r = 0; r < N; ++r) sorted_atoms_[r] = state_.atoms[order[r]];
    for (int r = N - 1; r >= 0; --r)
      suffix_[r] = suffix_[r + 1] + state_.weights[order[r]] / state_.atoms[order[r]];
    G_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) G_[j] = semipar_offspring_cdf(horizon_[j], state_.atoms, state_.weights);
  }

  MarkedPointPattern pattern_;
  EtasPriors etas_priors_;
  SemiparPriors dp_;
  std::size_t n_ = 0;
  double T_ = 0.0;
  std::vector<double> excess_, horizon_;
  double mark_excess_ = 0.0;
  SemiparState state_;
  std::vector<int> parent_;
  std::vector<int> alloc_;
  std::vector<double> sorted_atoms_, suffix_, G_;
  std::map<std::string, AdaptiveScale> scales_;
  AdaptiveScale atom_acc_, stick_acc_;
  std::vector<double> weights_;
};

}  // namespace mhp
