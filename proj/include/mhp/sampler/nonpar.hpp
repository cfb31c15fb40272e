#pragma once

// Gibbs sampler for the nonparametric excitation model with a constant or
// Erlang-mixture background.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mhp/background.hpp"
#include "mhp/catalog.hpp"
#include "mhp/excitation.hpp"
#include "mhp/priors.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/stats.hpp"

namespace mhp {

struct NonparState {
  BasisGrid grid;
  GammaProcessHyper hyper;
  WeightMatrix nu;
  MarkDensityParams mark;
  Background background = ConstantBackground{};
  std::vector<int> parent;
};

class NonparSampler {
 public:
  NonparSampler(const MarkedPointPattern& pattern, const NonparPriors& priors, bool mixture_background)
      : priors_(priors), mixture_(mixture_background) {
    ensure(priors.L >= 1 && priors.M >= 2, "nonparametric model needs L >= 1 and M >= 2");
    ensure(!mixture_ || priors.J >= 1, "mixture background needs J >= 1");
    for (const char* name : {"theta", "d", "c0", "b1", "b2", "a_beta", "b_beta"}) scales_[name] = {};
    if (mixture_) {
      for (const char* name : {"phi", "e0", "b_g0"}) scales_[name] = {};
    } else if (!priors_.mu.is_gamma_family()) {
      scales_["mu"] = {};
    }
    z_cut_ = lag_cutoff(priors.L);
    set_data(pattern);
    set_state(initial_state());
  }

  /// Prior means (medians for Lomax priors), nu at its centering measure,
  /// every event an immigrant.
  NonparState initial_state() const {
    NonparState s;
    s.grid = {priors_.L, priors_.M, priors_.theta.initial(), priors_.d.initial()};
    s.hyper = {priors_.c0.initial(), priors_.b1.initial(), priors_.b2.initial()};
    s.nu = h0_matrix(s.grid, s.hyper);
    s.mark = {priors_.a_beta.initial(), priors_.b_beta.initial()};
    if (mixture_) {
      ErlangMixtureBackground bg;
      bg.J = priors_.J;
      bg.phi = priors_.phi.initial();
      bg.e0 = priors_.e0.initial();
      bg.b_g0 = priors_.b_g0.initial();
      bg.omega.assign(bg.J, bg.phi / bg.b_g0);
      s.background = bg;
    } else {
      s.background = ConstantBackground{priors_.mu.initial()};
    }
    s.parent.assign(n_, 0);
    return s;
  }

  /// Replaces the data; the current state must be reset afterwards.
  void set_data(const MarkedPointPattern& pattern) {
    pattern.validate();
    ensure(std::isfinite(pattern.bounds.kappa_max), "nonparametric model needs a bounded mark space");
    pattern_ = pattern;
    n_ = pattern.size();
    T_ = pattern.window_end;
    u_.resize(n_);
    sum_log_u_ = sum_log_1mu_ = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      u_[j] = pattern.bounds.u(pattern.marks[j]);
      sum_log_u_ += std::log(u_[j]);
      sum_log_1mu_ += std::log1p(-u_[j]);
    }
  }

  void set_state(const NonparState& s) {
    s.grid.validate();
    ensure(s.grid.L == priors_.L && s.grid.M == priors_.M, "state basis size differs from the priors");
    ensure(s.nu.L() == s.grid.L && s.nu.M() == s.grid.M, "weight matrix has the wrong shape");
    ensure(s.parent.size() == n_ && valid_branching(s.parent), "invalid branching structure");
    ensure(std::holds_alternative<ErlangMixtureBackground>(s.background) == mixture_,
           "background variant differs from the sampler configuration");
    state_ = s;
    rebuild();
  }

  const NonparState& state() const { return state_; }
  const MarkedPointPattern& pattern() const { return pattern_; }
  std::map<std::string, AdaptiveScale>& scales() { return scales_; }
  const std::map<std::string, AdaptiveScale>& scales() const { return scales_; }
  const std::vector<int>& xi_l() const { return xi_l_; }
  const std::vector<int>& xi_m() const { return xi_m_; }
  const std::vector<int>& zeta() const { return zeta_; }
  const std::vector<double>& cell_counts() const { return counts_; }

  /// One systematic-scan sweep: y, xi, zeta, nu, omega, Metropolis scalars,
  /// mark density parameters, background scalars.
  void sweep(stats::SeededRng& rng, bool adapt, std::map<std::string, double>* timings = nullptr) {
    BlockTimer t(timings);
    t.time("branching", [&] { update_branching(rng); });
    t.time("xi", [&] { update_xi(rng); });
    t.time("background_latent", [&] { update_background_latent(rng); });
    t.time("nu", [&] { update_nu(rng); });
    t.time("mh_block", [&] { update_mh_block(rng, adapt); });
    t.time("mark", [&] { update_mark_params(rng, adapt); });
    t.time("background_scalars", [&] { update_background_scalars(rng, adapt); });
  }

  // Draws every y_i from its discrete full conditional given all parameters.
  void update_branching(stats::SeededRng& rng) {
    const int L = state_.grid.L;
    const double theta = state_.grid.theta;
    std::vector<double> pdf(L);
    for (std::size_t i = 1; i < n_; ++i) {
      weights_.clear();
      weights_.push_back(mu_at_[i]);
      for (std::size_t k = i; k-- > 0;) {
        const double lag = pattern_.times[i] - pattern_.times[k];
        if (lag / theta > z_cut_) break;
        erlang_pdf_row(lag, theta, pdf);
        const double* b = &B_[k * L];
        double w = 0.0;
        for (int l = 0; l < L; ++l) w += b[l] * pdf[l];
        weights_.push_back(w);
      }
      double total = 0.0;
      for (double w : weights_) total += w;
      std::size_t pick;
      if (total > 1e-280 && std::isfinite(total)) {
        pick = stats::sample_discrete(weights_, rng);
      } else {
        // Every candidate is below double range; redo the whole row in log space.
        weights_.assign(1, std::log(mu_at_[i]));
        for (std::size_t k = i; k-- > 0;) weights_.push_back(log_excitation(k, i));
        pick = stats::sample_discrete_log(weights_, rng, scratch_);
      }
      state_.parent[i] = pick == 0 ? 0 : static_cast<int>(i - pick) + 1;
    }
    rebuild_offspring();
  }

  // Draws the basis cell (l, m) for each offspring given its parent.
  void update_xi(stats::SeededRng& rng) {
    const int L = state_.grid.L, M = state_.grid.M;
    std::fill(counts_.begin(), counts_.end(), 0.0);
    xi_l_.assign(n_, 0);
    xi_m_.assign(n_, 0);
    std::vector<double> wl(L), wm(M);
    for (std::size_t r = 0; r < offspring_.size(); ++r) {
      const std::size_t i = offspring_[r];
      const std::size_t k = static_cast<std::size_t>(state_.parent[i] - 1);
      const double* pdf = &lag_pdf_[r * L];
      double total = 0.0;
      for (int l = 0; l < L; ++l) total += wl[l] = B_[k * L + l] * pdf[l];
      std::size_t l;
      if (total > 1e-280 && std::isfinite(total)) {
        l = stats::sample_discrete(wl, rng);
      } else {
        const double lag = pattern_.times[i] - pattern_.times[k];
        for (int q = 0; q < L; ++q)
          wl[q] = std::log(B_[k * L + q]) + stats::log_erlang_pdf(lag, q + 1, 1.0 / state_.grid.theta);
        l = stats::sample_discrete_log(wl, rng, scratch_);
      }
      for (int m = 0; m < M; ++m) wm[m] = state_.nu.raw()[l * M + m] * basis_[k * M + m];
      const std::size_t m = stats::sample_discrete(wm, rng);
      xi_l_[i] = static_cast<int>(l) + 1;
      xi_m_[i] = static_cast<int>(m) + 1;
      counts_[l * M + m] += 1.0;
    }
  }

  // nu_lm ~ Ga(c0 H0_lm + n_lm, c0 + K_lm).
  void update_nu(stats::SeededRng& rng) {
    const int L = state_.grid.L, M = state_.grid.M;
    const double c0 = state_.hyper.c0;
    auto nu = state_.nu.raw();
    for (int l = 0; l < L; ++l)
      for (int m = 0; m < M; ++m)
        nu[l * M + m] = stats::sample_gamma(c0 * H0_[l] + counts_[l * M + m], c0 + K_[l * M + m], rng);
    compute_B(basis_, B_);
  }

  void update_background(stats::SeededRng& rng, bool adapt) {
    update_background_latent(rng);
    update_background_scalars(rng, adapt);
  }

  // Mixture only: zeta for immigrants, then omega_j ~ Ga(e0 phi / bG0 + n_j, e0 + S_j).
  void update_background_latent(stats::SeededRng& rng) {
    zeta_.assign(n_, 0);
    if (!mixture_) return;
    auto& bg = std::get<ErlangMixtureBackground>(state_.background);
    const int J = bg.J;
    std::vector<double> pdf(J), w(J), nj(J, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (state_.parent[i] != 0) continue;
      erlang_pdf_row(pattern_.times[i], bg.phi, pdf);
      double total = 0.0;
      for (int j = 0; j < J; ++j) total += w[j] = bg.omega[j] * pdf[j];
      std::size_t pick;
      if (total > 1e-280 && std::isfinite(total)) {
        pick = stats::sample_discrete(w, rng);
      } else {
        for (int j = 0; j < J; ++j)
          w[j] = std::log(bg.omega[j]) + stats::log_erlang_pdf(pattern_.times[i], j + 1, 1.0 / bg.phi);
        pick = stats::sample_discrete_log(w, rng, scratch_);
      }
      zeta_[i] = static_cast<int>(pick) + 1;
      nj[pick] += 1.0;
    }
    const auto S = s_vector(J, bg.phi, T_);
    const double shape = bg.e0 * bg.phi / bg.b_g0;
    for (int j = 0; j < J; ++j) bg.omega[j] = stats::sample_gamma(shape + nj[j], bg.e0 + S[j], rng);
    rebuild_mu();
  }

  // Constant mu: Gibbs draw. Mixture: Metropolis steps for phi, e0 and bG0.
  void update_background_scalars(stats::SeededRng& rng, bool adapt) {
    const double NI = static_cast<double>(immigrant_count(state_.parent));
    if (!mixture_) {
      auto& mu = std::get<ConstantBackground>(state_.background).mu;
      if (priors_.mu.is_gamma_family()) {
        mu = stats::sample_gamma(priors_.mu.gamma_shape() + NI, priors_.mu.rate() + T_, rng);
      } else {
        mh_lognormal_step(
            mu, [&](double x) { return NI * std::log(x) - x * T_ + priors_.mu.log_pdf(x); }, scales_["mu"], rng,
            adapt);
      }
      rebuild_mu();
      return;
    }
    auto& bg = std::get<ErlangMixtureBackground>(state_.background);
    auto omega_prior = [&](double e0, double phi, double bg0) {
      const double shape = e0 * phi / bg0;
      double s = 0.0;
      for (double w : bg.omega) s += stats::log_gamma_pdf(w, shape, e0);
      return s;
    };
    std::vector<double> pdf(bg.J);
    auto phi_target = [&](double phi) {
      const auto S = s_vector(bg.J, phi, T_);
      double s = 0.0;
      for (int j = 0; j < bg.J; ++j) s -= bg.omega[j] * S[j];
      for (std::size_t i = 0; i < n_; ++i) {
        if (state_.parent[i] != 0) continue;
        erlang_pdf_row(pattern_.times[i], phi, pdf);
        double mu = 0.0;
        for (int j = 0; j < bg.J; ++j) mu += bg.omega[j] * pdf[j];
        s += mu > 0.0 ? std::log(mu) : log_mixture_mu(pattern_.times[i], phi, bg.omega);
      }
      return s + omega_prior(bg.e0, phi, bg.b_g0) + priors_.phi.log_pdf(phi);
    };
    mh_lognormal_step(bg.phi, phi_target, scales_["phi"], rng, adapt);
    mh_lognormal_step(
        bg.e0, [&](double e0) { return omega_prior(e0, bg.phi, bg.b_g0) + priors_.e0.log_pdf(e0); },
        scales_["e0"], rng, adapt);
    mh_lognormal_step(
        bg.b_g0, [&](double b) { return omega_prior(bg.e0, bg.phi, b) + priors_.b_g0.log_pdf(b); },
        scales_["b_g0"], rng, adapt);
    rebuild_mu();
  }

  // Log-normal Metropolis steps for theta, d, c0, b1, b2.
  void update_mh_block(stats::SeededRng& rng, bool adapt) {
    auto& g = state_.grid;
    auto& h = state_.hyper;
    const int L = g.L, M = g.M;

    std::vector<double> cdf, K, lag_pdf, H0(L);
    auto theta_target = [&](double theta) {
      compute_cdf(theta, cdf);
      compute_K(basis_, cdf, K);
      compute_lag_pdf(theta, lag_pdf);
      compute_H0(theta, h.b1, h.b2, H0);
      return -dot(state_.nu.raw(), K) + offspring_loglik(B_, lag_pdf, theta) + nu_log_prior(h.c0, H0) +
             priors_.theta.log_pdf(theta);
    };
    if (mh_lognormal_step(g.theta, theta_target, scales_["theta"], rng, adapt)) {
      compute_cdf(g.theta, cdf_);
      compute_K(basis_, cdf_, K_);
      compute_lag_pdf(g.theta, lag_pdf_);
      compute_H0(g.theta, h.b1, h.b2, H0_);
    }

    std::vector<double> basis, B;
    auto d_target = [&](double d) {
      compute_basis(d, basis);
      compute_B(basis, B);
      compute_K(basis, cdf_, K);
      return -dot(state_.nu.raw(), K) + offspring_loglik(B, lag_pdf_, g.theta) + priors_.d.log_pdf(d);
    };
    if (mh_lognormal_step(g.d, d_target, scales_["d"], rng, adapt)) {
      compute_basis(g.d, basis_);
      compute_B(basis_, B_);
      compute_K(basis_, cdf_, K_);
    }

    mh_lognormal_step(
        h.c0, [&](double c0) { return nu_log_prior(c0, H0_) + priors_.c0.log_pdf(c0); }, scales_["c0"], rng,
        adapt);
    auto b1_target = [&](double b1) {
      compute_H0(g.theta, b1, h.b2, H0);
      return nu_log_prior(h.c0, H0) + priors_.b1.log_pdf(b1);
    };
    if (mh_lognormal_step(h.b1, b1_target, scales_["b1"], rng, adapt)) compute_H0(g.theta, h.b1, h.b2, H0_);
    auto b2_target = [&](double b2) {
      compute_H0(g.theta, h.b1, b2, H0);
      return nu_log_prior(h.c0, H0) + priors_.b2.log_pdf(b2);
    };
    if (mh_lognormal_step(h.b2, b2_target, scales_["b2"], rng, adapt)) compute_H0(g.theta, h.b1, h.b2, H0_);
    (void)L;
    (void)M;
  }

  // Rescaled beta mark density shapes.
  void update_mark_params(stats::SeededRng& rng, bool adapt) {
    auto& mk = state_.mark;
    const double n = static_cast<double>(n_);
    auto target = [&](double a, double b) {
      return (a - 1.0) * sum_log_u_ + (b - 1.0) * sum_log_1mu_ - n * stats::log_beta_fn(a, b);
    };
    mh_lognormal_step(
        mk.a_beta, [&](double a) { return target(a, mk.b_beta) + priors_.a_beta.log_pdf(a); }, scales_["a_beta"],
        rng, adapt);
    mh_lognormal_step(
        mk.b_beta, [&](double b) { return target(mk.a_beta, b) + priors_.b_beta.log_pdf(b); }, scales_["b_beta"],
        rng, adapt);
  }

  /// Augmented log-likelihood of times, marks and branching given parameters.
  double log_likelihood() const {
    double ll = -integrated_background(state_.background, T_) - dot(state_.nu.raw(), K_);
    for (std::size_t i = 0; i < n_; ++i)
      if (state_.parent[i] == 0) ll += std::log(mu_at_[i]);
    ll += offspring_loglik(B_, lag_pdf_, state_.grid.theta);
    const auto& mk = state_.mark;
    ll += (mk.a_beta - 1.0) * sum_log_u_ + (mk.b_beta - 1.0) * sum_log_1mu_ -
          static_cast<double>(n_) * (stats::log_beta_fn(mk.a_beta, mk.b_beta) + std::log(pattern_.bounds.width()));
    return ll;
  }

  double current_rho() const { return rho(state_.nu, state_.grid, state_.mark); }

  Snapshot snapshot(long iteration) const {
    Snapshot s;
    s.iteration = iteration;
    s.scalars = {{"theta", state_.grid.theta}, {"d", state_.grid.d},        {"c0", state_.hyper.c0},
                 {"b1", state_.hyper.b1},       {"b2", state_.hyper.b2},      {"a_beta", state_.mark.a_beta},
                 {"b_beta", state_.mark.b_beta}, {"rho", current_rho()}, {"log_lik", log_likelihood()}};
    const auto nu = state_.nu.raw();
    s.vectors["nu"].assign(nu.begin(), nu.end());
    if (mixture_) {
      const auto& bg = std::get<ErlangMixtureBackground>(state_.background);
      s.scalars["phi"] = bg.phi;
      s.scalars["e0"] = bg.e0;
      s.scalars["b_g0"] = bg.b_g0;
      s.vectors["omega"] = bg.omega;
    } else {
      s.scalars["mu"] = std::get<ConstantBackground>(state_.background).mu;
    }
    s.parent = state_.parent;
    return s;
  }

  static NonparState state_from_snapshot(const Snapshot& s, int L, int M) {
    NonparState st;
    st.grid = {L, M, s.scalar("theta"), s.scalar("d")};
    st.hyper = {s.scalar("c0"), s.scalar("b1"), s.scalar("b2")};
    st.mark = {s.scalar("a_beta"), s.scalar("b_beta")};
    st.nu = WeightMatrix(L, M);
    const auto& nu = s.vector("nu");
    ensure(nu.size() == static_cast<std::size_t>(L) * M, "snapshot weight matrix has the wrong size");
    std::copy(nu.begin(), nu.end(), st.nu.raw().begin());
    if (s.has("omega")) {
      ErlangMixtureBackground bg;
      bg.omega = s.vector("omega");
      bg.J = static_cast<int>(bg.omega.size());
      bg.phi = s.scalar("phi");
      bg.e0 = s.scalar("e0");
      bg.b_g0 = s.scalar("b_g0");
      st.background = bg;
    } else {
      st.background = ConstantBackground{s.scalar("mu")};
    }
    st.parent = s.parent;
    return st;
  }

  void restore(const Snapshot& s) { set_state(state_from_snapshot(s, priors_.L, priors_.M)); }

  /// Structural checks that must hold after every sweep.
  void check_invariants() const {
    ensure<NumericalError>(valid_branching(state_.parent), "branching structure is invalid");
    double total = 0.0;
    for (double c : counts_) total += c;
    ensure<NumericalError>(total == static_cast<double>(offspring_.size()), "cell counts differ from offspring count");
    for (std::size_t i = 0; i < n_; ++i) {
      ensure<NumericalError>((xi_l_.empty() || (xi_l_[i] != 0) == (state_.parent[i] != 0)),
                             "xi is not defined exactly on the offspring");
      if (mixture_)
        ensure<NumericalError>(zeta_.empty() || (zeta_[i] != 0) == (state_.parent[i] == 0),
                               "zeta is not defined exactly on the immigrants");
    }
    for (double v : state_.nu.raw()) ensure<NumericalError>(v > 0.0 && std::isfinite(v), "non-positive weight");
  }

 private:
  static double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

  // Lag (in units of theta) beyond which every Erlang term is below e^{-750}.
  static double lag_cutoff(int L) {
    double z = std::max(1.0, L - 1.0);
    while ((L - 1) * std::log(z) - z - std::lgamma(static_cast<double>(L)) >= -750.0) z += 1.0;
    return z;
  }

  void rebuild() {
    compute_basis(state_.grid.d, basis_);
    compute_B(basis_, B_);
    compute_cdf(state_.grid.theta, cdf_);
    compute_K(basis_, cdf_, K_);
    H0_.resize(state_.grid.L);
    compute_H0(state_.grid.theta, state_.hyper.b1, state_.hyper.b2, H0_);
    counts_.assign(static_cast<std::size_t>(state_.grid.L) * state_.grid.M, 0.0);
    xi_l_.clear();
    xi_m_.clear();
    zeta_.clear();
    rebuild_mu();
    rebuild_offspring();
  }

  void rebuild_offspring() {
    offspring_.clear();
    for (std::size_t i = 0; i < n_; ++i)
      if (state_.parent[i] != 0) offspring_.push_back(i);
    compute_lag_pdf(state_.grid.theta, lag_pdf_);
  }

  void rebuild_mu() {
    mu_at_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) mu_at_[i] = mu_of_t(pattern_.times[i], state_.background);
  }

  void compute_basis(double d, std::vector<double>& out) const {
    const int M = state_.grid.M;
    BasisGrid g = state_.grid;
    g.d = d;
    out.resize(n_ * M);
    for (std::size_t j = 0; j < n_; ++j) basis_row(u_[j], g, std::span<double>(&out[j * M], M));
  }

  void compute_B(const std::vector<double>& basis, std::vector<double>& out) const {
    const int L = state_.grid.L, M = state_.grid.M;
    const auto nu = state_.nu.raw();
    out.assign(n_ * L, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for (int l = 0; l < L; ++l) {
        double s = 0.0;
        for (int m = 0; m < M; ++m) s += nu[l * M + m] * basis[j * M + m];
        out[j * L + l] = s;
      }
  }

  void compute_cdf(double theta, std::vector<double>& out) const {
    const int L = state_.grid.L;
    out.resize(n_ * L);
    std::vector<double> terms(L);
    for (std::size_t j = 0; j < n_; ++j) {
      stats::poisson_terms((T_ - pattern_.times[j]) / theta, terms);
      double upper = 0.0;
      for (int l = 0; l < L; ++l) {
        upper += terms[l];
        out[j * L + l] = std::max(0.0, 1.0 - upper);
      }
    }
  }

  void compute_K(const std::vector<double>& basis, const std::vector<double>& cdf, std::vector<double>& out) const {
    const int L = state_.grid.L, M = state_.grid.M;
    out.assign(static_cast<std::size_t>(L) * M, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for (int l = 0; l < L; ++l) {
        const double c = cdf[j * L + l];
        for (int m = 0; m < M; ++m) out[l * M + m] += basis[j * M + m] * c;
      }
  }

  void compute_H0(double theta, double b1, double b2, std::vector<double>& out) const {
    const int L = state_.grid.L;
    out.resize(L);
    double prev = 0.0;
    for (int l = 1; l <= L; ++l) {
      const double cur = std::pow(l * theta, b1);
      out[l - 1] = (cur - prev) * b2 / state_.grid.M;
      prev = cur;
    }
  }

  void compute_lag_pdf(double theta, std::vector<double>& out) const {
    const int L = state_.grid.L;
    out.resize(offspring_.size() * L);
    for (std::size_t r = 0; r < offspring_.size(); ++r) {
      const std::size_t i = offspring_[r];
      const double lag = pattern_.times[i] - pattern_.times[state_.parent[i] - 1];
      erlang_pdf_row(lag, theta, std::span<double>(&out[r * L], L));
    }
  }

  // log sum_l B_kl ga(t_i - t_k | l, 1/theta), without underflow.
  double log_excitation(std::size_t k, std::size_t i, const std::vector<double>& B, double theta) const {
    const int L = state_.grid.L;
    const double lag = pattern_.times[i] - pattern_.times[k];
    std::vector<double> terms(L);
    for (int l = 0; l < L; ++l) terms[l] = std::log(B[k * L + l]) + stats::log_erlang_pdf(lag, l + 1, 1.0 / theta);
    return stats::log_sum_exp(terms);
  }
  double log_excitation(std::size_t k, std::size_t i) const { return log_excitation(k, i, B_, state_.grid.theta); }

  double offspring_loglik(const std::vector<double>& B, const std::vector<double>& lag_pdf, double theta) const {
    const int L = state_.grid.L;
    double s = 0.0;
    for (std::size_t r = 0; r < offspring_.size(); ++r) {
      const std::size_t i = offspring_[r];
      const std::size_t k = static_cast<std::size_t>(state_.parent[i] - 1);
      double v = 0.0;
      for (int l = 0; l < L; ++l) v += B[k * L + l] * lag_pdf[r * L + l];
      s += v > 1e-280 ? std::log(v) : log_excitation(k, i, B, theta);
    }
    return s;
  }

  double nu_log_prior(double c0, const std::vector<double>& H0) const {
    const int L = state_.grid.L, M = state_.grid.M;
    const auto nu = state_.nu.raw();
    double s = 0.0;
    for (int l = 0; l < L; ++l) {
      const double shape = c0 * H0[l];
      if (!(shape > 0.0)) return stats::kNegInf;
      const double norm = shape * std::log(c0) - std::lgamma(shape);
      for (int m = 0; m < M; ++m) {
        const double v = nu[l * M + m];
        s += norm + (shape - 1.0) * std::log(v) - c0 * v;
      }
    }
    return s;
  }

  double log_mixture_mu(double t, double phi, const std::vector<double>& omega) const {
    std::vector<double> terms(omega.size());
    for (std::size_t j = 0; j < omega.size(); ++j)
      terms[j] = std::log(omega[j]) + stats::log_erlang_pdf(t, static_cast<int>(j) + 1, 1.0 / phi);
    return stats::log_sum_exp(terms);
  }

  MarkedPointPattern pattern_;
  NonparPriors priors_;
  bool mixture_;
  std::size_t n_ = 0;
  double T_ = 0.0;
  double z_cut_ = 0.0;
  std::vector<double> u_;
  double sum_log_u_ = 0.0;
  double sum_log_1mu_ = 0.0;

  NonparState state_;
  std::map<std::string, AdaptiveScale> scales_;

  std::vector<double> basis_;    // n x M
  std::vector<double> B_;        // n x L, sum_m nu_lm b_m(k_j)
  std::vector<double> cdf_;      // n x L, Erlang CDF at T - t_j
  std::vector<double> K_;        // L x M
  std::vector<double> H0_;       // L, centering mass per cell (same for every m)
  std::vector<double> mu_at_;    // n
  std::vector<std::size_t> offspring_;
  std::vector<double> lag_pdf_;  // |offspring| x L
  std::vector<double> counts_;   // L x M
  std::vector<int> xi_l_, xi_m_, zeta_;
  std::vector<double> weights_, scratch_;
};

}  // namespace mhp
