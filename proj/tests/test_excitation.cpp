#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mhp/excitation.hpp"
#include "mhp/stats.hpp"
#include "oracles.hpp"

using namespace mhp;

namespace {

const MarkBounds kBounds{4.0, 10.0};

WeightMatrix random_weights(int L, int M, std::uint64_t seed) {
  stats::SeededRng rng(seed, 0);
  WeightMatrix nu(L, M);
  for (double& v : nu.raw()) v = stats::sample_gamma(0.5, 4.0, rng);
  return nu;
}

}  // namespace

TEST(Excitation, BasisValues) {
  BasisGrid g{3, 4, 0.5, 1.5};
  // b_1 = M, b_m = M u^{(m-1)^d}.
  EXPECT_DOUBLE_EQ(basis_mark(7.0, 1, g, kBounds), 4.0);
  EXPECT_NEAR(basis_mark(7.0, 3, g, kBounds), 4.0 * std::pow(0.5, std::pow(2.0, 1.5)), 1e-14);
  std::vector<double> row(4);
  basis_row(0.5, g, row);
  for (int m = 1; m <= 4; ++m) EXPECT_NEAR(row[m - 1], basis_mark_u(0.5, m, 4, 1.5), 1e-14);
  EXPECT_THROW(basis_mark(4.0, 2, g, kBounds), ValidationError);
  EXPECT_THROW(basis_mark(7.0, 5, g, kBounds), ValidationError);
}

TEST(Excitation, CenteringMeasureTelescopes) {
  BasisGrid g{6, 3, 0.4, 1.0};
  GammaProcessHyper h{5.0, 0.7, 0.2};
  const auto H0 = h0_matrix(g, h);
  // sum_l H0(A_lm) = b2 (L theta)^b1 / M for every m.
  for (double V : H0.column_sums()) EXPECT_NEAR(V, 0.2 * std::pow(6 * 0.4, 0.7) / 3.0, 1e-14);
  EXPECT_THROW(h0_cell(7, 1, g, h), ValidationError);
}

TEST(Excitation, AlphaIsTheIntegralOfH) {
  BasisGrid g{5, 4, 0.3, 1.2};
  const auto nu = random_weights(5, 4, 1);
  for (double k : {4.2, 6.0, 9.7}) {
    const double q = oracle::integrate([&](double x) { return excitation_h(x, k, nu, g, kBounds); }, 0.0, stats::kInf);
    EXPECT_NEAR(alpha_of_kappa(k, nu, g, kBounds), q, 1e-8);
  }
}

TEST(Excitation, OffspringDensityNormalizesAndTailMatches) {
  BasisGrid g{8, 3, 0.2, 2.0};
  const auto nu = random_weights(8, 3, 2);
  for (double k : {4.5, 8.5}) {
    auto g_k = [&](double x) { return offspring_density(x, k, nu, g, kBounds); };
    EXPECT_NEAR(oracle::integrate(g_k, 0.0, stats::kInf), 1.0, 1e-8);
    double wsum = 0.0;
    for (double w : offspring_weights(k, nu, g, kBounds)) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    for (double x : {0.1, 1.0, 3.0}) {
      EXPECT_NEAR(tail_probability(x, k, nu, g, kBounds), oracle::integrate(g_k, x, stats::kInf), 1e-8);
    }
    EXPECT_NEAR(tail_probability(0.0, k, nu, g, kBounds), 1.0, 1e-14);
  }
  WeightMatrix zero(8, 3);
  EXPECT_THROW(offspring_weights(5.0, zero, g, kBounds), NumericalError);
}

TEST(Excitation, RhoMatchesQuadratureUnderBetaMarks) {
  BasisGrid g{4, 5, 0.5, 1.3};
  const auto nu = random_weights(4, 5, 3);
  MarkDensityParams mk{1.4, 3.2};
  auto f = [&](double k) {
    const double u = kBounds.u(k);
    return alpha_of_kappa(k, nu, g, kBounds) * std::exp(stats::log_beta_pdf(u, mk.a_beta, mk.b_beta)) / kBounds.width();
  };
  EXPECT_NEAR(rho(nu, g, mk), oracle::integrate(f, 4.0, 10.0, 1e-13), 1e-9);
}

TEST(Excitation, PriorMomentsMatchMonteCarlo) {
  BasisGrid g{10, 5, 0.1, 1.0};
  GammaProcessHyper h{3.0, 0.7, 0.2};
  const auto H0 = h0_matrix(g, h);
  stats::SeededRng rng(4, 0);
  const std::vector<double> ks = {4.5, 7.0, 9.9};
  std::vector<oracle::MeanSe> mean(ks.size()), var(ks.size());
  const int n = 20000;
  std::vector<std::vector<double>> draws(ks.size());
  for (int r = 0; r < n; ++r) {
    WeightMatrix nu(g.L, g.M);
    for (int l = 1; l <= g.L; ++l)
      for (int m = 1; m <= g.M; ++m) nu(l, m) = stats::sample_gamma(h.c0 * H0(l, m), h.c0, rng);
    for (std::size_t i = 0; i < ks.size(); ++i) draws[i].push_back(alpha_of_kappa(ks[i], nu, g, kBounds));
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto mom = prior_alpha_moments(ks[i], g, h, kBounds);
    for (double a : draws[i]) mean[i].add(a);
    for (double a : draws[i]) var[i].add((a - mom.mean) * (a - mom.mean));
    EXPECT_LT(oracle::z_score(mean[i], mom.mean), 4.0) << ks[i];
    EXPECT_LT(oracle::z_score(var[i], mom.variance), 4.0) << ks[i];
  }
}

TEST(Excitation, NormalizerMatchesQuadrature) {
  BasisGrid g{4, 3, 0.7, 1.0};
  MarkedPointPattern p{{0.5, 1.2, 4.9}, {4.5, 9.0, 6.0}, 5.0, kBounds};
  const auto K = k_matrix(g, p);
  for (int l = 1; l <= 4; ++l) {
    for (int m = 1; m <= 3; ++m) {
      double ref = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double mass = oracle::integrate(
            [&](double s) { return stats::erlang_pdf(s, l, 1.0 / g.theta); }, 0.0, p.window_end - p.times[j]);
        ref += basis_mark(p.marks[j], m, g, kBounds) * mass;
      }
      EXPECT_NEAR(K(l, m), ref, 1e-10);
      EXPECT_NEAR(k_lm(l, m, g, p), ref, 1e-10);
    }
  }
}

TEST(Excitation, Grids) {
  const auto kg = kappa_grid(kBounds, 20);
  ASSERT_EQ(kg.size(), 20u);
  EXPECT_DOUBLE_EQ(kg[0], 4.15);
  EXPECT_DOUBLE_EQ(kg[19], 9.85);
  const auto lg = lag_grid(BasisGrid{16, 2, 0.5, 1.0}, 10);
  EXPECT_DOUBLE_EQ(lg.back(), 16 * 0.5 + 2 * 0.5 * 4);
  EXPECT_GT(lg.front(), 0.0);
}
