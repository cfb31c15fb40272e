#include <gtest/gtest.h>

#include <cmath>

#include "mhp/baselines.hpp"
#include "oracles.hpp"

using namespace mhp;

TEST(Etas, TruncatedRhoValues) {
  EXPECT_NEAR(etas_rho(0.47, 0.5, 1.0, 4.0, 10.0, true), 0.8954, 1e-3);
  EXPECT_NEAR(etas_rho(0.32, 0.5, 0.6, 4.0, 10.0, true), 0.8906, 1e-3);
}

TEST(Etas, RhoMatchesQuadrature) {
  for (auto [a, b, psi] : {std::tuple{0.47, 0.5, 1.0}, {0.32, 0.5, 0.6}, {0.1, 1.2, 2.0}}) {
    auto f = [&](double k) { return etas_alpha(k, a, b, 4.0) * stats::trunc_exp_pdf(k, psi, 4.0, 10.0); };
    EXPECT_NEAR(etas_rho(a, b, psi, 4.0, 10.0, true), oracle::integrate(f, 4.0, 10.0), 1e-10);
    // Log space: alpha grows and the density decays without bound.
    auto g = [&](double k) {
      return std::exp(std::log(a) + b * (k - 4.0) + stats::log_trunc_exp_pdf(k, psi, 4.0, stats::kInf));
    };
    EXPECT_NEAR(etas_rho(a, b, psi, 4.0, 10.0, false), oracle::integrate(g, 4.0, stats::kInf), 1e-9);
  }
  EXPECT_THROW(etas_rho(0.3, 1.0, 1.0, 4.0, 10.0, true), ValidationError);
}

TEST(Etas, StabilityRegion) {
  EXPECT_TRUE(etas_stable(0.47, 0.5, 1.0));
  EXPECT_FALSE(etas_stable(0.6, 0.5, 1.0));
  EXPECT_FALSE(etas_stable(0.1, 1.0, 0.9));
}

TEST(Etas, ExcitationIntegratesToAlpha) {
  EtasState s{0.01, 0.3, 0.8, 1.5, 2.5, 0.2};
  const double q = oracle::integrate([&](double x) { return etas_excitation(x, 6.0, s, 4.0); }, 0.0, stats::kInf);
  EXPECT_NEAR(q, etas_alpha(6.0, 0.3, 0.8, 4.0), 1e-8);
}

TEST(Semipar, DensityNormalizesAndCdfIsItsIntegral) {
  std::vector<double> atoms = {0.5, 2.0, 7.0};
  std::vector<double> weights = {0.2, 0.5, 0.3};
  const double mass = oracle::integrate_pieces(
      [&](double x) { return semipar_offspring_density(x, atoms, weights); }, {0.0, 0.5, 2.0, 7.0, 10.0});
  EXPECT_NEAR(mass, 1.0, 1e-12);
  for (double x : {0.25, 1.0, 5.0, 9.0}) {
    std::vector<double> pts = {0.0};
    for (double a : atoms)
      if (a < x) pts.push_back(a);
    pts.push_back(x);
    const double q = oracle::integrate_pieces(
        [&](double s) { return semipar_offspring_density(s, atoms, weights); }, pts);
    EXPECT_NEAR(semipar_offspring_cdf(x, atoms, weights), q, 1e-12);
  }
  EXPECT_EQ(semipar_offspring_cdf(0.0, atoms, weights), 0.0);
  EXPECT_EQ(semipar_offspring_cdf(100.0, atoms, weights), 1.0);
  // Non-increasing step function.
  for (double x = 0.0; x < 8.0; x += 0.1)
    EXPECT_GE(semipar_offspring_density(x, atoms, weights), semipar_offspring_density(x + 0.1, atoms, weights));
}
