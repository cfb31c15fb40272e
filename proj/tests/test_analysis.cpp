#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mhp/analysis.hpp"
#include "oracles.hpp"

using namespace mhp;

TEST(IntervalScore, Fixtures) {
  EXPECT_EQ(interval_score(113, 377, 118, 0.05), 264.0);
  EXPECT_EQ(interval_score(120, 211, 118, 0.05), 171.0);
  EXPECT_EQ(interval_score(100, 150, 120, 0.05), 50.0);
  EXPECT_EQ(interval_score(100, 150, 160, 0.1), 50.0 + 20.0 * 10.0);
  EXPECT_THROW(interval_score(1, 2, 1, 0.0), ValidationError);
  EXPECT_THROW(interval_score(1, 2, 1, 1.0), ValidationError);
  EXPECT_THROW(interval_score(3, 2, 1, 0.5), ValidationError);
}

TEST(IntervalScore, ContinuousAcrossBreakpoints) {
  const double l = 10, u = 20, a = 0.2;
  for (double y : {l, u}) {
    EXPECT_NEAR(interval_score(l, u, y - 1e-9, a), interval_score(l, u, y, a), 1e-7);
    EXPECT_NEAR(interval_score(l, u, y + 1e-9, a), interval_score(l, u, y, a), 1e-7);
  }
}

TEST(Misclassification, HandCounts) {
  using E = EventLabel;
  const std::vector<EventLabel> truth = {E::main, E::aftershock, E::aftershock, E::main};
  EXPECT_DOUBLE_EQ(misclassification_rate({0, 1, 0, 2}, truth), 0.5);
  EXPECT_DOUBLE_EQ(misclassification_rate({0, 1, 2, 0}, truth), 0.0);
  // All-immigrant branching: rate equals the aftershock share.
  EXPECT_DOUBLE_EQ(misclassification_rate({0, 0, 0, 0}, truth), 0.5);
  // Only the zero/nonzero pattern matters.
  EXPECT_DOUBLE_EQ(misclassification_rate({0, 1, 1, 0}, truth), misclassification_rate({0, 1, 2, 0}, truth));

  const auto score = misclassification({{0, 1, 0, 2}, {0, 1, 2, 0}}, truth);
  EXPECT_DOUBLE_EQ(score.mean, 0.25);
  EXPECT_NEAR(score.sd, std::sqrt(0.125), 1e-15);
  EXPECT_THROW(misclassification({{0, 1}}, std::nullopt), ValidationError);
  EXPECT_THROW(misclassification({{0, 1}}, truth), ValidationError);
}

TEST(Quantile, MatchesSortBasedComputation) {
  stats::SeededRng rng(1, 0);
  std::vector<double> v(1001);
  for (double& x : v) x = stats::sample_normal(rng);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  // n - 1 = 1000, so these levels hit order statistics exactly.
  EXPECT_EQ(quantile(v, 0.025), sorted[25]);
  EXPECT_EQ(quantile(v, 0.975), sorted[975]);
  EXPECT_EQ(quantile(v, 0.0), sorted.front());
  EXPECT_EQ(quantile(v, 1.0), sorted.back());
  std::vector<double> w = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile(w, 0.5), 2.5);
  EXPECT_THROW(quantile({}, 0.5), ValidationError);
}

TEST(Forecast, OrderStatisticInterval) {
  std::vector<long> draws;
  for (long k = 0; k <= 100; ++k) draws.push_back(100 - k);
  const auto r = forecast_result(draws, 0.9, 40);
  EXPECT_EQ(r.lower, 5.0);
  EXPECT_EQ(r.upper, 95.0);
  EXPECT_DOUBLE_EQ(r.mean, 50.0);
  EXPECT_DOUBLE_EQ(*r.score, 90.0);
  const auto s = forecast_result(draws, 0.9, 0);
  EXPECT_DOUBLE_EQ(*s.score, 90.0 + 2.0 / 0.1 * 5.0);
  EXPECT_FALSE(forecast_result(draws, 0.9, std::nullopt).score.has_value());
  EXPECT_THROW(forecast_result({}, 0.9, 1), ValidationError);
}

namespace {

ChainOutput nonpar_chain(int copies, bool vary) {
  ChainOutput c;
  c.meta.model = ModelKind::nonpar;
  c.meta.L = 2;
  c.meta.M = 2;
  c.meta.bounds = {4.0, 10.0};
  c.meta.window_end = 100.0;
  for (int r = 0; r < copies; ++r) {
    Snapshot s;
    const double f = vary ? 1.0 + 0.1 * (r % 7) : 1.0;
    s.scalars = {{"theta", 0.5}, {"d", 1.0}, {"a_beta", 2.0}, {"b_beta", 3.0}, {"mu", 0.02 * f}, {"rho", 0.4 * f}};
    s.vectors["nu"] = {0.1 * f, 0.2, 0.05, 0.3 * f};
    c.snapshots.push_back(s);
  }
  return c;
}

}  // namespace

TEST(FunctionalSummary, ConstantChainHasZeroWidthBands) {
  const auto chain = nonpar_chain(5, false);
  for (auto kind : {FunctionalKind::alpha, FunctionalKind::background, FunctionalKind::mark_density}) {
    const auto t = functional_summary(chain, {kind, {4.5, 7.0, 9.5}, {}});
    ASSERT_EQ(t.rows.size(), 3u);
    for (const auto& r : t.rows) {
      EXPECT_EQ(r.lower, r.upper);
      EXPECT_EQ(r.mean, r.lower);
    }
  }
  const auto rho = functional_summary(chain, {FunctionalKind::rho, {}, {}});
  ASSERT_EQ(rho.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rho.rows[0].mean, 0.4);
}

TEST(FunctionalSummary, BandsOrderedAndMatchDirectEvaluation) {
  const auto chain = nonpar_chain(70, true);
  const auto t = functional_summary(chain, {FunctionalKind::offspring_density, {0.1, 0.5, 2.0}, {5.0, 8.5}});
  ASSERT_EQ(t.rows.size(), 6u);
  for (const auto& r : t.rows) {
    EXPECT_LE(r.lower, r.mean);
    EXPECT_LE(r.mean, r.upper);
  }
  // Recompute one point directly from the snapshots.
  std::vector<double> direct;
  for (const auto& s : chain.snapshots) {
    WeightMatrix nu(2, 2);
    std::copy(s.vector("nu").begin(), s.vector("nu").end(), nu.raw().begin());
    direct.push_back(offspring_density(0.5, 8.5, nu, {2, 2, 0.5, 1.0}, {4.0, 10.0}));
  }
  const auto& row = t.rows[4];
  EXPECT_EQ(row.kappa, 8.5);
  EXPECT_EQ(row.x, 0.5);
  EXPECT_DOUBLE_EQ(row.lower, quantile(direct, 0.025));
  EXPECT_DOUBLE_EQ(row.upper, quantile(direct, 0.975));

  const auto tail = functional_summary(chain, {FunctionalKind::tail_prob, {0.0, 1.0}, {6.0}});
  EXPECT_NEAR(tail.rows[0].mean, 1.0, 1e-14);

  const auto rho = functional_summary(chain, {FunctionalKind::rho, {}, {}});
  std::vector<double> rhos;
  for (const auto& s : chain.snapshots) rhos.push_back(s.scalar("rho"));
  EXPECT_DOUBLE_EQ(rho.rows[0].lower, quantile(rhos, 0.025));
}

TEST(FunctionalSummary, BaselineModels) {
  ChainOutput c;
  c.meta.model = ModelKind::etas;
  c.meta.bounds = {4.0, stats::kInf};
  Snapshot s;
  s.scalars = {{"mu", 0.02}, {"a", 0.4}, {"b", 0.5}, {"psi", 1.0}, {"p", 13.5}, {"c", 1.0}, {"rho", 0.8}};
  c.snapshots = {s, s};
  const auto g = functional_summary(c, {FunctionalKind::offspring_density, {0.3}, {8.5}});
  EXPECT_NEAR(g.rows[0].mean, stats::lomax_pdf(0.3, 13.5, 1.0), 1e-14);
  const auto a = functional_summary(c, {FunctionalKind::alpha, {6.0}, {}});
  EXPECT_NEAR(a.rows[0].mean, 0.4 * std::exp(1.0), 1e-14);

  c.meta.model = ModelKind::semipar;
  s.vectors["atoms"] = {0.5, 2.0};
  s.vectors["weights"] = {0.25, 0.75};
  c.snapshots = {s};
  const auto sp = functional_summary(c, {FunctionalKind::offspring_density, {1.0}, {5.0}});
  EXPECT_DOUBLE_EQ(sp.rows[0].mean, 0.375);
}

TEST(FunctionalSummary, Errors) {
  ChainOutput empty;
  EXPECT_THROW(functional_summary(empty, {FunctionalKind::rho, {}, {}}), ValidationError);
  const auto chain = nonpar_chain(3, false);
  EXPECT_THROW(functional_summary(chain, {FunctionalKind::offspring_density, {0.1}, {}}), ValidationError);
  EXPECT_THROW(functional_summary(chain, {FunctionalKind::alpha, {}, {}}), ValidationError);
}

TEST(FunctionalSummary, BandCoverageCount) {
  FunctionalTable t;
  t.rows = {{0, 1, 0.5, 0.0, 1.0}, {0, 2, 0.5, 0.4, 0.6}};
  EXPECT_EQ(band_coverage(t, [](double, double) { return 0.9; }), 1);
}
