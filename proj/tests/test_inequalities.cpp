#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dnnstab/inequalities.hpp"
#include "dnnstab/verification.hpp"

using namespace dnnstab;

namespace {

Vec unit(Eigen::Index n, Eigen::Index i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

Mat spd2() {
  Mat g(2, 2);
  g << 2.0, 0.3, 0.3, 1.0;
  return g;
}

TestFunction sine(double freq, const Vec& dir) {
  TestFunction f;
  f.kind = TestFunction::Kind::sinusoid;
  for (Eigen::Index i = 0; i < dir.size(); ++i) f.components.push_back({{}, 0.0, {{dir(i), freq, 0.0}}});
  return f;
}

}  // namespace

TEST(WeightedInequality, EqualityInsideSpannedSpace) {
  const auto b = make_weighted_basis(-1.0, 0.0, 2.0);
  // rho = (1/w) g2 e lies in span{g_k} under the inner product, so the bound is tight.
  TestFunction f;
  const auto& c = b.coef;
  const double c2 = b.c2, d = b.delta;
  // e^{-d (v - c2)} (v^2 + c v + m) = e^{d c2} (m + c v + v^2) e^{-d v}
  const double s = std::exp(d * c2);
  f.components.push_back({{s * c.m, s * c.c, s}, -d, {}});
  f.components.push_back({{}, 0.0, {}});
  const auto r = verify_weighted_inequality(f, b, spd2(), 3);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.slack, 0.0, 1e-9 * std::abs(r.lhs));
}

TEST(WeightedInequality, CubicBoundRefinesQuadratic) {
  const auto b = make_weighted_basis(-1.0, 0.0, 2.0);
  const auto f = sine(5.0, unit(2, 0) + 0.5 * unit(2, 1));
  const auto r2 = verify_weighted_inequality(f, b, spd2(), 2);
  const auto r3 = verify_weighted_inequality(f, b, spd2(), 3);
  EXPECT_TRUE(r2.passed);
  EXPECT_TRUE(r3.passed);
  EXPECT_LE(r3.slack, r2.slack);
  EXPECT_GE(r3.rhs, r2.rhs);
}

TEST(WeightedInequality, ZeroFunction) {
  const auto b = make_weighted_basis(-2.0, 0.0, 0.4);
  const auto r = verify_weighted_inequality(TestFunction::constant(Vec::Zero(2)), b, spd2(), 3);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.passed);
}

TEST(WeightedInequality, RejectsIndefiniteGamma) {
  const auto b = make_weighted_basis(-1.0, 0.0, 1.0);
  Mat g(2, 2);
  g << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(verify_weighted_inequality(sine(1.0, unit(2, 0)), b, g, 2), InvalidArgument);
  EXPECT_THROW(verify_weighted_inequality(sine(1.0, unit(2, 0)), b, spd2(), 4), InvalidArgument);
}

TEST(WeightedInequality, SmallRateMatchesUnweightedFourTermBound) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_test_function(rng, 2);
    const Mat g = random_spd(rng, 2);
    const auto a = verify_weighted_inequality(f, make_weighted_basis(-1.3, 0.2, 1e-8), g, 3);
    const auto u = verify_unweighted_legendre(f, -1.3, 0.2, g);
    EXPECT_NEAR(a.rhs, u.rhs, 1e-6 * std::max(1.0, std::abs(u.rhs)));
    EXPECT_NEAR(a.lhs, u.lhs, 1e-6 * std::max(1.0, std::abs(u.lhs)));
  }
}

TEST(Corollary, ConstantFunctionHasZeroProjections) {
  const auto b = make_weighted_basis(-1.0, 0.0, 2.0);
  Vec c(2);
  c << 1.5, -0.7;
  const auto r = verify_corollary_forms(TestFunction::constant(c), b, spd2());
  for (const auto& om : r.omegas) EXPECT_LE(om.norm(), 1e-12);
  EXPECT_EQ(r.inequality.lhs, 0.0);
  EXPECT_TRUE(r.identity_passed);
}

TEST(Corollary, LinearFunctionEndpointDifference) {
  const auto b = make_weighted_basis(-2.0, 0.5, 1.0);
  Vec e(2);
  e << 1.0, -2.0;
  const auto r = verify_corollary_forms(TestFunction::along(e, {0.0, 1.0}), b, spd2());
  EXPECT_LE((r.omegas[0] - 2.5 * e).norm(), 1e-12);
  EXPECT_TRUE(r.inequality.passed);
  EXPECT_TRUE(r.identity_passed);
}

TEST(Corollary, PolynomialMatchesQuadratureIdentity) {
  TestFunction f;
  f.components.push_back({{0.0, 0.0, 0.0, 1.0}, 0.0, {}});
  f.components.push_back({{0.3, 0.0, 1.0}, 0.0, {}});
  f.components.push_back({{1.0, -1.0, 0.5, 0.2, -0.1}, 0.4, {}});
  const auto b = make_weighted_basis(-1.5, 0.0, 1.2);
  Mat g = Mat::Identity(3, 3);
  g(0, 2) = g(2, 0) = 0.2;
  const auto r = verify_corollary_forms(f, b, g);
  EXPECT_LE(r.identity_error, 1e-9);
  EXPECT_TRUE(r.inequality.passed);
}

TEST(Rci, TightWhenCouplingEqualsGammaAndHalfSplit) {
  Vec w(2);
  w << 0.4, -1.1;
  const auto r = verify_rci(w, w, spd2(), spd2(), 0.5);
  EXPECT_NEAR(r.slack, 0.0, 1e-12);
  EXPECT_TRUE(r.passed);
}

TEST(Rci, ZeroCouplingHasNonNegativeSlack) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  Vec w1(3), w2(3);
  for (int i = 0; i < 3; ++i) {
    w1(i) = nd(rng);
    w2(i) = nd(rng);
  }
  const Mat g = random_spd(rng, 3);
  const auto r = verify_rci(w1, w2, g, Mat::Zero(3, 3), 0.3);
  EXPECT_GE(r.slack, 0.0);
}

TEST(Rci, NearZeroSplitDiverges) {
  Vec w1(2), w2(2);
  w1 << 1.0, 0.0;
  w2 << 0.0, 1.0;
  const auto r = verify_rci(w1, w2, spd2(), 0.5 * spd2(), 1e-9);
  EXPECT_GT(r.lhs, 1e8);
  EXPECT_TRUE(r.passed);
}

TEST(Rci, RejectsNonPsdBlock) {
  Vec w = Vec::Ones(2);
  EXPECT_THROW(verify_rci(w, w, spd2(), 3.0 * spd2(), 0.5), InvalidArgument);
  EXPECT_THROW(verify_rci(w, w, spd2(), spd2(), 1.0), InvalidArgument);
}

TEST(Wrci, ConstantFunctionGivesZeroBothSides) {
  const auto r = verify_wrci(TestFunction::constant(Vec::Ones(2)), 0.2, 1.5, 0.7, 1.0, spd2(), Mat::Zero(2, 2), 2.0);
  EXPECT_EQ(r.wrci.rhs, 0.0);
  EXPECT_NEAR(r.wrci.lhs, 0.0, 1e-15);
  EXPECT_TRUE(r.wrci.passed);
}

TEST(Wrci, LinearFunctionClosedForm) {
  Vec e(2);
  e << 1.0, 0.5;
  const auto f = TestFunction::along(e, {0.0, 1.0});
  const double th1 = 0.1, th2 = 1.1, th = 0.6, d = 2.0, t = 3.0;
  const auto r = verify_wrci(f, th1, th2, th, d, spd2(), Mat::Zero(2, 2), t);
  const double q = e.dot(spd2() * e);
  EXPECT_NEAR(r.wrci.lhs, q * -std::expm1(-d * (th2 - th1)) / d, 1e-12);
  EXPECT_TRUE(r.wrci.passed);
  EXPECT_TRUE(r.split.passed);
  EXPECT_TRUE(r.split_vs_coupled.passed);
}

TEST(Wrci, BoundaryPartitionPoints) {
  std::mt19937_64 rng(5);
  const auto f = random_test_function(rng, 2);
  const Mat g = random_spd(rng, 2);
  const Mat s = random_coupling(rng, g);
  for (double th : {0.3, 1.4}) {
    const auto r = verify_wrci(f, 0.3, 1.4, th, 1.5, g, s, 2.0);
    EXPECT_TRUE(r.wrci.passed);
    EXPECT_TRUE(r.split.passed);
  }
  EXPECT_THROW(verify_wrci(f, 0.3, 1.4, 1.5, 1.5, g, s, 2.0), InvalidArgument);
}

TEST(Wrci, PrefactorTendsToReciprocalLength) {
  const double len = 1.7, d = 1e-8;
  EXPECT_NEAR(d / std::expm1(d * len), 1.0 / len, 1e-8);
  Vec e(2);
  e << 1.0, -1.0;
  const auto f = TestFunction::along(e, {0.0, 0.0, 1.0});
  const auto r = verify_wrci(f, 0.0, len, 0.9, d, spd2(), 0.3 * spd2(), 1.0);
  EXPECT_TRUE(r.wrci.passed);
}

TEST(Batch, SmallBatchPassesAndExportsCsv) {
  const auto b = run_inequality_batch(42, 25);
  EXPECT_EQ(b.records.size(), 25u * inequality_lemmas().size());
  EXPECT_EQ(b.failures, 0u);
  EXPECT_EQ(b.order_violations, 0u);
  std::ostringstream a, c;
  write_inequality_csv(a, b);
  write_inequality_csv(c, run_inequality_batch(42, 25));
  EXPECT_EQ(a.str(), c.str());
  EXPECT_EQ(a.str().rfind("lemma,seed,lhs,rhs,slack,passed\n", 0), 0u);
}
