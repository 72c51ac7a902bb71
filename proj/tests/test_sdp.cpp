#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dnnstab/sdp.hpp"
#include "support.hpp"

using namespace dnnstab;
using dnnstab::testing::planted_problem;

namespace {

LmiProblem scalar_problem(std::vector<std::pair<Sense, double>> rows, double margin = 1e-6) {
  // Each entry: x >= c (geq) written as F(x) = x - c, or x <= c (leq) as F(x) = x - c.
  LmiProblem p;
  p.num_vars = 1;
  p.margin = margin;
  int i = 0;
  for (auto [sense, c] : rows) {
    p.constraints.push_back(build_affine_constraint("s" + std::to_string(i++), sense, 1,
                                                    [c](const Vec& x) { return Mat::Constant(1, 1, x(0) - c); }));
  }
  return p;
}

bool verified(const LmiProblem& p, const FeasibilityResult& r) {
  const auto mins = verify_witness(p, r.witness);
  const double tol = witness_tolerance(p, r.witness);
  return std::all_of(mins.begin(), mins.end(), [&](double m) { return m >= -tol; });
}

}  // namespace

TEST(Sdp, SingleScaledIdentityIsFeasible) {
  LmiProblem p;
  p.num_vars = 1;
  p.margin = 1e-6;
  p.constraints.push_back(build_affine_constraint("xI", Sense::geq, 1, [](const Vec& x) -> Mat {
    return x(0) * Mat::Identity(2, 2);
  }));
  const auto r = solve_feasibility(p);
  ASSERT_TRUE(r.feasible());
  EXPECT_GE(r.witness(0), p.margin);
  EXPECT_TRUE(verified(p, r));
}

TEST(Sdp, ContradictoryScalarsAreNotFeasible) {
  // x >= 1 and -x >= 1
  LmiProblem p;
  p.num_vars = 1;
  p.margin = 1e-6;
  p.constraints.push_back(build_affine_constraint("a", Sense::geq, 1, [](const Vec& x) { return Mat::Constant(1, 1, x(0) - 1.0); }));
  p.constraints.push_back(build_affine_constraint("b", Sense::geq, 1, [](const Vec& x) { return Mat::Constant(1, 1, -x(0) - 1.0); }));
  const auto r = solve_feasibility(p);
  EXPECT_FALSE(r.feasible());
  EXPECT_EQ(r.status, FeasibilityStatus::infeasible_or_undecided);
  EXPECT_EQ(r.witness.size(), 0);
}

TEST(Sdp, IntervalConstraintsBothSenses) {
  const auto p = scalar_problem({{Sense::geq, 2.0}, {Sense::leq, 2.5}});
  const auto r = solve_feasibility(p);
  ASSERT_TRUE(r.feasible());
  EXPECT_GT(r.witness(0), 2.0);
  EXPECT_LT(r.witness(0), 2.5);
  const auto q = scalar_problem({{Sense::geq, 2.5}, {Sense::leq, 2.0}});
  EXPECT_FALSE(solve_feasibility(q).feasible());
}

TEST(Sdp, PlantedProblemRecoversMargin) {
  std::mt19937_64 rng(17);
  const auto pp = planted_problem(rng, 10, 8, 1, 0.1);
  const auto r = solve_feasibility(pp.problem);
  ASSERT_TRUE(r.feasible());
  EXPECT_TRUE(verified(pp.problem, r));
  // Infeasible-or-undecided reports keep an empty witness; feasible ones a certified margin.
  EXPECT_GE(r.achieved_margin, pp.planted_margin / 2.0);
}

TEST(Sdp, PlantedProblemsWithSeveralConstraints) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pp = planted_problem(rng, 6 + trial, 4 + trial % 4, 3, 1e-2);
    const auto r = solve_feasibility(pp.problem);
    ASSERT_TRUE(r.feasible()) << "trial " << trial;
    EXPECT_TRUE(verified(pp.problem, r));
  }
}

TEST(Sdp, WitnessCheckFlagsPerturbedPoint) {
  std::mt19937_64 rng(5);
  const auto pp = planted_problem(rng, 4, 3, 1, 0.05);
  EXPECT_GE(verify_witness(pp.problem, pp.x_star)[0], 0.05 - pp.problem.margin - 1e-12);
  // Walk away from x* until the planted constraint breaks.
  Vec dir = Vec::Ones(4).normalized();
  double scale = 0.0;
  double last = verify_witness(pp.problem, pp.x_star)[0];
  while (last >= 0.0 && scale < 1e3) {
    scale = scale == 0.0 ? 1e-3 : 2.0 * scale;
    last = verify_witness(pp.problem, Vec(pp.x_star + scale * dir))[0];
  }
  EXPECT_LT(last, 0.0);
  EXPECT_THROW(verify_witness(pp.problem, Vec::Zero(3)), InvalidArgument);
}

TEST(Sdp, IdentityConstantAtZeroWitness) {
  LmiProblem p;
  p.num_vars = 2;
  p.margin = 0.0;
  p.constraints.push_back(build_affine_constraint("c", Sense::geq, 2, [](const Vec& x) -> Mat {
    Mat f = 3.0 * Mat::Identity(3, 3);
    f(0, 1) = f(1, 0) = x(0);
    f(2, 2) += x(1);
    return f;
  }));
  EXPECT_NEAR(verify_witness(p, Vec::Zero(2))[0], 3.0, 1e-14);
}

TEST(Sdp, RejectsAsymmetricConstraint) {
  LmiProblem p;
  p.num_vars = 1;
  LmiConstraint c;
  c.name = "bad";
  c.dim = 2;
  c.constant = Mat::Identity(2, 2);
  c.constant(0, 1) = 1.0;
  p.constraints.push_back(c);
  EXPECT_THROW(solve_feasibility(p), InvalidArgument);
}

TEST(Sdp, DeterministicWitness) {
  std::mt19937_64 a(99), b(99);
  const auto pa = planted_problem(a, 8, 5, 2, 0.02);
  const auto pb = planted_problem(b, 8, 5, 2, 0.02);
  const auto ra = solve_feasibility(pa.problem), rb = solve_feasibility(pb.problem);
  ASSERT_TRUE(ra.feasible());
  EXPECT_EQ(ra.witness, rb.witness);
  EXPECT_EQ(ra.iterations, rb.iterations);
}

TEST(Sdp, BackendSeamIsHonoured) {
  struct Always final : SdpBackend {
    std::string name() const override { return "stub"; }
    FeasibilityResult solve(const LmiProblem&, int) const override {
      FeasibilityResult r;
      r.iterations = 123;
      return r;
    }
  } stub;
  const auto p = scalar_problem({{Sense::geq, 0.0}});
  EXPECT_EQ(solve_feasibility(p, 10, &stub).iterations, 123);
}

TEST(Sdp, TheoremOneMonotoneInRate) {
  const auto sys = example1_system();
  const auto feasible = [&](double k) {
    return solve_feasibility(assemble_theorem1(sys, {1.0, 0.8, k, 0.5, 0.0})).feasible();
  };
  EXPECT_TRUE(feasible(1.0));
  EXPECT_TRUE(feasible(0.5));
  EXPECT_TRUE(feasible(0.1));
  EXPECT_FALSE(feasible(1.5));
  EXPECT_FALSE(feasible(1.9));
}
