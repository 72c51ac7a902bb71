#ifndef DNNSTAB_TESTS_SUPPORT_HPP
#define DNNSTAB_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include "dnnstab/lmi_problem.hpp"
#include "dnnstab/lmi_variables.hpp"
#include "dnnstab/theorem1.hpp"

namespace dnnstab::testing {

inline Mat random_symmetric(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
  return 0.5 * (a + a.transpose());
}

inline Mat random_pd(std::mt19937_64& rng, int d, double floor = 1e-3) {
  std::normal_distribution<double> nd;
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
  return a.transpose() * a / d + floor * Mat::Identity(d, d);
}

/// Problem with a known interior point x*: every constraint satisfies
/// F(x*) = W with lambda_min(W) = planted_margin.
struct PlantedProblem {
  LmiProblem problem;
  Vec x_star;
  double planted_margin = 0.0;
};

inline PlantedProblem planted_problem(std::mt19937_64& rng, int num_vars, int dim, int constraints,
                                      double planted_margin, double problem_margin = 1e-6) {
  PlantedProblem out;
  out.planted_margin = planted_margin;
  std::normal_distribution<double> nd;
  out.x_star = Vec(num_vars);
  for (int j = 0; j < num_vars; ++j) out.x_star(j) = nd(rng);
  out.problem.num_vars = num_vars;
  out.problem.margin = problem_margin;
  for (int c = 0; c < constraints; ++c) {
    std::vector<Mat> a;
    for (int j = 0; j < num_vars; ++j) a.push_back(random_symmetric(rng, dim));
    Mat w = random_pd(rng, dim, 0.0);
    w += (planted_margin - detail::min_eigenvalue(w)) * Mat::Identity(dim, dim);
    Mat f0 = w;
    for (int j = 0; j < num_vars; ++j) f0 -= out.x_star(j) * a[j];
    const bool flip = c % 2 == 1;  // exercise both senses
    out.problem.constraints.push_back(build_affine_constraint(
        "c" + std::to_string(c), flip ? Sense::leq : Sense::geq, num_vars, [&](const Vec& x) -> Mat {
          Mat f = f0;
          for (int j = 0; j < num_vars; ++j) f += x(j) * a[j];
          return flip ? Mat(-f) : f;
        }));
  }
  return out;
}

/// Decision matrices in the cones, with M1 >= M2, and S1, S2 shrunk until
/// Gamma, Omega and Omega1 are PSD.
inline LmiVariables random_cone_variables(std::mt19937_64& rng, const Theorem1& thm) {
  const int n = thm.n();
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::normal_distribution<double> nd;
  LmiVariables v = LmiVariables::zero(n);
  v.P = random_pd(rng, 3 * n);
  v.Q = random_pd(rng, 2 * n);
  for (Mat* m : {&v.U1, &v.U2, &v.U3, &v.Z1, &v.Z2, &v.Z3, &v.Z4, &v.N1, &v.N2, &v.M2}) *m = random_pd(rng, n);
  v.M1 = v.M2 + random_pd(rng, n);
  for (Vec* d : {&v.D1, &v.D2, &v.R1, &v.R2})
    for (int i = 0; i < n; ++i) (*d)(i) = u(rng);
  Mat s1(4 * n, 4 * n), s2(n, n);
  for (int i = 0; i < s1.size(); ++i) s1.data()[i] = nd(rng);
  for (int i = 0; i < s2.size(); ++i) s2.data()[i] = nd(rng);
  v.S1 = s1;
  for (int it = 0; it < 200; ++it) {
    const auto b = thm.evaluate(v);
    if (detail::min_eigenvalue(b.gamma) >= 0.0 && detail::min_eigenvalue(b.omega) >= 0.0) break;
    v.S1 *= 0.7;
  }
  v.S2 = s2;
  for (int it = 0; it < 200 && detail::min_eigenvalue(thm.evaluate(v).omega1) < 0.0; ++it) v.S2 *= 0.7;
  return v;
}

}  // namespace dnnstab::testing

#endif  // DNNSTAB_TESTS_SUPPORT_HPP
