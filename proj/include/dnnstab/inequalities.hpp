#ifndef DNNSTAB_INEQUALITIES_HPP
#define DNNSTAB_INEQUALITIES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "dnnstab/quadrature.hpp"
#include "dnnstab/test_function.hpp"
#include "dnnstab/types.hpp"
#include "dnnstab/weighted_basis.hpp"

// Numerical checks of the weighted integral inequalities on concrete
// functions. Every check returns lhs, rhs and slack = lhs - rhs; a check
// passes when slack >= -tolerance with tolerance = 1e-8 max(1, |lhs|).

namespace dnnstab {

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

inline constexpr double kInequalityRelTol = 1e-8;

inline InequalityReport make_report(double lhs, double rhs, double rel_tol = kInequalityRelTol) {
  InequalityReport r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = lhs - rhs;
  r.tolerance = rel_tol * std::max(1.0, std::abs(lhs));
  r.passed = r.slack >= -r.tolerance;
  return r;
}

namespace detail {

inline void require_pd(const Mat& g, double min_eig, const char* what) {
  require(g.rows() == g.cols(), std::string(what) + ": matrix must be square");
  require((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()),
          std::string(what) + ": matrix must be symmetric");
  require(min_eigenvalue(g) >= min_eig, std::string(what) + ": matrix must be positive definite");
}

inline Mat coupled_block(const Mat& gam, const Mat& s) {
  const Eigen::Index n = gam.rows();
  Mat block(2 * n, 2 * n);
  block << gam, s, s.transpose(), gam;
  return block;
}

inline void require_block_psd(const Mat& gam, const Mat& s) {
  require(s.rows() == gam.rows() && s.cols() == gam.cols(), "coupling matrix has wrong shape");
  const Mat block = coupled_block(gam, s);
  require(min_eigenvalue(block) >= -1e-12 * (1.0 + block.norm()),
          "[[Gamma, S], [S^T, Gamma]] must be positive semidefinite");
}

inline double quad_form(const Vec& x, const Mat& a) { return x.dot(a * x); }

}  // namespace detail

/// Weighted inequality of order 2 (quadratic basis) or 3 (cubic basis):
///   int w(v) f^T G f dv >= sum_{k<=order} <g_k,g_k>^{-1} (int f g_k)^T G (int f g_k).
inline InequalityReport verify_weighted_inequality(const TestFunction& f,
                                                   const WeightedBasis& basis, const Mat& gam,
                                                   int order,
                                                   const QuadratureOptions& quad = {}) {
  detail::require(order == 2 || order == 3, "order must be 2 or 3");
  detail::require(gam.rows() == f.dimension(), "Gamma dimension does not match the function");
  detail::require_pd(gam, 1e-9, "Gamma");
  const Eigen::Index n = f.dimension();
  const double lhs = integrate(
      [&](double v) { return basis.weight(v) * detail::quad_form(f.value(v), gam); }, basis.c1,
      basis.c2, quad);
  double rhs = 0.0;
  for (int k = 0; k <= order; ++k) {
    const Vec proj = integrate_vec([&](double v) -> Vec { return f.value(v) * basis.g(k, v); }, n,
                                   basis.c1, basis.c2, quad);
    rhs += detail::quad_form(proj, gam) / basis.norm(k);
  }
  return make_report(lhs, rhs);
}

/// The same four-term bound written with explicit delta = 0 weights
/// {1, 12/L^2, 180/L^4, 2800/L^6} / L on Legendre projections.
inline InequalityReport verify_unweighted_legendre(const TestFunction& f, double c1, double c2,
                                                   const Mat& gam,
                                                   const QuadratureOptions& quad = {}) {
  detail::require(c2 > c1, "invalid interval");
  const WeightedBasis leg = limit_coefficients(c1, c2);
  const double len = c2 - c1;
  const std::array<double, 4> w = {1.0, 12.0 / std::pow(len, 2), 180.0 / std::pow(len, 4),
                                   2800.0 / std::pow(len, 6)};
  const double lhs =
      integrate([&](double v) { return detail::quad_form(f.value(v), gam); }, c1, c2, quad);
  double rhs = 0.0;
  for (int k = 0; k <= 3; ++k) {
    const Vec proj = integrate_vec([&](double v) -> Vec { return f.value(v) * leg.g(k, v); },
                                   f.dimension(), c1, c2, quad);
    rhs += w[k] / len * detail::quad_form(proj, gam);
  }
  return make_report(lhs, rhs);
}

/// Endpoint/iterated-integral projections Omega_0..Omega_3 of x' on the basis.
inline std::array<Vec, 4> corollary_omegas(const TestFunction& x, const WeightedBasis& b) {
  const double c1 = b.c1, c2 = b.c2, len = c2 - c1;
  const auto& k = b.coef;
  const Vec x1 = x.value(c1), x2 = x.value(c2);
  // Exact iterated integrals from the antiderivative chain X1' = x, X2' = X1, X3' = X2.
  const Vec single = x.antiderivative(c2, 1) - x.antiderivative(c1, 1);
  const Vec dbl = len * x.antiderivative(c2, 1) - (x.antiderivative(c2, 2) - x.antiderivative(c1, 2));
  const Vec tpl = 0.5 * len * len * x.antiderivative(c2, 1) - len * x.antiderivative(c2, 2) +
                  (x.antiderivative(c2, 3) - x.antiderivative(c1, 3));
  std::array<Vec, 4> om;
  om[0] = x2 - x1;
  om[1] = (k.kbar + c2) * x2 - (k.kbar + c1) * x1 - single;
  om[2] = b.g(2, c2) * x2 - b.g(2, c1) * x1 - (k.c + 2.0 * c1) * single - 2.0 * dbl;
  om[3] = b.g(3, c2) * x2 - b.g(3, c1) * x1 -
          (3.0 * c1 * c1 + 2.0 * c1 * k.hbar + k.q) * single - (2.0 * k.hbar + 6.0 * c1) * dbl -
          6.0 * tpl;
  return om;
}

struct CorollaryReport {
  InequalityReport inequality;
  /// max_k |Omega_k - int x' g_k| / max(1, |Omega_k|), quadrature on the right.
  double identity_error = 0.0;
  bool identity_passed = false;
  std::array<Vec, 4> omegas;
};

/// Derivative form of the cubic inequality with the Omega_k written through
/// endpoint values and single/double/triple integrals of x.
inline CorollaryReport verify_corollary_forms(const TestFunction& x, const WeightedBasis& basis,
                                              const Mat& gam,
                                              const QuadratureOptions& quad = {}) {
  detail::require(gam.rows() == x.dimension(), "Gamma dimension does not match the function");
  detail::require_pd(gam, 1e-9, "Gamma");
  CorollaryReport out;
  out.omegas = corollary_omegas(x, basis);
  const double lhs = integrate(
      [&](double v) { return basis.weight(v) * detail::quad_form(x.derivative(v), gam); },
      basis.c1, basis.c2, quad);
  double rhs = 0.0;
  double err = 0.0;
  for (int k = 0; k <= 3; ++k) {
    rhs += detail::quad_form(out.omegas[k], gam) / basis.norm(k);
    const Vec direct = integrate_vec(
        [&](double v) -> Vec { return x.derivative(v) * basis.g(k, v); }, x.dimension(),
        basis.c1, basis.c2, quad);
    const double scale = std::max(1.0, out.omegas[k].lpNorm<Eigen::Infinity>());
    err = std::max(err, (out.omegas[k] - direct).lpNorm<Eigen::Infinity>() / scale);
  }
  out.inequality = make_report(lhs, rhs);
  out.identity_error = err;
  out.identity_passed = err <= 1e-8;
  return out;
}

/// Reciprocally convex combination:
///   W1'G W1 / s + W2'G W2 / (1 - s) >= [W1;W2]' [[G, S], [S', G]] [W1;W2].
inline InequalityReport verify_rci(const Vec& w1, const Vec& w2, const Mat& gam, const Mat& s,
                                   double sigma) {
  detail::require(sigma > 0.0 && sigma < 1.0, "sigma must lie in (0, 1)");
  detail::require(w1.size() == gam.rows() && w2.size() == gam.rows(), "vector size mismatch");
  detail::require_block_psd(gam, s);
  const double lhs =
      detail::quad_form(w1, gam) / sigma + detail::quad_form(w2, gam) / (1.0 - sigma);
  Vec w(2 * w1.size());
  w << w1, w2;
  return make_report(lhs, detail::quad_form(w, detail::coupled_block(gam, s)));
}

struct WrciReport {
  InequalityReport wrci;
  /// lhs against the two single-interval Jensen-type pieces.
  InequalityReport split;
  /// split bound against the coupled bound.
  InequalityReport split_vs_coupled;
};

/// Weighted reciprocally convex inequality on [t - th2, t - th1] split at t - th:
///   int e^{d (th1 + s - t)} r'^T G r' ds
///     >= d / (e^{d (th2 - th1)} - 1) [U1;U2]^T [[G, S], [S^T, G]] [U1;U2],
/// U1 = r(t - th) - r(t - th2), U2 = r(t - th1) - r(t - th).
inline WrciReport verify_wrci(const TestFunction& r, double th1, double th2, double th,
                              double delta, const Mat& gam, const Mat& s, double t,
                              const QuadratureOptions& quad = {}) {
  detail::require(th2 > th1, "need theta1 < theta2");
  detail::require(th >= th1 && th <= th2, "theta(t) outside [theta1, theta2]");
  detail::require(delta > 0.0, "delta must be positive");
  detail::require(gam.rows() == r.dimension(), "Gamma dimension does not match the function");
  detail::require_pd(gam, 1e-9, "Gamma");
  detail::require_block_psd(gam, s);

  const double lhs = integrate(
      [&](double x) {
        return std::exp(delta * (th1 + x - t)) * detail::quad_form(r.derivative(x), gam);
      },
      t - th2, t - th1, quad);
  const Vec u1 = r.value(t - th) - r.value(t - th2);
  const Vec u2 = r.value(t - th1) - r.value(t - th);
  Vec u(2 * u1.size());
  u << u1, u2;
  const double pre = delta / std::expm1(delta * (th2 - th1));
  const double coupled = pre * detail::quad_form(u, detail::coupled_block(gam, s));

  // Pieces with a vanishing subinterval contribute their limit, zero.
  double split = 0.0;
  const double big = std::exp(delta * (th2 - th1));
  const double mid = std::exp(delta * (th - th1));
  if (th < th2) split += delta / (big - mid) * detail::quad_form(u1, gam);
  if (th > th1) split += delta / std::expm1(delta * (th - th1)) * detail::quad_form(u2, gam);

  WrciReport out;
  out.wrci = make_report(lhs, coupled);
  out.split = make_report(lhs, split);
  out.split_vs_coupled = make_report(split, coupled);
  return out;
}

/// Gamma = A^T A + 1e-6 I with A entries uniform in [-1, 1].
template <class Rng>
Mat random_spd(Rng& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = u(rng);
  return a.transpose() * a + 1e-6 * Mat::Identity(n, n);
}

/// Random coupling S scaled down until [[G, S], [S^T, G]] is PSD.
template <class Rng>
Mat random_coupling(Rng& rng, const Mat& gam) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Index n = gam.rows();
  Mat s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = u(rng);
  // With G = L L^T the block is PSD iff ||L^{-1} S L^{-T}||_2 <= 1.
  Eigen::LLT<Mat> llt(gam);
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(n, n));
  const Mat core = l_inv * s * l_inv.transpose();
  const double sv = Eigen::JacobiSVD<Mat>(core).singularValues()(0);
  if (sv > 0.0) s *= std::min(1.0, 0.999 / sv);
  return s;
}

}  // namespace dnnstab

#endif  // DNNSTAB_INEQUALITIES_HPP
