#ifndef DNNSTAB_QUADRATURE_HPP
#define DNNSTAB_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dnnstab/types.hpp"

namespace dnnstab {

struct QuadratureOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-9;
  // 2^10 leaf intervals at most; deeper splits only accumulate rounding.
  unsigned max_depth = 10;
};

/// Adaptive 31-point Gauss-Kronrod over [a, b]; throws if the error
/// estimate stays above both tolerances.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      std::forward<F>(f), a, b, opt.max_depth, opt.rel_tol, &err, &l1);
  if (!std::isfinite(value)) throw NumericalFailure("quadrature produced a non-finite value");
  // The estimate bottoms out at the integrand's rounding level, about
  // 1e-10 of the L1 mass; only flag estimates well above that.
  if (err > opt.abs_tol && err > std::max(1e3 * opt.rel_tol, 1e-8) * l1) {
    std::ostringstream msg;
    msg << "quadrature did not converge (error estimate " << err << ", L1 mass " << l1 << ")";
    throw NumericalFailure(msg.str());
  }
  return value;
}

/// Component-wise integral of a vector-valued integrand of fixed dimension.
inline Vec integrate_vec(const std::function<Vec(double)>& f, Eigen::Index dim, double a, double b,
                         const QuadratureOptions& opt = {}) {
  Vec out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    out(i) = integrate([&](double s) { return f(s)(i); }, a, b, opt);
  }
  return out;
}

}  // namespace dnnstab

#endif  // DNNSTAB_QUADRATURE_HPP
