#ifndef DNNSTAB_WEIGHTED_BASIS_HPP
#define DNNSTAB_WEIGHTED_BASIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dnnstab/types.hpp"

// Exponentially weighted moments and the cubic orthogonal basis behind the
// weighted integral inequalities.
//
// An inequality with integrand weight w(v) = e^{delta (v - c2)} is sharpest
// when the polynomials g_k are orthogonal under the reciprocal weight
// 1/w(v) = e^{-delta (v - c2)}; the moments, coefficients and norms below are
// all taken with respect to that inner-product weight.

namespace dnnstab {

inline constexpr int kMaxMomentPower = 6;

namespace detail {

// gamma_j(a) = int_0^1 e^{-a s} s^j ds for j = 0..jmax.
inline std::vector<double> exp_power_integrals(double a, int jmax) {
  std::vector<double> out(static_cast<std::size_t>(jmax) + 1, 0.0);
  const bool use_recurrence = (a > 2.0) || (a < -30.0);
  if (use_recurrence) {
    const double ea = std::exp(-a);
    out[0] = -std::expm1(-a) / a;
    for (int j = 1; j <= jmax; ++j) out[j] = (j * out[j - 1] - ea) / a;
    return out;
  }
  // Convergent power series; alternating but well conditioned for a <= 2,
  // all-positive for a < 0.
  for (int j = 0; j <= jmax; ++j) {
    double term = 1.0;  // (-a)^m / m!
    double sum = 0.0;
    for (int m = 0; m < 400; ++m) {
      const double contrib = term / (j + m + 1);
      sum += contrib;
      if (m > std::abs(a) && std::abs(contrib) <= 1e-18 * std::abs(sum)) break;
      term *= -a / (m + 1);
    }
    out[j] = sum;
  }
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

namespace detail {

// int_lo^hi e^{rate (v - c2)} v^i dv, i = 0..max_power, expanded about the
// endpoint `anchor` (lo or hi). With anchor >= 0 at lo, or anchor <= 0 at hi,
// every term of the binomial sum has the same sign.
inline void add_anchored_moments(double lo, double hi, bool at_lo, double c2, double rate, int max_power,
                                 std::vector<double>& out) {
  const double len = hi - lo;
  if (!(len > 0.0)) return;
  const double p = at_lo ? lo : hi;
  const double scale = std::exp(rate * (p - c2));
  // K_j = int over the piece of e^{rate (v - p)} (v - p)^j dv
  const std::vector<double> gam = exp_power_integrals(at_lo ? -rate * len : rate * len, max_power);
  std::vector<double> k(static_cast<std::size_t>(max_power) + 1);
  for (int j = 0; j <= max_power; ++j) k[j] = std::pow(at_lo ? len : -len, j) * len * gam[j];
  for (int i = 0; i <= max_power; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += binomial(i, j) * std::pow(p, i - j) * k[j];
    out[i] += scale * acc;
  }
}

}  // namespace detail

/// int_{c1}^{c2} e^{rate (v - c2)} v^i dv for i = 0..max_power.
///
/// The interval is split at 0 and each piece is expanded about its endpoint
/// nearest 0, so no sum cancels. The pieces use a closed-form recurrence for
/// large |rate length| and a power series otherwise.
inline std::vector<double> exp_weighted_moments(double c1, double c2, double rate, int max_power) {
  detail::require(c2 > c1, "moments: need c1 < c2");
  detail::require(max_power >= 0 && max_power <= kMaxMomentPower,
                  "moments: max_power must be in [0, 6]");
  detail::require(std::isfinite(rate), "moments: rate must be finite");
  std::vector<double> out(static_cast<std::size_t>(max_power) + 1, 0.0);
  if (c1 >= 0.0) {
    detail::add_anchored_moments(c1, c2, true, c2, rate, max_power, out);
  } else if (c2 <= 0.0) {
    detail::add_anchored_moments(c1, c2, false, c2, rate, max_power, out);
  } else {
    detail::add_anchored_moments(c1, 0.0, false, c2, rate, max_power, out);
    detail::add_anchored_moments(0.0, c2, true, c2, rate, max_power, out);
  }
  return out;
}

/// Inner-product moments Lambda_i = <v^i, 1>_w = int e^{-delta (v - c2)} v^i dv.
inline std::vector<double> compute_moments(double c1, double c2, double delta, int max_power) {
  detail::require(c2 > c1, "moments: invalid interval (c1 >= c2)");
  detail::require(delta >= 0.0, "moments: delta must be non-negative");
  return exp_weighted_moments(c1, c2, -delta, max_power);
}

struct BasisCoefficients {
  double kbar = 0.0;  // g1 = v + kbar
  double c = 0.0;     // g2 = v^2 + c v + m
  double m = 0.0;
  double hbar = 0.0;  // g3 = v^3 + hbar v^2 + q v + r
  double q = 0.0;
  double r = 0.0;
  std::array<double, 4> norms{};  // <g_k, g_k>_w
};

struct WeightedBasis {
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  std::array<double, 7> moments{};
  BasisCoefficients coef;

  double g(int k, double v) const {
    switch (k) {
      case 0: return 1.0;
      case 1: return v + coef.kbar;
      case 2: return (v + coef.c) * v + coef.m;
      case 3: return ((v + coef.hbar) * v + coef.q) * v + coef.r;
      default: throw InvalidArgument("basis index must be 0..3");
    }
  }
  double g_derivative(int k, double v) const {
    switch (k) {
      case 0: return 0.0;
      case 1: return 1.0;
      case 2: return 2.0 * v + coef.c;
      case 3: return (3.0 * v + 2.0 * coef.hbar) * v + coef.q;
      default: throw InvalidArgument("basis index must be 0..3");
    }
  }
  /// Integrand weight of the inequality, e^{delta (v - c2)} <= 1 on [c1, c2].
  double weight(double v) const { return std::exp(delta * (v - c2)); }
  /// Weight of the inner product the g_k are orthogonal under.
  double inner_weight(double v) const { return std::exp(-delta * (v - c2)); }
  double norm(int k) const { return coef.norms.at(static_cast<std::size_t>(k)); }
  double length() const { return c2 - c1; }
};

/// Coefficients of g0..g3 and their norms from Lambda_0..Lambda_6.
inline BasisCoefficients compute_coefficients(const std::array<double, 7>& lam) {
  const double l0 = lam[0], l1 = lam[1], l2 = lam[2], l3 = lam[3], l4 = lam[4], l5 = lam[5],
               l6 = lam[6];
  if (!(l0 > 0.0)) throw DegenerateBasis("Lambda_0 must be positive");

  auto degenerate = [](double den, std::initializer_list<double> terms) {
    double scale = 0.0;
    for (double t : terms) scale += std::abs(t);
    return !(std::abs(den) > 1e-13 * scale);
  };

  BasisCoefficients out;
  out.kbar = -l1 / l0;

  const double d2 = l1 * l1 - l2 * l0;
  if (degenerate(d2, {l1 * l1, l2 * l0})) throw DegenerateBasis("singular quadratic denominator");
  out.m = (l2 * l2 - l1 * l3) / d2;
  out.c = (l0 * l3 - l1 * l2) / d2;

  const double d3 = l4 * l1 * l1 - 2.0 * l1 * l2 * l3 + l2 * l2 * l2 - l0 * l2 * l4 + l0 * l3 * l3;
  if (degenerate(d3, {l4 * l1 * l1, 2.0 * l1 * l2 * l3, l2 * l2 * l2, l0 * l2 * l4, l0 * l3 * l3})) {
    throw DegenerateBasis("singular cubic denominator");
  }
  out.hbar = (-l5 * l1 * l1 + l4 * l1 * l2 + l1 * l3 * l3 - l2 * l2 * l3 + l0 * l5 * l2 -
              l0 * l4 * l3) /
             d3;
  out.q = (-l2 * l2 * l4 + l2 * l3 * l3 + l1 * l5 * l2 - l1 * l3 * l4 - l0 * l5 * l3 +
           l0 * l4 * l4) /
          d3;
  out.r = -(l5 * l2 * l2 - 2.0 * l2 * l3 * l4 + l3 * l3 * l3 - l1 * l5 * l3 + l1 * l4 * l4) / d3;

  const double kb = out.kbar, c = out.c, m = out.m, hb = out.hbar, q = out.q, r = out.r;
  out.norms[0] = l0;
  out.norms[1] = l2 + 2.0 * kb * l1 + kb * kb * l0;
  out.norms[2] = l4 + 2.0 * c * l3 + (c * c + 2.0 * m) * l2 + 2.0 * m * c * l1 + m * m * l0;
  out.norms[3] = l6 + 2.0 * hb * l5 + (hb * hb + 2.0 * q) * l4 + (2.0 * hb * q + 2.0 * r) * l3 +
                 (2.0 * hb * r + q * q) * l2 + 2.0 * q * r * l1 + r * r * l0;
  for (double nk : out.norms) {
    if (!(nk > 0.0)) throw DegenerateBasis("non-positive basis norm");
  }
  return out;
}

/// Closed forms of the basis at delta = 0 (shifted monic Legendre polynomials).
inline WeightedBasis limit_coefficients(double c1, double c2) {
  detail::require(c2 > c1, "limit_coefficients: invalid interval (c1 >= c2)");
  WeightedBasis b;
  b.c1 = c1;
  b.c2 = c2;
  b.delta = 0.0;
  for (int i = 0; i <= kMaxMomentPower; ++i) {
    b.moments[i] = (std::pow(c2, i + 1) - std::pow(c1, i + 1)) / (i + 1);
  }
  const double s = c1 + c2;
  const double len = c2 - c1;
  b.coef.kbar = -s / 2.0;
  b.coef.c = -s;
  b.coef.m = (c1 * c1 + 4.0 * c1 * c2 + c2 * c2) / 6.0;
  b.coef.hbar = -1.5 * s;
  b.coef.q = 3.0 * (c1 * c1 + 3.0 * c1 * c2 + c2 * c2) / 5.0;
  b.coef.r = -s * (c1 * c1 + 8.0 * c1 * c2 + c2 * c2) / 20.0;
  b.coef.norms = {len, std::pow(len, 3) / 12.0, std::pow(len, 5) / 180.0,
                  std::pow(len, 7) / 2800.0};
  return b;
}

/// Basis on [c1, c2]. The coefficients are computed from moments about the
/// mean of the weight, where the Hankel system is well conditioned even when
/// the weight is concentrated near c1, and the monic polynomials are then
/// re-expanded in v.
inline WeightedBasis make_weighted_basis(double c1, double c2, double delta) {
  detail::require(c2 > c1, "basis: invalid interval (c1 >= c2)");
  detail::require(delta >= 0.0, "basis: delta must be non-negative");
  WeightedBasis b;
  b.c1 = c1;
  b.c2 = c2;
  b.delta = delta;
  const auto lam = compute_moments(c1, c2, delta, kMaxMomentPower);
  for (int i = 0; i <= kMaxMomentPower; ++i) b.moments[i] = lam[i];

  const double half = 0.5 * (c1 + c2);
  const auto first = exp_weighted_moments(c1 - half, c2 - half, -delta, 1);
  const double mid = std::clamp(half + first[1] / first[0], c1, c2);
  const auto cen = exp_weighted_moments(c1 - mid, c2 - mid, -delta, kMaxMomentPower);
  std::array<double, 7> cm{};
  for (int i = 0; i <= kMaxMomentPower; ++i) cm[i] = cen[i];
  const BasisCoefficients u = compute_coefficients(cm);
  b.coef.norms = u.norms;
  b.coef.kbar = u.kbar - mid;
  b.coef.c = u.c - 2.0 * mid;
  b.coef.m = (mid - u.c) * mid + u.m;
  b.coef.hbar = u.hbar - 3.0 * mid;
  b.coef.q = (3.0 * mid - 2.0 * u.hbar) * mid + u.q;
  b.coef.r = ((u.hbar - mid) * mid - u.q) * mid + u.r;
  return b;
}

}  // namespace dnnstab

#endif  // DNNSTAB_WEIGHTED_BASIS_HPP
