#ifndef DNNSTAB_LKF_HPP
#define DNNSTAB_LKF_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "dnnstab/lmi_variables.hpp"
#include "dnnstab/system.hpp"
#include "dnnstab/types.hpp"

namespace dnnstab {

/// A state history r(s) with derivative on [t_begin, t_end]. The integrands
/// built from it are assumed smooth between consecutive `knots`.
struct History {
  Eigen::Index dim = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::function<Vec(double)> state;
  std::function<Vec(double)> derivative;
  std::vector<double> knots;

  void require_covers(double a, double b) const {
    const double slack = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
    detail::require(a >= t_begin - slack && b <= t_end + slack,
                    "history does not cover the requested window");
  }
};

/// Parameters shared by chi and the functional: delay bound, rate,
/// partition point and the current delay value h(t).
struct LkfParams {
  double h = 1.0;
  double k = 0.1;
  double xi = 0.5;
  double ht = 0.5;
};

namespace detail {

// 10-point Gauss-Legendre on each piece between knots, with pieces no longer
// than (b - a) / min_pieces.
template <class T, class F>
T piecewise_gauss(F&& f, double a, double b, const std::vector<double>& knots, T zero,
                  int min_pieces = 32) {
  T acc = zero;
  if (b <= a) return acc;
  std::vector<double> cuts{a};
  for (double kn : knots)
    if (kn > a && kn < b) cuts.push_back(kn);
  cuts.push_back(b);
  const double max_len = (b - a) / min_pieces;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const int sub = std::max(1, static_cast<int>(std::ceil(len / max_len - 1e-9)));
    for (int j = 0; j < sub; ++j) {
      const double lo = cuts[i] + len * j / sub;
      const double hi = cuts[i] + len * (j + 1) / sub;
      const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
      for (std::size_t q = 0; q < x.size(); ++q) {
        if (x[q] == 0.0) {
          acc += (w[q] * r) * f(c);
        } else {
          acc += (w[q] * r) * f(c - r * x[q]);
          acc += (w[q] * r) * f(c + r * x[q]);
        }
      }
    }
  }
  return acc;
}

}  // namespace detail

/// Averaged single, double and triple integrals of r over [a, b]:
///   (1/L) int_a^b r,  (2/L^2) int_a^b int_th^b r,  (6/L^3) int_a^b int_th^b int_ph^b r.
/// A zero-length segment returns r(a) for all three.
struct SegmentAverages {
  Vec single, twofold, threefold;
};

inline SegmentAverages segment_averages(const History& hist, double a, double b) {
  SegmentAverages out;
  const double len = b - a;
  if (len <= 1e-14 * (1.0 + std::abs(b))) {
    out.single = out.twofold = out.threefold = hist.state(a);
    return out;
  }
  const Vec zero = Vec::Zero(hist.dim);
  out.single = detail::piecewise_gauss<Vec>([&](double s) { return hist.state(s); }, a, b, hist.knots, zero) / len;
  out.twofold = detail::piecewise_gauss<Vec>([&](double s) { return Vec((s - a) * hist.state(s)); }, a, b,
                                             hist.knots, zero) *
                (2.0 / (len * len));
  out.threefold = detail::piecewise_gauss<Vec>(
                      [&](double s) { return Vec(0.5 * (s - a) * (s - a) * hist.state(s)); }, a, b,
                      hist.knots, zero) *
                  (6.0 / (len * len * len));
  return out;
}

/// The 15-block augmented state at time t.
inline Vec assemble_chi(const DelayedNNSystem& sys, const History& hist, double t, const LkfParams& p) {
  detail::require(p.ht >= 0.0 && p.ht <= p.h, "assemble_chi: h(t) outside [0, h]");
  detail::require(p.xi > 0.0 && p.xi < p.h, "assemble_chi: need 0 < xi < h");
  hist.require_covers(t - p.h, t);
  const Eigen::Index n = hist.dim;
  const Vec r0 = hist.state(t);
  const Vec rd = hist.state(t - p.ht);
  const Vec rh = hist.state(t - p.h);
  const auto whole = segment_averages(hist, t - p.h, t);
  const auto near = segment_averages(hist, t - p.ht, t);
  const auto far = segment_averages(hist, t - p.h, t - p.ht);
  Vec chi(15 * n);
  const Vec parts[15] = {r0,           rd,          rh,          sys.g(r0),      sys.g(rd),
                         whole.single, near.single, far.single,  whole.twofold,  near.twofold,
                         far.twofold,  whole.threefold, near.threefold, far.threefold,
                         hist.state(t - p.xi)};
  for (int i = 0; i < 15; ++i) chi.segment(i * n, n) = parts[i];
  return chi;
}

/// Individual terms of the functional, for diagnostics.
struct LkfValue {
  double v1 = 0.0, v2 = 0.0, v3 = 0.0, v4 = 0.0, v5 = 0.0;
  double total() const { return v1 + v2 + v3 + v4 + v5; }
};

inline LkfValue evaluate_lkf_terms(const DelayedNNSystem& sys, const LmiVariables& v, const History& hist,
                                   double t, const LkfParams& p) {
  detail::require(p.ht >= 0.0 && p.ht <= p.h, "evaluate_lkf: h(t) outside [0, h]");
  hist.require_covers(t - p.h, t);
  const Eigen::Index n = hist.dim;
  const double h = p.h, k = p.k;
  const double a = t - h;
  const auto& kn = hist.knots;
  const double e2kt = std::exp(2.0 * k * t);
  const Vec r = hist.state(t);
  LkfValue out;

  // V1
  Vec delta(3 * n);
  delta.head(n) = r;
  delta.segment(n, n) = detail::piecewise_gauss<Vec>([&](double s) { return hist.state(s); }, a, t, kn, Vec::Zero(n));
  delta.tail(n) = detail::piecewise_gauss<Vec>([&](double s) { return Vec((s - a) * hist.state(s)); }, a, t, kn,
                                               Vec::Zero(n)) *
                  (2.0 / h);
  double prim = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gp = sys.g_primitive(i, r(i));
    prim += v.D1(i) * gp + v.D2(i) * (0.5 * sys.sector(i) * r(i) * r(i) - gp);
  }
  out.v1 = e2kt * (delta.dot(v.P * delta) + 2.0 * prim);

  // V2
  const double e2kh = std::exp(2.0 * k * h);
  auto eps_q = [&](double s) {
    const Vec x = hist.state(s);
    Vec e(2 * n);
    e << x, sys.g(x);
    return std::exp(2.0 * k * s) * e.dot(v.Q * e);
  };
  auto quad_u = [&](const Mat& u) {
    return [&, u](double s) {
      const Vec x = hist.state(s);
      return std::exp(2.0 * k * s) * x.dot(u * x);
    };
  };
  out.v2 = e2kh * (detail::piecewise_gauss<double>(eps_q, t - p.ht, t, kn, 0.0) +
                   detail::piecewise_gauss<double>(quad_u(v.U1), a, t, kn, 0.0) +
                   detail::piecewise_gauss<double>(quad_u(v.U2), t - p.xi, t, kn, 0.0) +
                   detail::piecewise_gauss<double>(quad_u(v.U3), a, t - p.xi, kn, 0.0));

  // V3: the double integrals over u collapse to the weight (s - t + h).
  const Mat zsum = v.Z1 + v.Z3 + v.Z4;
  out.v3 = h * detail::piecewise_gauss<double>(
                   [&](double s) {
                     const Vec x = hist.state(s), dx = hist.derivative(s);
                     return (s - a) * std::exp(2.0 * k * s) * (dx.dot(zsum * dx) + x.dot(v.Z2 * x));
                   },
                   a, t, kn, 0.0);

  // V4: triple integrals collapse to quadratic weights in w = s - t.
  out.v4 = detail::piecewise_gauss<double>(
      [&](double s) {
        const double w = s - t;
        const Vec dx = hist.derivative(s);
        return std::exp(2.0 * k * s) *
               (0.5 * (w + h) * (w + h) * dx.dot(v.N1 * dx) + 0.5 * (h * h - w * w) * dx.dot(v.N2 * dx));
      },
      a, t, kn, 0.0);

  // V5
  out.v5 = e2kt * (p.ht / h * r.dot(v.M1 * r) + (h - p.ht) / h * r.dot(v.M2 * r));
  return out;
}

/// V(t) = V1 + ... + V5 along the given history.
inline double evaluate_lkf(const DelayedNNSystem& sys, const LmiVariables& v, const History& hist, double t,
                           const LkfParams& p) {
  return evaluate_lkf_terms(sys, v, hist, t, p).total();
}

}  // namespace dnnstab

#endif  // DNNSTAB_LKF_HPP
