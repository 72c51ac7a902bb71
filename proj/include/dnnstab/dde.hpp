#ifndef DNNSTAB_DDE_HPP
#define DNNSTAB_DDE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dnnstab/lkf.hpp"
#include "dnnstab/system.hpp"
#include "dnnstab/types.hpp"

namespace dnnstab {

/// Initial history phi on [-h_max, 0].
struct InitialHistory {
  std::function<Vec(double)> value;
  std::function<Vec(double)> derivative;

  static InitialHistory constant(const Vec& v) {
    return {[v](double) { return v; }, [v](double) { return Vec::Zero(v.size()); }};
  }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> r;
  std::vector<Vec> dr;  // right-hand side at each sample
  std::vector<double> delay;
  double step = 0.0;
  int interpolation_order = 3;
  InitialHistory phi;

  Eigen::Index dimension() const { return r.empty() ? 0 : r.front().size(); }
  std::size_t size() const { return t.size(); }

  /// Cubic Hermite interpolation on the grid, phi before t[0].
  Vec state_at(double s) const { return interpolate(s, false); }
  Vec derivative_at(double s) const { return interpolate(s, true); }

  /// History view on [t0 - h_hist, t_end] with grid knots.
  History as_history(double h_hist) const {
    History hist;
    hist.dim = dimension();
    hist.t_begin = t.front() - h_hist;
    hist.t_end = t.back();
    hist.state = [this](double s) { return state_at(s); };
    hist.derivative = [this](double s) { return derivative_at(s); };
    hist.knots = t;
    return hist;
  }

 private:
  Vec interpolate(double s, bool deriv) const {
    if (s <= t.front()) return deriv ? phi.derivative(s) : phi.value(s);
    if (s >= t.back()) return deriv ? dr.back() : r.back();
    auto i = static_cast<std::size_t>((s - t.front()) / step);
    i = std::min(i, t.size() - 2);
    while (i > 0 && t[i] > s) --i;
    while (i + 2 < t.size() && t[i + 1] < s) ++i;
    const double hstep = t[i + 1] - t[i];
    const double u = (s - t[i]) / hstep;
    if (!deriv) {
      const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u), h10 = u * (1.0 - u) * (1.0 - u);
      const double h01 = u * u * (3.0 - 2.0 * u), h11 = u * u * (u - 1.0);
      return h00 * r[i] + h10 * hstep * dr[i] + h01 * r[i + 1] + h11 * hstep * dr[i + 1];
    }
    const double d00 = 6.0 * u * u - 6.0 * u, d10 = 3.0 * u * u - 4.0 * u + 1.0;
    const double d01 = -d00, d11 = 3.0 * u * u - 2.0 * u;
    return (d00 * r[i] + d01 * r[i + 1]) / hstep + d10 * dr[i] + d11 * dr[i + 1];
  }
};

struct SimulationOptions {
  double blowup = 1e12;
};

/// Classical RK4 for r' = -K0 r + K1 g(r) + K2 g(r(t - h(t))), with cubic
/// Hermite interpolation of the computed solution for delayed arguments.
inline Trajectory simulate(const DelayedNNSystem& sys, const DelaySignal& delay, const InitialHistory& phi,
                           double horizon, double step, const SimulationOptions& opt = {}) {
  sys.validate();
  delay.validate();
  detail::require(horizon > 0.0 && step > 0.0, "simulate: horizon and step must be positive");
  if (delay.h_min() > 0.0) detail::require(step <= delay.h_min() / 4.0 * (1.0 + 1e-12), "simulate: step exceeds h_min/4");
  detail::require(static_cast<bool>(phi.value), "simulate: missing initial history");

  Trajectory tr;
  tr.step = step;
  tr.phi = phi;
  tr.phi.derivative = phi.derivative ? phi.derivative : [n = sys.dimension()](double) { return Vec::Zero(n); };
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(horizon / step - 1e-9)));
  tr.t.reserve(steps + 1);
  tr.r.reserve(steps + 1);
  tr.dr.reserve(steps + 1);

  // Delayed state: history, grid interpolant, or first-order extrapolation
  // past the last accepted sample.
  auto delayed = [&](double s) -> Vec {
    const double tau = s - delay.value(s);
    if (tau <= 0.0 || tr.t.empty()) return tr.phi.value(std::min(tau, 0.0));
    if (tau <= tr.t.back()) return tr.state_at(tau);
    return tr.r.back() + (tau - tr.t.back()) * tr.dr.back();
  };
  auto f = [&](double s, const Vec& x) { return sys.rhs(x, delayed(s)); };

  Vec x = phi.value(0.0);
  tr.t.push_back(0.0);
  tr.r.push_back(x);
  tr.dr.push_back(f(0.0, x));
  tr.delay.push_back(delay.value(0.0));
  for (std::size_t i = 0; i < steps; ++i) {
    const double s = tr.t.back();
    const Vec k1 = tr.dr.back();
    const Vec k2 = f(s + 0.5 * step, x + 0.5 * step * k1);
    const Vec k3 = f(s + 0.5 * step, x + 0.5 * step * k2);
    const Vec k4 = f(s + step, x + step * k3);
    x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > opt.blowup) {
      throw NumericalFailure("simulate: blow-up at t = " + std::to_string(s + step));
    }
    const double sn = static_cast<double>(i + 1) * step;
    const Vec dx = f(sn, x);
    tr.t.push_back(sn);
    tr.r.push_back(x);
    tr.dr.push_back(dx);
    tr.delay.push_back(delay.value(sn));
  }
  return tr;
}

struct EquilibriumOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;
};

/// Solves K0 z = (K1 + K2) f(z) + input by damped Newton, falling back to the
/// fixed-point map z <- K0^{-1}((K1 + K2) f(z) + input).
inline Vec find_equilibrium(const DelayedNNSystem& sys, const EquilibriumOptions& opt = {}) {
  sys.validate();
  const Eigen::Index n = sys.dimension();
  const Vec eps = sys.input.size() ? sys.input : Vec::Zero(n);
  const Mat ksum = sys.k1 + sys.k2;
  auto residual = [&](const Vec& z) -> Vec { return sys.k0.cwiseProduct(z) - ksum * sys.f(z) - eps; };
  Vec z = eps.cwiseQuotient(sys.k0);
  Vec res = residual(z);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (res.norm() <= opt.tolerance) return z;
    Vec fp(n);
    for (Eigen::Index j = 0; j < n; ++j) fp(j) = sys.activations[static_cast<std::size_t>(j)].derivative(z(j));
    const Mat jac = Mat(sys.k0.asDiagonal()) - ksum * fp.asDiagonal();
    Eigen::FullPivLU<Mat> lu(jac);
    bool moved = false;
    if (lu.isInvertible()) {
      const Vec dz = lu.solve(-res);
      for (double a = 1.0; a > 1e-6; a *= 0.5) {
        const Vec zn = z + a * dz;
        const Vec rn = residual(zn);
        if (rn.norm() < (1.0 - 1e-4 * a) * res.norm()) {
          z = zn;
          res = rn;
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      z = (ksum * sys.f(z) + eps).cwiseQuotient(sys.k0);
      res = residual(z);
    }
  }
  if (res.norm() <= opt.tolerance) return z;
  throw NumericalFailure("find_equilibrium: no convergence in " + std::to_string(opt.max_iterations) +
                         " iterations (residual " + std::to_string(res.norm()) + ")");
}

struct DecayFit {
  double rate = 0.0;       // k-hat
  double constant = 0.0;   // exp(intercept): |r(t)| ~ constant e^{-rate t}
  double t_begin = 0.0;
  double t_end = 0.0;
  bool shrunk = false;     // window cut where |r| reached numerical zero
  std::size_t samples = 0;
};

/// Least-squares fit of ln|r(t)| = c - k t over the window.
inline DecayFit estimate_decay_rate(const Trajectory& tr, double t_a, double t_b, double zero = 1e-280) {
  detail::require(t_b > t_a, "estimate_decay_rate: empty window");
  DecayFit fit;
  fit.t_begin = t_a;
  fit.t_end = t_b;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.t[i] < t_a || tr.t[i] > t_b) continue;
    const double nr = tr.r[i].norm();
    if (!(nr > zero)) {
      fit.shrunk = true;
      fit.t_end = i > 0 ? tr.t[i - 1] : t_a;
      break;
    }
    const double y = std::log(nr);
    sx += tr.t[i];
    sy += y;
    sxx += tr.t[i] * tr.t[i];
    sxy += tr.t[i] * y;
    ++m;
  }
  if (m < 2) throw InvalidArgument("estimate_decay_rate: fewer than two usable samples in window");
  const double md = static_cast<double>(m);
  const double den = md * sxx - sx * sx;
  const double slope = (md * sxy - sx * sy) / den;
  fit.rate = -slope;
  fit.constant = std::exp((sy - slope * sx) / md);
  fit.samples = m;
  return fit;
}

}  // namespace dnnstab

#endif  // DNNSTAB_DDE_HPP
