#ifndef DNNSTAB_SYSTEM_HPP
#define DNNSTAB_SYSTEM_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dnnstab/types.hpp"

namespace dnnstab {

/// Per-coordinate activation f_j with slope bound `slope`.
struct Activation {
  enum class Kind { tanh, linear, saturation };
  Kind kind = Kind::tanh;
  double slope = 1.0;

  double value(double x) const {
    switch (kind) {
      case Kind::tanh: return slope * std::tanh(x);
      case Kind::linear: return slope * x;
      case Kind::saturation: return 0.5 * slope * (std::abs(x + 1.0) - std::abs(x - 1.0));
    }
    return 0.0;
  }
  double derivative(double x) const {
    switch (kind) {
      case Kind::tanh: {
        const double c = std::cosh(x);
        return slope / (c * c);
      }
      case Kind::linear: return slope;
      case Kind::saturation: return std::abs(x) < 1.0 ? slope : 0.0;
    }
    return 0.0;
  }
  /// int_0^x f(s) ds
  double primitive(double x) const {
    switch (kind) {
      case Kind::tanh: {
        // log cosh x, overflow-safe
        const double a = std::abs(x);
        return slope * (a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0));
      }
      case Kind::linear: return 0.5 * slope * x * x;
      case Kind::saturation: {
        const double a = std::abs(x);
        return a <= 1.0 ? 0.5 * slope * x * x : slope * (a - 0.5);
      }
    }
    return 0.0;
  }
};

inline std::string to_string(Activation::Kind k) {
  switch (k) {
    case Activation::Kind::tanh: return "tanh";
    case Activation::Kind::linear: return "linear";
    case Activation::Kind::saturation: return "saturation";
  }
  return "?";
}

/// z' = -K0 z + K1 f(z) + K2 f(z(t - h(t))) + input, and its shift
/// r = z - z* whose nonlinearity g(r) = f(r + z*) - f(z*) satisfies
/// 0 <= g_j(r_j) / r_j <= L_j.
struct DelayedNNSystem {
  Vec k0;  // diagonal of K0, strictly positive
  Mat k1;
  Mat k2;
  Vec sector;  // diagonal of L
  std::vector<Activation> activations;
  Vec input;
  Vec equilibrium;  // z*, zero unless shifted

  Eigen::Index dimension() const { return k0.size(); }

  Mat K0() const { return k0.asDiagonal(); }
  Mat L() const { return sector.asDiagonal(); }

  void validate() const {
    const Eigen::Index n = k0.size();
    detail::require(n >= 1, "system: dimension must be >= 1");
    detail::require(k1.rows() == n && k1.cols() == n, "system: K1 must be n x n");
    detail::require(k2.rows() == n && k2.cols() == n, "system: K2 must be n x n");
    detail::require(sector.size() == n, "system: L must have n entries");
    detail::require(static_cast<Eigen::Index>(activations.size()) == n,
                    "system: need one activation per coordinate");
    detail::require((k0.array() > 0.0).all(), "system: K0 entries must be positive");
    detail::require((sector.array() >= 0.0).all(), "system: L entries must be non-negative");
    for (Eigen::Index j = 0; j < n; ++j) {
      detail::require(activations[j].slope <= sector(j) * (1.0 + 1e-12) && activations[j].slope >= 0.0,
                      "system: activation slope exceeds its sector bound");
    }
    if (input.size() != 0) detail::require(input.size() == n, "system: input must have n entries");
    if (equilibrium.size() != 0) {
      detail::require(equilibrium.size() == n, "system: equilibrium must have n entries");
    }
  }

  Vec f(const Vec& z) const {
    Vec out(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) out(j) = activations[j].value(z(j));
    return out;
  }

  /// Shifted nonlinearity g(r) = f(r + z*) - f(z*).
  Vec g(const Vec& r) const {
    if (equilibrium.size() == 0) return f(r);
    return f(r + equilibrium) - f(equilibrium);
  }

  /// int_0^{r_j} g_j(s) ds
  double g_primitive(Eigen::Index j, double r) const {
    const auto& a = activations[j];
    if (equilibrium.size() == 0) return a.primitive(r);
    const double zs = equilibrium(j);
    return a.primitive(r + zs) - a.primitive(zs) - a.value(zs) * r;
  }

  /// r' for current state r and delayed state rd.
  Vec rhs(const Vec& r, const Vec& rd) const {
    return -k0.cwiseProduct(r) + k1 * g(r) + k2 * g(rd);
  }

  /// Right-hand side of the unshifted system.
  Vec rhs_unshifted(const Vec& z, const Vec& zd) const {
    Vec out = -k0.cwiseProduct(z) + k1 * f(z) + k2 * f(zd);
    if (input.size() != 0) out += input;
    return out;
  }
};

/// Time-varying delay h(t) with 0 <= h(t) <= h_max and |h'(t)| <= mu_max.
struct DelaySignal {
  enum class Kind { constant, sinusoid, table };
  Kind kind = Kind::constant;
  double offset = 0.0;     // constant value, or a in a + b sin(omega t)
  double amplitude = 0.0;  // b
  double omega = 0.0;
  std::vector<double> times;   // table knots, strictly increasing
  std::vector<double> values;  // piecewise-linear table values

  static DelaySignal constant_delay(double h) {
    DelaySignal d;
    d.kind = Kind::constant;
    d.offset = h;
    return d;
  }
  static DelaySignal sinusoid(double a, double b, double omega) {
    DelaySignal d;
    d.kind = Kind::sinusoid;
    d.offset = a;
    d.amplitude = b;
    d.omega = omega;
    return d;
  }
  static DelaySignal table(std::vector<double> t, std::vector<double> v) {
    detail::require(t.size() == v.size() && t.size() >= 2, "delay table needs >= 2 knots");
    for (std::size_t i = 1; i < t.size(); ++i) {
      detail::require(t[i] > t[i - 1], "delay table times must increase");
    }
    DelaySignal d;
    d.kind = Kind::table;
    d.times = std::move(t);
    d.values = std::move(v);
    return d;
  }

  double value(double t) const {
    switch (kind) {
      case Kind::constant: return offset;
      case Kind::sinusoid: return offset + amplitude * std::sin(omega * t);
      case Kind::table: {
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
        const double s = (t - times[i]) / (times[i + 1] - times[i]);
        return values[i] + s * (values[i + 1] - values[i]);
      }
    }
    return 0.0;
  }
  double rate(double t) const {
    switch (kind) {
      case Kind::constant: return 0.0;
      case Kind::sinusoid: return amplitude * omega * std::cos(omega * t);
      case Kind::table: {
        if (t < times.front() || t >= times.back()) return 0.0;
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
        return (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
      }
    }
    return 0.0;
  }
  double h_max() const {
    switch (kind) {
      case Kind::constant: return offset;
      case Kind::sinusoid: return offset + std::abs(amplitude);
      case Kind::table: return *std::max_element(values.begin(), values.end());
    }
    return 0.0;
  }
  double h_min() const {
    switch (kind) {
      case Kind::constant: return offset;
      case Kind::sinusoid: return offset - std::abs(amplitude);
      case Kind::table: return *std::min_element(values.begin(), values.end());
    }
    return 0.0;
  }
  double mu_max() const {
    switch (kind) {
      case Kind::constant: return 0.0;
      case Kind::sinusoid: return std::abs(amplitude * omega);
      case Kind::table: {
        double m = 0.0;
        for (std::size_t i = 1; i < times.size(); ++i) {
          m = std::max(m, std::abs((values[i] - values[i - 1]) / (times[i] - times[i - 1])));
        }
        return m;
      }
    }
    return 0.0;
  }
  void validate() const {
    detail::require(h_min() >= 0.0, "delay signal must be non-negative");
    detail::require(std::isfinite(h_max()) && std::isfinite(mu_max()), "delay signal not finite");
  }
};

/// Bundled systems from the two numerical studies.
inline DelayedNNSystem example1_system() {
  DelayedNNSystem s;
  s.k0 = Vec(2);
  s.k0 << 2.0, 3.5;
  s.k1 = Mat(2, 2);
  s.k1 << -1.0, 0.5, 0.5, -1.0;
  s.k2 = Mat(2, 2);
  s.k2 << -0.5, 0.5, 0.5, 0.5;
  s.sector = Vec::Ones(2);
  s.activations = {{Activation::Kind::tanh, 1.0}, {Activation::Kind::tanh, 1.0}};
  s.input = Vec::Zero(2);
  return s;
}

inline DelayedNNSystem example2_system() {
  DelayedNNSystem s;
  s.k0 = Vec(4);
  s.k0 << 1.2769, 0.6231, 0.9230, 0.4480;
  s.k1 = Mat(4, 4);
  s.k1 << -0.0373, 0.4852, -0.3351, 0.2336,  //
      -1.6033, 0.5988, -0.3224, 1.2352,      //
      0.3394, -0.0860, -0.3824, -0.5785,     //
      -0.1311, 0.3253, -0.9534, -0.5015;
  s.k2 = Mat(4, 4);
  s.k2 << 0.8674, -1.2405, -0.5325, -0.0220,  //
      0.0474, -0.9164, 0.0360, 0.9816,        //
      1.8495, 2.6117, -0.3788, 0.0824,        //
      -2.0413, 0.5179, 1.1734, -0.2775;
  s.sector = Vec(4);
  s.sector << 0.1137, 0.1279, 0.7994, 0.2368;
  for (Eigen::Index j = 0; j < 4; ++j) s.activations.push_back({Activation::Kind::tanh, s.sector(j)});
  s.input = Vec::Zero(4);
  return s;
}

}  // namespace dnnstab

#endif  // DNNSTAB_SYSTEM_HPP
