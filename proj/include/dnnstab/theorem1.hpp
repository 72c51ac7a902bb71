#ifndef DNNSTAB_THEOREM1_HPP
#define DNNSTAB_THEOREM1_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dnnstab/lmi_problem.hpp"
#include "dnnstab/lmi_variables.hpp"
#include "dnnstab/system.hpp"
#include "dnnstab/types.hpp"
#include "dnnstab/weighted_basis.hpp"

// Assembly of the delay-dependent exponential stability LMIs.
//
// The augmented vector chi(t) stacks 15 blocks of size n:
//   1 r(t)            2 r(t - h(t))       3 r(t - h)
//   4 g(r(t))         5 g(r(t - h(t)))
//   6 (1/h) int_{t-h}^{t} r                7 (1/h(t)) int_{t-h(t)}^{t} r
//   8 (1/(h-h(t))) int_{t-h}^{t-h(t)} r
//   9, 10, 11  normalized double integrals 2/L^2 int_a^b int_s^b r over the
//              same three segments
//   12, 13, 14 normalized triple integrals 6/L^3 int_a^b int_u^b int_s^b r
//   15 r(t - xi)
// and every block matrix below is a quadratic form in chi.

namespace dnnstab {

/// Block selectors e_i (15n x n) and the dynamics row map u_v with
/// u_v^T chi = -K0 r(t) + K1 g(r(t)) + K2 g(r(t - h(t))).
struct SelectorBank {
  int n = 0;
  std::array<Mat, 15> blocks;
  Mat dynamics;

  /// One-based, as in chi's block numbering.
  const Mat& operator()(int i) const { return blocks.at(static_cast<std::size_t>(i - 1)); }
};

inline SelectorBank build_selectors(const DelayedNNSystem& sys) {
  sys.validate();
  const int n = static_cast<int>(sys.dimension());
  SelectorBank b;
  b.n = n;
  for (int i = 0; i < 15; ++i) {
    b.blocks[i] = Mat::Zero(15 * n, n);
    b.blocks[i].middleRows(i * n, n).setIdentity();
  }
  b.dynamics = -b(1) * sys.K0() + b(4) * sys.k1.transpose() + b(5) * sys.k2.transpose();
  return b;
}

struct Theorem1Params {
  double h = 1.0;
  double mu = 0.0;
  double k = 0.1;
  double xi = 0.5;
  /// Strictness margin; <= 0 selects 1e-6 (1 + ||F0||).
  double margin = 0.0;
};

/// Every block of the criterion evaluated at one set of decision matrices.
struct Theorem1Blocks {
  Mat delta1, delta2, delta3, delta4, delta5;
  Mat psi1, psi2, pi;
  Mat sigma1, sigma2, psi1_h, psi2_h;  // psi1_h/psi2_h: the tau-weighted pair
  Mat sigma;                           // sum of the eight h(t)-free blocks
  Mat theta1, theta2;
  Mat gamma;   // [[Z11, S1], [S1^T, Z12]]
  Mat omega;   // [[Z13, S1], [S1^T, Z13]]
  Mat omega1;  // [[Z4, S2], [S2^T, Z4]]

  Mat lmi1() const { return sigma + theta1; }
  Mat lmi2() const { return sigma + theta2; }
};

/// Precomputed, decision-independent data for one (system, h, mu, k, xi).
class Theorem1 {
 public:
  Theorem1(const DelayedNNSystem& sys, const Theorem1Params& p)
      : sys_(sys), p_(p), sel_(build_selectors(sys)) {
    const double kmin = sys.k0.minCoeff();
    detail::require(p.h > 0.0, "theorem1: h must be positive");
    detail::require(p.mu >= 0.0, "theorem1: mu must be non-negative");
    detail::require(p.k > 0.0 && p.k < kmin, "theorem1: need 0 < k < min diag(K0)");
    detail::require(p.xi > 0.0 && p.xi < p.h, "theorem1: need 0 < xi < h");
    basis_ = make_weighted_basis(-p.h, 0.0, 2.0 * p.k);
    build_structure();
  }

  const SelectorBank& selectors() const { return sel_; }
  const WeightedBasis& basis() const { return basis_; }
  const Theorem1Params& params() const { return p_; }
  const DelayedNNSystem& system() const { return sys_; }
  int n() const { return sel_.n; }

  /// Column groups used by the proof's bounds (15n x .), exposed for tests.
  const Mat& gamma_seg(int i) const { return i == 1 ? gam1_ : gam2_; }
  const Mat& chi_proj(int i) const { return chi_.at(static_cast<std::size_t>(i)); }

  Theorem1Blocks evaluate(const LmiVariables& v) const {
    const auto& u = sel_;
    const int n = sel_.n;
    const double h = p_.h, k = p_.k, mu = p_.mu, xi = p_.xi;
    const Mat& uv = sel_.dynamics;
    const Mat Lm = sys_.L();
    const Mat D1 = v.D1.asDiagonal(), D2 = v.D2.asDiagonal();
    const Mat R1 = v.R1.asDiagonal(), R2 = v.R2.asDiagonal();
    const auto& bc = basis_.coef;
    const double e2kh = std::exp(2.0 * k * h);
    const double em2kh = std::exp(-2.0 * k * h);

    Theorem1Blocks b;
    const Mat lg = u(1) * Lm - u(4);  // rows giving L r - g(r)

    b.delta1 = detail::sym(k * zeta_hat_ * v.P * zeta_hat_.transpose() +
                           2.0 * k * (u(4) * D1 * u(1).transpose() + lg * D2 * u(1).transpose()) +
                           u(4) * D1 * uv.transpose() + lg * D2 * uv.transpose());

    b.delta2 = e2kh * (u14_ * v.Q * u14_.transpose() + u(1) * v.U1 * u(1).transpose() +
                       u(1) * v.U2 * u(1).transpose()) -
               (1.0 - mu) * u25_ * v.Q * u25_.transpose() -
               std::exp(2.0 * k * (h - xi)) *
                   (u(15) * v.U2 * u(15).transpose() - u(15) * v.U3 * u(15).transpose()) -
               (u(3) * v.U1 * u(3).transpose() + u(3) * v.U3 * u(3).transpose());

    b.delta3 = h * h *
               (uv * v.Z1 * uv.transpose() + u(1) * v.Z2 * u(1).transpose() +
                uv * v.Z3 * uv.transpose() + uv * v.Z4 * uv.transpose());
    for (int j = 0; j < 3; ++j) {
      b.delta3 -= h / bc.norms[j] * (ip_[j] * v.Z2 * ip_[j].transpose());
    }
    for (int j = 0; j < 4; ++j) {
      b.delta3 -= h / bc.norms[j] * (chi_[j] * v.Z3 * chi_[j].transpose());
    }

    b.delta4 = 0.5 * h * h * uv * (v.N1 + v.N2) * uv.transpose();
    {
      Mat acc = Mat::Zero(15 * n, 15 * n);
      for (const auto& [w, vec, which] : n_terms_) {
        const Mat& nm = which == 1 ? v.N1 : v.N2;
        acc += w * vec * nm * vec.transpose();
      }
      b.delta4 -= em2kh * acc;
    }

    b.delta5 = mu / h * u(1) * (v.M1 - v.M2) * u(1).transpose();

    const Mat z13 = legendre_diag(v.Z1);
    b.omega = coupled(z13, v.S1, z13);
    b.gamma = coupled(legendre_diag(v.Z1 + v.N1), v.S1, legendre_diag(v.Z1 + v.N2));
    b.omega1 = coupled(v.Z4, v.S2, v.Z4);

    b.psi1 = -em2kh * gamma1_ * b.omega * gamma1_.transpose();
    b.psi2 = -(2.0 * k * h / std::expm1(2.0 * k * h)) * gamma2_ * b.omega1 * gamma2_.transpose();

    b.pi = detail::sym(u(1) * Lm * R1 * u(4).transpose() - u(4) * R1 * u(4).transpose() +
                       u(2) * Lm * R2 * u(5).transpose() - u(5) * R2 * u(5).transpose());

    b.sigma1 = detail::sym(left7_ * v.P * right_.transpose());
    b.sigma2 = detail::sym(k * u(1) * v.M1 * u(1).transpose() + u(1) * v.M1 * uv.transpose());
    b.psi1_h = detail::sym(left8_ * v.P * right_.transpose());
    b.psi2_h = detail::sym(k * u(1) * v.M2 * u(1).transpose() + u(1) * v.M2 * uv.transpose());

    b.sigma = b.delta1 + b.delta2 + b.delta3 + b.delta4 + b.delta5 + b.psi1 + b.psi2 + b.pi;
    b.theta1 = b.sigma1 + b.sigma2;
    b.theta2 = b.psi1_h + b.psi2_h;
    (void)n;
    return b;
  }

 private:
  static Mat coupled(const Mat& a, const Mat& s, const Mat& c) {
    Mat out(a.rows() + c.rows(), a.cols() + c.cols());
    out << a, s, s.transpose(), c;
    return out;
  }
  static Mat legendre_diag(const Mat& z) {
    const Eigen::Index n = z.rows();
    Mat out = Mat::Zero(4 * n, 4 * n);
    for (int i = 0; i < 4; ++i) out.block(i * n, i * n, n, n) = (2.0 * i + 1.0) * z;
    return out;
  }

  void build_structure() {
    const auto& u = sel_;
    const double h = p_.h;
    const auto& bc = basis_.coef;
    const double kb = bc.kbar, c = bc.c, m = bc.m, hb = bc.hbar, q = bc.q, r = bc.r;

    zeta_hat_ = detail::hcat({u(1), h * u(6), h * u(9)});
    u14_ = detail::hcat({u(1), u(4)});
    u25_ = detail::hcat({u(2), u(5)});

    // int_{t-h}^{t} g_k(s - t) r(s) ds, k = 0, 1, 2, in chi coordinates.
    ip_[0] = h * u(6);
    ip_[1] = (kb - h) * h * u(6) + 0.5 * h * h * u(9);
    ip_[2] = (h * h - c * h + m) * h * u(6) + (c - 2.0 * h) * 0.5 * h * h * u(9) +
             (h * h * h / 3.0) * u(12);

    // int_{t-h}^{t} g_k(s - t) r'(s) ds, k = 0..3.
    chi_[0] = u(1) - u(3);
    chi_[1] = kb * u(1) + (h - kb) * u(3) - h * u(6);
    chi_[2] = m * u(1) + (c * h - m - h * h) * u(3) + (2.0 * h - c) * h * u(6) - h * h * u(9);
    chi_[3] = r * u(1) + (h * h * h - hb * h * h + q * h - r) * u(3) -
              (3.0 * h * h - 2.0 * hb * h + q) * h * u(6) - (2.0 * hb - 6.0 * h) * 0.5 * h * h * u(9) -
              h * h * h * u(12);

    // Double-integral bounds on the two delay segments.
    n_terms_ = {
        {2.0, u(1) - u(7), 1},
        {4.0, u(1) + 2.0 * u(7) - 3.0 * u(10), 1},
        {2.0, u(2) - u(8), 1},
        {4.0, u(2) + 2.0 * u(8) - 3.0 * u(11), 1},
        {2.0, u(2) - u(7), 2},
        {4.0, u(2) - 4.0 * u(7) + 3.0 * u(10), 2},
        {2.0, u(3) - u(8), 2},
        {4.0, u(3) - 4.0 * u(8) + 3.0 * u(11), 2},
    };

    auto legendre_seg = [&](int i) {
      return detail::hcat({u(i) - u(i + 1), u(i) + u(i + 1) - 2.0 * u(i + 6),
                           u(i) - u(i + 1) + 6.0 * u(i + 6) - 6.0 * u(i + 9),
                           u(i) + u(i + 1) - 12.0 * u(i + 6) + 30.0 * u(i + 9) - 20.0 * u(i + 12)});
    };
    gam1_ = legendre_seg(1);
    gam2_ = legendre_seg(2);
    gamma1_ = detail::hcat({gam1_, gam2_});
    gamma2_ = detail::hcat({u(1) - u(2), u(2) - u(3)});

    left7_ = detail::hcat({u(1), h * u(7), h * u(9)});
    left8_ = detail::hcat({u(1), h * u(8), h * u(9)});
    right_ = detail::hcat({sel_.dynamics, u(1) - u(3), 2.0 * (u(1) - u(6))});
  }

  struct NTerm {
    double weight;
    Mat vec;
    int which;
  };

  DelayedNNSystem sys_;
  Theorem1Params p_;
  SelectorBank sel_;
  WeightedBasis basis_;
  Mat zeta_hat_, u14_, u25_;
  std::array<Mat, 3> ip_;
  std::array<Mat, 4> chi_;
  std::vector<NTerm> n_terms_;
  Mat gam1_, gam2_, gamma1_, gamma2_;
  Mat left7_, left8_, right_;
};

/// Names of the constraints in assembly order.
inline const std::vector<std::string>& theorem1_constraint_names() {
  static const std::vector<std::string> names = {
      "sigma_theta1", "sigma_theta2", "gamma", "omega1", "P",  "Q",  "U1", "U2", "U3", "Z1", "Z2",
      "Z3",           "Z4",           "N1",    "N2",     "M1", "M2", "D1", "D2", "R1", "R2"};
  return names;
}

/// The four structural constraints plus positivity of every cone variable,
/// as affine maps of the flat decision vector.
inline LmiProblem assemble_theorem1(const DelayedNNSystem& sys, const Theorem1Params& p) {
  const Theorem1 thm(sys, p);
  const int n = thm.n();
  const int nv = static_cast<int>(count_variables(n));

  LmiProblem prob;
  prob.num_vars = nv;
  prob.meta = {n, p.h, p.mu, p.k, p.xi};

  // One evaluation per unit vector; reused across all constraints.
  std::vector<Theorem1Blocks> samples;
  samples.reserve(static_cast<std::size_t>(nv) + 1);
  Vec x = Vec::Zero(nv);
  samples.push_back(thm.evaluate(unflatten(x, n)));
  for (int j = 0; j < nv; ++j) {
    x(j) = 1.0;
    samples.push_back(thm.evaluate(unflatten(x, n)));
    x(j) = 0.0;
  }
  auto from_samples = [&](const std::string& name, Sense sense, auto pick) {
    int call = 0;
    return build_affine_constraint(name, sense, nv, [&](const Vec&) -> Mat {
      return pick(samples[static_cast<std::size_t>(call++)]);
    });
  };
  prob.constraints.push_back(
      from_samples("sigma_theta1", Sense::leq, [](const Theorem1Blocks& b) { return b.lmi1(); }));
  prob.constraints.push_back(
      from_samples("sigma_theta2", Sense::leq, [](const Theorem1Blocks& b) { return b.lmi2(); }));
  prob.constraints.push_back(
      from_samples("gamma", Sense::geq, [](const Theorem1Blocks& b) { return b.gamma; }));
  prob.constraints.push_back(
      from_samples("omega1", Sense::geq, [](const Theorem1Blocks& b) { return b.omega1; }));

  auto cone = [&](const std::string& name, auto pick) {
    prob.constraints.push_back(build_affine_constraint(
        name, Sense::geq, nv, [&](const Vec& xx) -> Mat { return pick(unflatten(xx, n)); }));
  };
  cone("P", [](const LmiVariables& v) { return v.P; });
  cone("Q", [](const LmiVariables& v) { return v.Q; });
  cone("U1", [](const LmiVariables& v) { return v.U1; });
  cone("U2", [](const LmiVariables& v) { return v.U2; });
  cone("U3", [](const LmiVariables& v) { return v.U3; });
  cone("Z1", [](const LmiVariables& v) { return v.Z1; });
  cone("Z2", [](const LmiVariables& v) { return v.Z2; });
  cone("Z3", [](const LmiVariables& v) { return v.Z3; });
  cone("Z4", [](const LmiVariables& v) { return v.Z4; });
  cone("N1", [](const LmiVariables& v) { return v.N1; });
  cone("N2", [](const LmiVariables& v) { return v.N2; });
  cone("M1", [](const LmiVariables& v) { return v.M1; });
  cone("M2", [](const LmiVariables& v) { return v.M2; });
  cone("D1", [](const LmiVariables& v) -> Mat { return v.D1.asDiagonal(); });
  cone("D2", [](const LmiVariables& v) -> Mat { return v.D2.asDiagonal(); });
  cone("R1", [](const LmiVariables& v) -> Mat { return v.R1.asDiagonal(); });
  cone("R2", [](const LmiVariables& v) -> Mat { return v.R2.asDiagonal(); });

  double f0 = 0.0;
  for (const auto& c : prob.constraints) f0 = std::max(f0, c.constant.norm());
  prob.margin = p.margin > 0.0 ? p.margin : 1e-6 * (1.0 + f0);
  return prob;
}

}  // namespace dnnstab

#endif  // DNNSTAB_THEOREM1_HPP
