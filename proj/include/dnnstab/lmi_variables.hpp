#ifndef DNNSTAB_LMI_VARIABLES_HPP
#define DNNSTAB_LMI_VARIABLES_HPP

#include <string>
#include <vector>

#include "dnnstab/types.hpp"

namespace dnnstab {

/// Decision matrices of the exponential-stability criterion.
struct LmiVariables {
  Mat P;             // 3n x 3n symmetric
  Mat Q;             // 2n x 2n symmetric
  Mat U1, U2, U3;    // n x n symmetric
  Mat Z1, Z2, Z3, Z4;
  Mat N1, N2;
  Mat M1, M2;
  Vec D1, D2;        // diagonals
  Vec R1, R2;        // diagonals
  Mat S1;            // 4n x 4n, unstructured
  Mat S2;            // n x n, unstructured

  static LmiVariables zero(int n) {
    LmiVariables v;
    v.P = Mat::Zero(3 * n, 3 * n);
    v.Q = Mat::Zero(2 * n, 2 * n);
    for (Mat* m : {&v.U1, &v.U2, &v.U3, &v.Z1, &v.Z2, &v.Z3, &v.Z4, &v.N1, &v.N2, &v.M1, &v.M2})
      *m = Mat::Zero(n, n);
    for (Vec* d : {&v.D1, &v.D2, &v.R1, &v.R2}) *d = Vec::Zero(n);
    v.S1 = Mat::Zero(4 * n, 4 * n);
    v.S2 = Mat::Zero(n, n);
    return v;
  }

  int dimension() const { return static_cast<int>(D1.size()); }
};

/// Number of scalar unknowns: 29 n^2 + 12 n.
inline long count_variables(long n) {
  detail::require(n >= 1, "count_variables: n must be >= 1");
  const auto sym = [](long d) { return d * (d + 1) / 2; };
  return sym(3 * n) + sym(2 * n) + 3 * sym(n) + 4 * sym(n) + 2 * sym(n) + 2 * sym(n) + 4 * n +
         16 * n * n + n * n;
}

namespace detail {

// Visits every block in layout order: P, Q, U1-3, Z1-4, N1-2, M1-2, D1-2,
// R1-2, S1, S2. Symmetric blocks contribute their upper triangle row by row,
// diagonal blocks their diagonal, full blocks every entry row-major.
template <class Vars, class SymFn, class DiagFn, class FullFn>
void for_each_block(Vars& v, SymFn&& sym, DiagFn&& diag, FullFn&& full) {
  sym(v.P);
  sym(v.Q);
  sym(v.U1);
  sym(v.U2);
  sym(v.U3);
  sym(v.Z1);
  sym(v.Z2);
  sym(v.Z3);
  sym(v.Z4);
  sym(v.N1);
  sym(v.N2);
  sym(v.M1);
  sym(v.M2);
  diag(v.D1);
  diag(v.D2);
  diag(v.R1);
  diag(v.R2);
  full(v.S1);
  full(v.S2);
}

}  // namespace detail

inline Vec flatten(const LmiVariables& v) {
  std::vector<double> out;
  detail::for_each_block(
      v,
      [&](const Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = i; j < m.cols(); ++j) out.push_back(m(i, j));
      },
      [&](const Vec& d) {
        for (Eigen::Index i = 0; i < d.size(); ++i) out.push_back(d(i));
      },
      [&](const Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
      });
  return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline LmiVariables unflatten(const Vec& x, int n) {
  detail::require(x.size() == count_variables(n), "unflatten: vector length does not match layout");
  LmiVariables v = LmiVariables::zero(n);
  Eigen::Index at = 0;
  detail::for_each_block(
      v,
      [&](Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = i; j < m.cols(); ++j) {
            m(i, j) = x(at++);
            m(j, i) = m(i, j);
          }
      },
      [&](Vec& d) {
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = x(at++);
      },
      [&](Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = x(at++);
      });
  return v;
}

}  // namespace dnnstab

#endif  // DNNSTAB_LMI_VARIABLES_HPP
