#ifndef DNNSTAB_TYPES_HPP
#define DNNSTAB_TYPES_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dnnstab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// The moment sequence does not admit the cubic orthogonal basis.
class DegenerateBasis : public std::runtime_error {
 public:
  explicit DegenerateBasis(const std::string& what) : std::runtime_error(what) {}
};

/// Quadrature, factorization or iteration broke down.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

inline Mat sym(const Mat& a) { return a + a.transpose(); }

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

inline Mat blkdiag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline Mat hcat(std::initializer_list<Mat> parts) {
  Eigen::Index rows = parts.begin()->rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw InvalidArgument("hcat: row mismatch");
    out.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return out;
}

inline double min_eigenvalue(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(a.rows() - 1);
}

}  // namespace detail
}  // namespace dnnstab

#endif  // DNNSTAB_TYPES_HPP
