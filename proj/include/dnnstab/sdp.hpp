#ifndef DNNSTAB_SDP_HPP
#define DNNSTAB_SDP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "dnnstab/lmi_problem.hpp"
#include "dnnstab/types.hpp"

namespace dnnstab {

enum class FeasibilityStatus { feasible, infeasible_or_undecided };

inline std::string to_string(FeasibilityStatus s) {
  return s == FeasibilityStatus::feasible ? "feasible" : "infeasible-or-undecided";
}

/// Why a non-feasible run stopped.
enum class StopReason { verified, bound_positive, budget, stalled };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::verified: return "verified";
    case StopReason::bound_positive: return "bound-positive";
    case StopReason::budget: return "budget";
    case StopReason::stalled: return "stalled";
  }
  return "?";
}

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::infeasible_or_undecided;
  StopReason reason = StopReason::budget;
  Vec witness;                    // empty unless feasible
  double achieved_margin = 0.0;   // min over constraints of the verified slack
  int iterations = 0;             // Newton steps
  std::vector<double> residuals;  // min-eig of each slack matrix at the last iterate
  double lower_bound = -std::numeric_limits<double>::infinity();  // on the optimal shift

  bool feasible() const { return status == FeasibilityStatus::feasible; }
};

struct SolverOptions {
  int max_iterations = 400;
  /// Radius of the ball the witness is searched in (scaled coordinates).
  double radius = 1e4;
  double barrier_growth = 8.0;
  double initial_barrier = 1.0;
  double centering_tol = 1e-2;  // Newton decrement squared
};

/// Per-constraint minimum eigenvalue of the slack matrix, computed with a
/// dense symmetric tridiagonalization + implicit QR eigensolver.
inline std::vector<double> verify_witness(const LmiProblem& p, const Vec& x) {
  detail::require(x.size() == p.num_vars, "verify_witness: witness length mismatch");
  std::vector<double> out;
  out.reserve(p.constraints.size());
  for (const auto& c : p.constraints) out.push_back(detail::min_eigenvalue(c.slack_matrix(x, p.margin)));
  return out;
}

/// The non-negativity tolerance used when accepting a witness.
inline double witness_tolerance(const LmiProblem& p, const Vec& x) {
  double fn = 0.0;
  for (const auto& c : p.constraints) fn = std::max(fn, c.evaluate(x).norm());
  return 1e-9 * (1.0 + fn);
}

/// External or native backends implement this contract.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual FeasibilityResult solve(const LmiProblem& p, int budget) const = 0;
};

namespace detail {

// One constraint in the solver's normalized orientation: G(x) = s (F(x) - m I) / scale,
// with s = +1 for geq and -1 for leq, so feasibility means G(x) >= 0.
struct NormalizedConstraint {
  int dim = 0;
  Mat g0;
  std::vector<int> vars;                  // distinct variables, ascending
  std::vector<std::vector<LmiTerm>> per;  // terms grouped by entry of vars
  std::vector<std::vector<int>> support;  // distinct rows touched by each variable
  Eigen::SparseMatrix<double> coef;       // packed upper triangle x num_vars, off-diagonals doubled
};

inline int packed_index(int r, int c) { return c * (c + 1) / 2 + r; }  // r <= c

inline NormalizedConstraint normalize(const LmiConstraint& c, double margin, int num_vars) {
  NormalizedConstraint nc;
  nc.dim = c.dim;
  for (int i = 0; i < c.dim; ++i)
    for (int j = 0; j < c.dim; ++j)
      require(std::abs(c.constant(i, j) - c.constant(j, i)) <= 1e-12 * (1.0 + c.constant.norm()),
              "constraint " + c.name + " has a non-symmetric constant term");
  const double s = c.sense == Sense::geq ? 1.0 : -1.0;
  const double scale = 1.0 + c.constant.norm();
  nc.g0 = s * c.constant / scale;
  nc.g0.diagonal().array() -= margin / scale;
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : c.terms) {
    require(t.var >= 0 && t.var < num_vars && t.row <= t.col && t.col < c.dim,
            "constraint " + c.name + " has a malformed term");
    const double v = s * t.value / scale;
    if (nc.vars.empty() || nc.vars.back() != t.var) {
      if (!nc.vars.empty() && t.var < nc.vars.back()) {
        throw InvalidArgument("constraint " + c.name + ": terms must be sorted by variable");
      }
      nc.vars.push_back(t.var);
      nc.per.emplace_back();
    }
    nc.per.back().push_back({t.var, t.row, t.col, v});
    trip.emplace_back(packed_index(t.row, t.col), t.var, t.row == t.col ? v : 2.0 * v);
  }
  for (const auto& terms : nc.per) {
    std::vector<int> rows;
    for (const auto& t : terms) {
      rows.push_back(t.row);
      rows.push_back(t.col);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    nc.support.push_back(std::move(rows));
  }
  const int packed = c.dim * (c.dim + 1) / 2;
  nc.coef.resize(packed, num_vars);
  nc.coef.setFromTriplets(trip.begin(), trip.end());
  nc.coef.makeCompressed();
  return nc;
}

inline Vec pack_upper(const Mat& a) {
  const auto d = static_cast<int>(a.rows());
  Vec out(d * (d + 1) / 2);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) out(packed_index(r, c)) = a(r, c);
  return out;
}

inline Mat evaluate_normalized(const NormalizedConstraint& nc, const Vec& x) {
  Mat g = nc.g0;
  for (std::size_t i = 0; i < nc.vars.size(); ++i) {
    const double xv = x(nc.vars[i]);
    if (xv == 0.0) continue;
    for (const auto& t : nc.per[i]) {
      g(t.row, t.col) += t.value * xv;
      if (t.row != t.col) g(t.col, t.row) += t.value * xv;
    }
  }
  return g;
}

}  // namespace detail

/// Shifted log-det barrier method: minimize t subject to G_j(x) + t I > 0 and
/// |x| < R, following the central path with damped Newton steps. Stops as soon
/// as t < 0 and the witness passes the independent eigenvalue check, or when
/// the duality bound proves t* > 0 inside the ball.
class BarrierSolver final : public SdpBackend {
 public:
  explicit BarrierSolver(SolverOptions opt = {}) : opt_(opt) {}

  std::string name() const override { return "native-barrier"; }

  FeasibilityResult solve(const LmiProblem& p, int budget) const override {
    detail::require(budget >= 1, "solve_feasibility: budget must be >= 1");
    const int nv = p.num_vars;
    std::vector<detail::NormalizedConstraint> cons;
    cons.reserve(p.constraints.size());
    int total_dim = 0;
    for (const auto& c : p.constraints) {
      cons.push_back(detail::normalize(c, p.margin, nv));
      total_dim += c.dim;
    }
    const double R2 = opt_.radius * opt_.radius;
    const double m_barrier = total_dim + 1.0;

    FeasibilityResult res;
    Vec x = Vec::Zero(nv);
    std::vector<Mat> g(cons.size());
    double lam_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cons.size(); ++j) {
      g[j] = detail::evaluate_normalized(cons[j], x);
      lam_min = std::min(lam_min, detail::min_eigenvalue(g[j]));
    }
    double t = -lam_min + 1.0;
    double eta = opt_.initial_barrier;

    auto try_accept = [&](const Vec& cand) {
      auto mins = verify_witness(p, cand);
      const double tol = witness_tolerance(p, cand);
      const double worst = *std::min_element(mins.begin(), mins.end());
      if (worst >= -tol) {
        res.status = FeasibilityStatus::feasible;
        res.reason = StopReason::verified;
        res.witness = cand;
        res.achieved_margin = worst + p.margin;
        res.residuals = std::move(mins);
        return true;
      }
      return false;
    };

    // phi = eta t - sum logdet(G_j + t I) - log(R^2 - |x|^2); +inf outside the domain.
    auto merit = [&](const Vec& xx, double tt, std::vector<Mat>* gs) {
      const double ball = R2 - xx.squaredNorm();
      if (!(ball > 0.0)) return std::numeric_limits<double>::infinity();
      double val = eta * tt - std::log(ball);
      for (std::size_t j = 0; j < cons.size(); ++j) {
        Mat gj = detail::evaluate_normalized(cons[j], xx);
        gj.diagonal().array() += tt;
        Eigen::LLT<Mat> llt(gj);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        const Mat& l = llt.matrixLLT();
        val -= 2.0 * l.diagonal().array().log().sum();
        if (gs) (*gs)[j] = std::move(gj);
      }
      return val;
    };

    std::vector<Mat> gs(cons.size());
    double phi = merit(x, t, &gs);
    if (!std::isfinite(phi)) throw NumericalFailure("solve_feasibility: infeasible start");

    int it = 0;
    bool stalled = false;
    while (it < budget) {
      // Newton system in (x, t).
      const int N = nv + 1;
      Mat H = Mat::Zero(N, N);
      Vec grad = Vec::Zero(N);
      grad(nv) = eta;
      for (std::size_t j = 0; j < cons.size(); ++j) {
        const auto& nc = cons[j];
        const int d = nc.dim;
        const Mat W = gs[j].llt().solve(Mat::Identity(d, d));
        const Mat W2 = W * W;
        const Vec pw = detail::pack_upper(W);
        const Vec pw2 = detail::pack_upper(W2);
        grad.head(nv) -= nc.coef.transpose() * pw;
        grad(nv) -= W.trace();
        H.col(nv).head(nv) += nc.coef.transpose() * pw2;
        H(nv, nv) += W2.trace();
        if (nc.vars.empty()) continue;
        // Y_i = W A_i W for each active variable, then H_ik = <A_k, Y_i>.
        const auto nact = static_cast<Eigen::Index>(nc.vars.size());
        Mat ystack(d * (d + 1) / 2, nact);
        for (Eigen::Index a = 0; a < nact; ++a) {
          const auto& rows = nc.support[static_cast<std::size_t>(a)];
          const auto s = static_cast<Eigen::Index>(rows.size());
          Mat b = Mat::Zero(s, d);
          auto local = [&](int r) {
            return static_cast<Eigen::Index>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
          };
          for (const auto& term : nc.per[static_cast<std::size_t>(a)]) {
            b.row(local(term.row)) += term.value * W.row(term.col);
            if (term.row != term.col) b.row(local(term.col)) += term.value * W.row(term.row);
          }
          Mat wsub(d, s);
          for (Eigen::Index q = 0; q < s; ++q) wsub.col(q) = W.col(rows[static_cast<std::size_t>(q)]);
          const Mat y = wsub * b;
          ystack.col(a) = detail::pack_upper(y);
        }
        const Mat hk = Mat(nc.coef.transpose() * ystack);  // nv x nact
        for (Eigen::Index a = 0; a < nact; ++a) H.col(nc.vars[static_cast<std::size_t>(a)]).head(nv) += hk.col(a);
      }
      H.row(nv).head(nv) = H.col(nv).head(nv).transpose();
      const double ball = R2 - x.squaredNorm();
      grad.head(nv) += 2.0 * x / ball;
      H.topLeftCorner(nv, nv).diagonal().array() += 2.0 / ball;
      H.topLeftCorner(nv, nv) += (4.0 / (ball * ball)) * x * x.transpose();

      Eigen::LDLT<Mat> ldlt(H);
      if (ldlt.info() != Eigen::Success) throw NumericalFailure("solve_feasibility: singular Newton system");
      const Vec dz = -ldlt.solve(grad);
      const double decrement2 = -grad.dot(dz);
      if (!std::isfinite(decrement2)) throw NumericalFailure("solve_feasibility: non-finite Newton step");

      // Backtracking line search.
      double alpha = 1.0;
      Vec xn;
      double tn = t;
      double phin = std::numeric_limits<double>::infinity();
      std::vector<Mat> gn(cons.size());
      for (int ls = 0; ls < 60; ++ls) {
        xn = x + alpha * dz.head(nv);
        tn = t + alpha * dz(nv);
        phin = merit(xn, tn, &gn);
        if (std::isfinite(phin) && phin <= phi - 0.25 * alpha * decrement2) break;
        alpha *= 0.5;
      }
      ++it;
      if (!std::isfinite(phin) || phin > phi - 0.25 * alpha * decrement2) {
        if (decrement2 > 1e-10) {
          stalled = true;
          break;
        }
      } else {
        x = xn;
        t = tn;
        phi = phin;
        gs.swap(gn);
      }

      if (t < 0.0 && try_accept(x)) {
        res.iterations = it;
        res.lower_bound = t - m_barrier / eta;
        return res;
      }
      if (decrement2 < opt_.centering_tol) {
        // Near the central point: t - t* <= m / eta, up to centering error.
        const double lower = t - 1.5 * m_barrier / eta;
        res.lower_bound = lower;
        if (lower > 0.0) {
          res.reason = StopReason::bound_positive;
          break;
        }
        eta *= opt_.barrier_growth;
        phi = merit(x, t, &gs);
      }
    }
    res.iterations = it;
    if (stalled) res.reason = StopReason::stalled;
    res.residuals = verify_witness(p, x);
    res.achieved_margin = *std::min_element(res.residuals.begin(), res.residuals.end()) + p.margin;
    return res;
  }

 private:
  SolverOptions opt_;
};

inline FeasibilityResult solve_feasibility(const LmiProblem& p, int budget = 400,
                                           const SdpBackend* backend = nullptr) {
  if (backend) return backend->solve(p, budget);
  return BarrierSolver().solve(p, budget);
}

}  // namespace dnnstab

#endif  // DNNSTAB_SDP_HPP
