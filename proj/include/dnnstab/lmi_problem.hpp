#ifndef DNNSTAB_LMI_PROBLEM_HPP
#define DNNSTAB_LMI_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dnnstab/types.hpp"

namespace dnnstab {

/// F(x) >= margin I  or  F(x) <= -margin I.
enum class Sense { geq, leq };

/// One coefficient of an affine symmetric map, stored for row <= col.
struct LmiTerm {
  int var = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// F(x) = F0 + sum_j x_j F_j with symmetric F_j kept as upper-triangle triplets
/// sorted by variable.
struct LmiConstraint {
  std::string name;
  int dim = 0;
  Sense sense = Sense::geq;
  Mat constant;
  std::vector<LmiTerm> terms;

  Mat evaluate(const Vec& x) const {
    Mat out = constant;
    for (const auto& t : terms) {
      const double v = t.value * x(t.var);
      out(t.row, t.col) += v;
      if (t.row != t.col) out(t.col, t.row) += v;
    }
    return out;
  }
  /// F(x) - margin I for geq, -F(x) - margin I for leq; PSD iff satisfied.
  Mat slack_matrix(const Vec& x, double margin) const {
    Mat f = evaluate(x);
    if (sense == Sense::leq) f = -f;
    f.diagonal().array() -= margin;
    return f;
  }
};

struct LmiMetadata {
  int n = 0;
  double h = 0.0;
  double mu = 0.0;
  double k = 0.0;
  double xi = 0.0;
};

struct LmiProblem {
  int num_vars = 0;
  double margin = 1e-6;
  LmiMetadata meta;
  std::vector<LmiConstraint> constraints;

  const LmiConstraint& constraint(const std::string& name) const {
    for (const auto& c : constraints)
      if (c.name == name) return c;
    throw InvalidArgument("no constraint named " + name);
  }
};

/// Samples a linear-plus-constant matrix map at the origin and every unit
/// vector; entries below `drop` (relative to the largest) are discarded.
inline LmiConstraint build_affine_constraint(std::string name, Sense sense, int num_vars,
                                             const std::function<Mat(const Vec&)>& map,
                                             double drop = 1e-15) {
  LmiConstraint c;
  c.name = std::move(name);
  c.sense = sense;
  Vec x = Vec::Zero(num_vars);
  c.constant = detail::symmetrize(map(x));
  c.dim = static_cast<int>(c.constant.rows());
  std::vector<Mat> coeffs(static_cast<std::size_t>(num_vars));
  double scale = 0.0;
  for (int j = 0; j < num_vars; ++j) {
    x(j) = 1.0;
    coeffs[j] = map(x) - c.constant;
    x(j) = 0.0;
    scale = std::max(scale, coeffs[j].cwiseAbs().maxCoeff());
  }
  const double cut = drop * std::max(scale, 1.0);
  for (int j = 0; j < num_vars; ++j) {
    const Mat& f = coeffs[j];
    for (int col = 0; col < c.dim; ++col)
      for (int row = 0; row <= col; ++row) {
        const double v = 0.5 * (f(row, col) + f(col, row));
        if (std::abs(v) > cut) c.terms.push_back({j, row, col, v});
      }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Sparse triplet interchange format (text, one record per line):
//
//   dnnstab-lmi 1
//   num_vars <N>
//   margin <m>
//   meta <n> <h> <mu> <k> <xi>
//   constraints <C>
//   constraint <name> <dim> <geq|leq> <#constant entries> <#terms>
//   c <row> <col> <value>            constant term, row <= col
//   t <var> <row> <col> <value>      coefficient of x_var, row <= col
//   end
//
// Indices are zero-based; values are printed with 17 significant digits so a
// write/read cycle reproduces the problem bit for bit.
// ---------------------------------------------------------------------------

inline void write_lmi_triplets(std::ostream& os, const LmiProblem& p) {
  os << std::setprecision(17);
  os << "dnnstab-lmi 1\n";
  os << "num_vars " << p.num_vars << "\n";
  os << "margin " << p.margin << "\n";
  os << "meta " << p.meta.n << ' ' << p.meta.h << ' ' << p.meta.mu << ' ' << p.meta.k << ' '
     << p.meta.xi << "\n";
  os << "constraints " << p.constraints.size() << "\n";
  for (const auto& c : p.constraints) {
    std::vector<std::tuple<int, int, double>> consts;
    for (int col = 0; col < c.dim; ++col)
      for (int row = 0; row <= col; ++row)
        if (c.constant(row, col) != 0.0) consts.emplace_back(row, col, c.constant(row, col));
    os << "constraint " << c.name << ' ' << c.dim << ' ' << (c.sense == Sense::geq ? "geq" : "leq")
       << ' ' << consts.size() << ' ' << c.terms.size() << "\n";
    for (const auto& [r, cl, v] : consts) os << "c " << r << ' ' << cl << ' ' << v << "\n";
    for (const auto& t : c.terms)
      os << "t " << t.var << ' ' << t.row << ' ' << t.col << ' ' << t.value << "\n";
  }
  os << "end\n";
}

inline LmiProblem read_lmi_triplets(std::istream& is) {
  auto fail = [](const std::string& what) -> void {
    throw InvalidArgument("lmi triplet file: " + what);
  };
  auto expect = [&](const std::string& key) {
    std::string tok;
    if (!(is >> tok) || tok != key) fail("expected '" + key + "'");
  };
  LmiProblem p;
  int version = 0;
  expect("dnnstab-lmi");
  is >> version;
  if (version != 1) fail("unsupported version");
  expect("num_vars");
  is >> p.num_vars;
  expect("margin");
  is >> p.margin;
  expect("meta");
  is >> p.meta.n >> p.meta.h >> p.meta.mu >> p.meta.k >> p.meta.xi;
  expect("constraints");
  std::size_t count = 0;
  is >> count;
  if (!is || p.num_vars < 0) fail("malformed header");
  for (std::size_t i = 0; i < count; ++i) {
    LmiConstraint c;
    std::string sense;
    std::size_t nconst = 0, nterms = 0;
    expect("constraint");
    is >> c.name >> c.dim >> sense >> nconst >> nterms;
    if (!is || c.dim <= 0) fail("malformed constraint header");
    if (sense != "geq" && sense != "leq") fail("sense must be geq or leq");
    c.sense = sense == "geq" ? Sense::geq : Sense::leq;
    c.constant = Mat::Zero(c.dim, c.dim);
    for (std::size_t e = 0; e < nconst; ++e) {
      int r = 0, cl = 0;
      double v = 0.0;
      expect("c");
      is >> r >> cl >> v;
      if (!is || r < 0 || cl < r || cl >= c.dim) fail("bad constant entry in " + c.name);
      c.constant(r, cl) = v;
      c.constant(cl, r) = v;
    }
    c.terms.reserve(nterms);
    for (std::size_t e = 0; e < nterms; ++e) {
      LmiTerm t;
      expect("t");
      is >> t.var >> t.row >> t.col >> t.value;
      if (!is || t.var < 0 || t.var >= p.num_vars || t.row < 0 || t.col < t.row || t.col >= c.dim)
        fail("bad term in " + c.name);
      c.terms.push_back(t);
    }
    std::stable_sort(c.terms.begin(), c.terms.end(),
                     [](const LmiTerm& a, const LmiTerm& b) { return a.var < b.var; });
    p.constraints.push_back(std::move(c));
  }
  expect("end");
  return p;
}

}  // namespace dnnstab

#endif  // DNNSTAB_LMI_PROBLEM_HPP
