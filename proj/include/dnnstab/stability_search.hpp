#ifndef DNNSTAB_STABILITY_SEARCH_HPP
#define DNNSTAB_STABILITY_SEARCH_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dnnstab/lmi_variables.hpp"
#include "dnnstab/sdp.hpp"
#include "dnnstab/system.hpp"
#include "dnnstab/theorem1.hpp"

namespace dnnstab {

struct DelayBounds {
  double h = 1.0;
  double mu = 0.0;

  void validate() const {
    detail::require(h > 0.0, "delay bound h must be positive");
    detail::require(mu >= 0.0, "delay-rate bound mu must be non-negative");
  }
};

struct StabilityCertificate {
  double h = 0.0, mu = 0.0, k = 0.0, xi = 0.0;
  LmiVariables witness;
  Vec flat_witness;
  std::vector<std::string> constraint_names;
  std::vector<double> margins;  // verified min-eig of each slack matrix
  double lambda_big = 0.0;
  double envelope_E = 0.0;      // sqrt(Lambda / lambda_min(P))
  double envelope_E_max = 0.0;  // sqrt(Lambda / lambda_max(P))
  double min_margin() const { return *std::min_element(margins.begin(), margins.end()); }
};

struct SearchOptions {
  int budget = 400;
  const SdpBackend* backend = nullptr;
};

struct CheckResult {
  bool certified = false;
  FeasibilityResult solve;
  std::optional<StabilityCertificate> certificate;
  double seconds = 0.0;
};

/// The constant bounding V at the initial time by Lambda |phi|^2.
inline double lambda_constant(const DelayedNNSystem& sys, const LmiVariables& v, double h, double k) {
  using detail::max_eigenvalue;
  const Mat L = sys.L();
  const double l2 = max_eigenvalue(L * L);
  const double e2kh = std::exp(2.0 * k * h);
  const double h3 = h * h * h;
  const double dyn = max_eigenvalue(sys.K0().transpose() * sys.K0()) +
                     max_eigenvalue(sys.k1.transpose() * sys.k1) * l2 + max_eigenvalue(sys.k2.transpose() * sys.k2) * l2;
  return max_eigenvalue(v.P) * (1.0 + 2.0 * h * h) + 2.0 * (v.D1.cwiseProduct(sys.sector)).maxCoeff() +
         2.0 * (v.D2.cwiseProduct(sys.sector)).maxCoeff() + h * e2kh * max_eigenvalue(v.Q) * (1.0 + l2) +
         h * e2kh * (max_eigenvalue(v.U1) + max_eigenvalue(v.U2) + max_eigenvalue(v.U3)) +
         (1.5 * h3 * (max_eigenvalue(v.Z1) + max_eigenvalue(v.Z3) + max_eigenvalue(v.Z4)) +
          h3 / 6.0 * max_eigenvalue(v.N1) + h3 / 2.0 * max_eigenvalue(v.N2)) *
             dyn +
         h * max_eigenvalue(v.M1 + v.M2) + h3 / 2.0 * max_eigenvalue(v.Z2);
}

/// Assembles the criterion at (h, mu, k, xi), solves it, and on success
/// builds a re-verified certificate.
inline CheckResult check_stability(const DelayedNNSystem& sys, const DelayBounds& bounds, double k, double xi,
                                   const SearchOptions& opt = {}) {
  bounds.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Theorem1Params params{bounds.h, bounds.mu, k, xi, 0.0};
  const LmiProblem prob = assemble_theorem1(sys, params);
  CheckResult out;
  out.solve = solve_feasibility(prob, opt.budget, opt.backend);
  if (out.solve.feasible()) {
    StabilityCertificate c;
    c.h = bounds.h;
    c.mu = bounds.mu;
    c.k = k;
    c.xi = xi;
    c.flat_witness = out.solve.witness;
    c.witness = unflatten(c.flat_witness, static_cast<int>(sys.dimension()));
    for (const auto& con : prob.constraints) c.constraint_names.push_back(con.name);
    c.margins = verify_witness(prob, c.flat_witness);
    c.lambda_big = lambda_constant(sys, c.witness, bounds.h, k);
    c.envelope_E = std::sqrt(c.lambda_big / detail::min_eigenvalue(c.witness.P));
    c.envelope_E_max = std::sqrt(c.lambda_big / detail::max_eigenvalue(c.witness.P));
    out.certificate = std::move(c);
    out.certified = true;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Re-assembles the problem from the certificate's parameters and re-checks the witness.
inline bool verify_certificate(const DelayedNNSystem& sys, const StabilityCertificate& c) {
  const LmiProblem prob = assemble_theorem1(sys, {c.h, c.mu, c.k, c.xi, 0.0});
  const auto mins = verify_witness(prob, c.flat_witness);
  const double tol = witness_tolerance(prob, c.flat_witness);
  return std::all_of(mins.begin(), mins.end(), [&](double m) { return m >= -tol; });
}

struct ScanEntry {
  double xi_fraction = 0.0;
  double value = 0.0;  // k or h tested
  bool certified = false;
  double margin = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

struct SearchResult {
  bool certified = false;
  double best = 0.0;              // largest certified k or h
  double xi = 0.0;                // absolute partition point at best
  double xi_fraction = 0.0;
  std::optional<StabilityCertificate> certificate;
  double probe = 0.0;             // best + tol, tested with the same xi fraction
  std::optional<bool> probe_certified;  // empty when the probe lies outside the range
  std::vector<ScanEntry> log;
  double seconds = 0.0;
};

struct BisectionOptions {
  double tol = 1e-3;
  int max_iterations = 60;
  std::vector<double> xi_fractions{0.25, 0.5, 0.75};
  SearchOptions solve;
};

namespace detail {

// Largest certified parameter in [lo, hi] for each xi fraction, maximized over
// the grid. `check(value, frac)` runs one feasibility test.
inline SearchResult bisect_over_grid(double lo, double hi, const BisectionOptions& opt,
                                     const std::function<CheckResult(double, double)>& check,
                                     const std::function<double(double, double)>& xi_of) {
  require(opt.tol > 0.0, "bisection tolerance must be positive");
  require(lo <= hi, "empty search range");
  require(!opt.xi_fractions.empty(), "empty xi grid");
  const auto t0 = std::chrono::steady_clock::now();
  SearchResult res;
  auto run = [&](double value, double frac) {
    CheckResult c = check(value, frac);
    ScanEntry e;
    e.xi_fraction = frac;
    e.value = value;
    e.certified = c.certified;
    e.margin = c.certified ? c.certificate->min_margin() : c.solve.achieved_margin;
    e.iterations = c.solve.iterations;
    e.seconds = c.seconds;
    res.log.push_back(e);
    return c;
  };
  auto accept = [&](double value, double frac, CheckResult& c) {
    if (!res.certified || value > res.best) {
      res.certified = true;
      res.best = value;
      res.xi_fraction = frac;
      res.xi = xi_of(value, frac);
      res.certificate = std::move(c.certificate);
    }
  };

  for (double frac : opt.xi_fractions) {
    double a = lo;
    if (res.certified) {
      // Only worth searching this xi if it beats the incumbent.
      a = res.best + opt.tol;
      if (a > hi) break;
    }
    CheckResult ca = run(a, frac);
    if (!ca.certified) continue;
    accept(a, frac, ca);
    if (a == hi) continue;
    double b = hi;
    CheckResult cb = run(b, frac);
    if (cb.certified) {
      accept(b, frac, cb);
      continue;
    }
    for (int it = 0; it < opt.max_iterations && b - a > opt.tol; ++it) {
      const double m = 0.5 * (a + b);
      CheckResult cm = run(m, frac);
      if (cm.certified) {
        a = m;
        accept(m, frac, cm);
      } else {
        b = m;
      }
    }
  }

  if (res.certified) {
    res.probe = res.best + opt.tol;
    if (res.probe <= hi) {
      // Bracket check; a certified probe means the oracle was not monotone there,
      // so keep climbing.
      for (int it = 0; it < opt.max_iterations; ++it) {
        CheckResult cp = run(res.probe, res.xi_fraction);
        res.probe_certified = cp.certified;
        if (!cp.certified) break;
        accept(res.probe, res.xi_fraction, cp);
        res.probe = res.best + opt.tol;
        if (res.probe > hi) {
          res.probe_certified.reset();
          break;
        }
      }
    }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace detail

/// Largest certified decay rate k in [k_lo, k_hi] at fixed (h, mu).
inline SearchResult max_decay_rate(const DelayedNNSystem& sys, const DelayBounds& bounds, double k_lo, double k_hi,
                                   const BisectionOptions& opt = {}) {
  bounds.validate();
  sys.validate();
  const double kmax = sys.k0.minCoeff();
  detail::require(k_lo > 0.0 && k_hi < kmax, "k range must lie inside (0, min diag K0)");
  for (double f : opt.xi_fractions) detail::require(f > 0.0 && f < 1.0, "xi fractions must lie in (0, 1)");
  return detail::bisect_over_grid(
      k_lo, k_hi, opt,
      [&](double k, double frac) { return check_stability(sys, bounds, k, frac * bounds.h, opt.solve); },
      [&](double, double frac) { return frac * bounds.h; });
}

/// Largest certified delay bound h in [h_lo, h_hi] at fixed (mu, k).
inline SearchResult max_delay(const DelayedNNSystem& sys, double mu, double k, double h_lo, double h_hi,
                              const BisectionOptions& opt = {}) {
  sys.validate();
  detail::require(h_lo > 0.0, "h range must be positive");
  detail::require(k > 0.0 && k < sys.k0.minCoeff(), "k must lie inside (0, min diag K0)");
  for (double f : opt.xi_fractions) detail::require(f > 0.0 && f < 1.0, "xi fractions must lie in (0, 1)");
  return detail::bisect_over_grid(
      h_lo, h_hi, opt,
      [&](double h, double frac) { return check_stability(sys, {h, mu}, k, frac * h, opt.solve); },
      [](double h, double frac) { return frac * h; });
}

inline int total_iterations(const SearchResult& r) {
  int it = 0;
  for (const auto& e : r.log) it += e.iterations;
  return it;
}

/// One table row: mu, h, k, certified value, xi, margin, Newton iterations.
/// The searched parameter is passed as NaN and printed as "*". Wall time is
/// left out so identical runs give identical bytes.
inline void write_search_csv_header(std::ostream& os) {
  os << "mu,h,k,certified_value,xi,margin,solver_iterations\n";
}

inline void write_search_csv_row(std::ostream& os, double mu, double h, double k, const SearchResult& r) {
  const auto old = os.precision(10);
  auto cell = [&](double v) {
    if (std::isnan(v)) os << '*';
    else os << v;
  };
  os << mu << ',';
  cell(h);
  os << ',';
  cell(k);
  os << ',';
  if (r.certified) {
    os << r.best << ',' << r.xi << ',' << r.certificate->min_margin();
  } else {
    os << "NA,NA,NA";
  }
  os << ',' << total_iterations(r) << '\n';
  os.precision(old);
}

}  // namespace dnnstab

#endif  // DNNSTAB_STABILITY_SEARCH_HPP
