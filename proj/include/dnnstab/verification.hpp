#ifndef DNNSTAB_VERIFICATION_HPP
#define DNNSTAB_VERIFICATION_HPP

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dnnstab/inequalities.hpp"
#include "dnnstab/test_function.hpp"
#include "dnnstab/weighted_basis.hpp"

namespace dnnstab {

/// One randomized inequality check.
struct InequalityRecord {
  std::string lemma;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool passed = false;
};

struct BatchSummary {
  std::vector<InequalityRecord> records;
  /// Cases where the cubic bound fell below the quadratic one.
  std::size_t order_violations = 0;
  std::size_t failures = 0;
};

/// Lemma ids in the order they are generated for each case.
inline const std::vector<std::string>& inequality_lemmas() {
  static const std::vector<std::string> ids = {"weighted-order2", "weighted-order3", "unweighted-legendre",
                                               "corollary-forms", "rci", "wrci"};
  return ids;
}

/// Runs `cases` random instances of every lemma; case i uses its own
/// generator seeded with seed + i so single records can be replayed.
inline BatchSummary run_inequality_batch(std::uint64_t seed, int cases) {
  detail::require(cases >= 1, "need at least one case");
  BatchSummary out;
  out.records.reserve(static_cast<std::size_t>(cases) * inequality_lemmas().size());
  auto push = [&](const char* id, std::uint64_t s, const InequalityReport& r) {
    out.records.push_back({id, s, r.lhs, r.rhs, r.slack, r.passed});
    if (!r.passed) ++out.failures;
  };
  for (int i = 0; i < cases; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(s);
    std::uniform_int_distribution<int> dim_pick(1, 3);
    std::uniform_real_distribution<double> left(-3.0, 0.0), length(0.2, 3.0), rate(0.0, 4.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::Index n = dim_pick(rng);
    const double c1 = left(rng);
    const double c2 = c1 + length(rng);
    const double delta = rate(rng);
    const WeightedBasis basis = make_weighted_basis(c1, c2, delta);
    const TestFunction f = random_test_function(rng, n);
    const Mat gam = random_spd(rng, n);

    const auto r2 = verify_weighted_inequality(f, basis, gam, 2);
    const auto r3 = verify_weighted_inequality(f, basis, gam, 3);
    push("weighted-order2", s, r2);
    push("weighted-order3", s, r3);
    if (r3.rhs < r2.rhs - 1e-12 * (1.0 + std::abs(r2.rhs))) ++out.order_violations;
    push("unweighted-legendre", s, verify_unweighted_legendre(f, c1, c2, gam));
    const auto cor = verify_corollary_forms(f, basis, gam);
    InequalityReport cr = cor.inequality;
    cr.passed = cr.passed && cor.identity_passed;
    push("corollary-forms", s, cr);

    const Mat sc = random_coupling(rng, gam);
    std::normal_distribution<double> nd;
    Vec w1(n), w2(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      w1(j) = nd(rng);
      w2(j) = nd(rng);
    }
    const double sigma = 0.001 + 0.998 * unit(rng);
    push("rci", s, verify_rci(w1, w2, gam, sc, sigma));

    const double th1 = 0.5 * unit(rng);
    const double th2 = th1 + 0.1 + 2.0 * unit(rng);
    const double th = th1 + (th2 - th1) * unit(rng);
    const double t = 3.0 * unit(rng);
    const double d = 0.01 + 4.0 * unit(rng);
    push("wrci", s, verify_wrci(f, th1, th2, th, d, gam, sc, t).wrci);
  }
  return out;
}

inline void write_inequality_csv(std::ostream& os, const BatchSummary& b) {
  const auto old = os.precision(17);
  os << "lemma,seed,lhs,rhs,slack,passed\n";
  for (const auto& r : b.records) {
    os << r.lemma << ',' << r.seed << ',' << r.lhs << ',' << r.rhs << ',' << r.slack << ','
       << (r.passed ? "true" : "false") << '\n';
  }
  os.precision(old);
}

}  // namespace dnnstab

#endif  // DNNSTAB_VERIFICATION_HPP
