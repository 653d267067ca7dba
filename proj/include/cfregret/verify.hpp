#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cfregret/regcheck.hpp"
#include "cfregret/rng.hpp"

namespace cfregret {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// Monte Carlo check of the regularity probability bound: fraction of
/// i.i.d. m x n matrices that are (r, eps)-column regular, against
/// min(bound, floor) with a 3-sigma binomial allowance.
inline CheckResult check_regularity_probability(std::size_t m, std::size_t n, std::size_t r, double eps,
                                                std::uint32_t draws, double floor, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x51);
  std::uint32_t regular = 0;
  for (std::uint32_t d = 0; d < draws; ++d) {
    regular += column_regular(SignMatrix::random(m, n, rng), r, eps).is_regular;
  }
  const double frac = static_cast<double>(regular) / draws;
  const double bound = regularity_probability_bound(m, n, r, eps);
  const double target = std::min(std::max(bound, 0.0), floor);
  const double sigma = std::sqrt(target * (1.0 - target) / draws);
  CheckResult c;
  c.name = "regular fraction (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
           ", r=" + std::to_string(r) + ", eps=" + format_fixed(eps) + ")";
  c.passed = frac >= target - 3.0 * sigma;
  c.detail = "observed " + format_fixed(frac) + ", bound " + format_fixed(bound) + ", required >= " +
             format_fixed(target - 3.0 * sigma);
  return c;
}

// The all-patterns matrix, transposed to 2^q rows over q columns, has zero
// deviation for every r <= q.
inline CheckResult check_all_patterns_exact(std::size_t max_q) {
  CheckResult c;
  c.name = "all-patterns matrix exactly regular, q <= " + std::to_string(max_q);
  c.passed = true;
  for (std::size_t q = 1; q <= max_q && c.passed; ++q) {
    const SignMatrix a = SignMatrix::all_patterns(q).transposed();
    for (std::size_t r = 1; r <= q; ++r) {
      const auto rep = column_regular(a, r, 0.0, 1e9);
      if (rep.worst_deviation != 0.0) {
        c.passed = false;
        c.detail = "q=" + std::to_string(q) + ", r=" + std::to_string(r) + " deviation " +
                   format_fixed(rep.worst_deviation);
        break;
      }
    }
  }
  if (c.passed) c.detail = "worst deviation 0 for all r <= q";
  return c;
}

/// Samples random matrices until `instances` are (r, eps)-regular and checks
/// each is (s, eps)-regular for all s < r.
inline CheckResult check_smaller_r(std::size_t instances, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x52);
  CheckResult c;
  c.name = "regular for r implies regular for all s < r";
  std::size_t found = 0, tried = 0, violations = 0;
  while (found < instances && tried < 1000 * instances) {
    ++tried;
    const std::size_t r = 2 + uniform_below<std::size_t>(rng, 2);       // 2..3
    const std::size_t n = r + uniform_below<std::size_t>(rng, 4);       // r..r+3
    const std::size_t m = 256 << uniform_below<std::size_t>(rng, 3);    // 256..1024
    const double eps = 0.3 + 0.1 * static_cast<double>(uniform_below<int>(rng, 5));
    const SignMatrix a = SignMatrix::random(m, n, rng);
    if (!column_regular(a, r, eps).is_regular) continue;
    ++found;
    if (!smaller_r_regularity_check(a, r, eps)) ++violations;
  }
  c.passed = found == instances && violations == 0;
  c.detail = std::to_string(found) + " regular instances from " + std::to_string(tried) + " draws, " +
             std::to_string(violations) + " violations";
  return c;
}

inline std::vector<CheckResult> regularity_suite(std::uint64_t seed) {
  return {check_regularity_probability(4096, 8, 2, 0.5, 500, 0.99, seed), check_all_patterns_exact(12),
          check_smaller_r(200, seed)};
}

/// Tail: at least m/2 of n bins nonempty with probability >= 1 - exp(-m/2)
/// when m <= n/4.
inline CheckResult check_balls_bins_tail(std::uint64_t m, std::uint64_t n, std::uint64_t trials,
                                         std::uint64_t seed) {
  const auto rep = balls_bins_trial(m, n, trials, seed);
  const double p = 1.0 - std::exp(-static_cast<double>(m) / 2.0);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  CheckResult c;
  c.name = "at least m/2 nonempty bins (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")";
  c.passed = rep.tail_frequency >= p - 3.0 * sigma;
  c.detail = "observed " + format_fixed(rep.tail_frequency) + ", required >= " + format_fixed(p - 3.0 * sigma);
  return c;
}

inline CheckResult check_balls_bins_mean(std::uint64_t m, std::uint64_t n, std::uint64_t trials,
                                         std::uint64_t seed) {
  const auto rep = balls_bins_trial(m, n, trials, seed);
  const double expected = expected_nonempty_bins(m, n);
  const double sigma = std::sqrt(rep.var_nonempty / static_cast<double>(trials));
  CheckResult c;
  c.name = "mean nonempty bins (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")";
  c.passed = std::abs(rep.mean_nonempty - expected) <= 3.0 * sigma;
  c.detail = "observed " + format_fixed(rep.mean_nonempty) + ", expected " + format_fixed(expected) +
             ", 3 sigma " + format_fixed(3.0 * sigma);
  return c;
}

inline std::vector<CheckResult> balls_bins_suite(std::uint64_t seed) {
  return {check_balls_bins_tail(16, 64, 100000, seed), check_balls_bins_mean(10, 10, 100000, seed)};
}

}  // namespace cfregret
