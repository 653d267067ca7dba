#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cfregret/rng.hpp"
#include "cfregret/types.hpp"

namespace cfregret {

/// Dense m x n matrix with entries in {-1, +1}.
class SignMatrix {
 public:
  SignMatrix(std::size_t rows, std::size_t cols, Rating fill = Rating::Like)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static SignMatrix random(std::size_t rows, std::size_t cols, Rng& rng) {
    SignMatrix a(rows, cols);
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < a.data_.size(); ++k) {
      if (k % 64 == 0) bits = rng();
      a.data_[k] = (bits >> (k % 64)) & 1 ? Rating::Like : Rating::Dislike;
    }
    return a;
  }

  /// q_U x 2^q_U matrix whose columns are all sign patterns; column j has
  /// +1 in row k iff bit k of j is set.
  static SignMatrix all_patterns(std::size_t q) {
    SignMatrix a(q, std::size_t{1} << q);
    for (std::size_t k = 0; k < q; ++k) {
      for (std::size_t j = 0; j < a.cols_; ++j) a.set(k, j, (j >> k) & 1 ? Rating::Like : Rating::Dislike);
    }
    return a;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Rating operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  void set(std::size_t i, std::size_t j, Rating v) { data_[i * cols_ + j] = v; }

  SignMatrix transposed() const {
    SignMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) t.set(j, i, (*this)(i, j));
    }
    return t;
  }

  bool operator==(const SignMatrix&) const = default;

 private:
  std::size_t rows_, cols_;
  std::vector<Rating> data_;
};

class TooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct RegularityReport {
  bool is_regular = true;
  std::vector<std::size_t> worst_columns;
  std::vector<Rating> worst_pattern;
  double worst_deviation = 0.0;  // |k - m/2^r| / (m/2^r)
};

inline constexpr double kDefaultRegularityBudget = 1e7;

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

/// k_{b,w} for every pattern b over the columns w. Pattern b has +1 in
/// position k iff bit k of b is set. `counts` is resized to 2^|w|.
inline void pattern_counts(const SignMatrix& a, std::span<const std::size_t> w,
                           std::vector<std::uint64_t>& counts) {
  const std::size_t r = w.size();
  counts.assign(std::size_t{1} << r, 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t code = 0;
    for (std::size_t k = 0; k < r; ++k) code |= std::size_t{a(i, w[k]) == Rating::Like} << k;
    ++counts[code];
  }
}

/// Exhaustive (r, eps)-column regularity check.
///
/// Enumerates unordered r-subsets of columns and all 2^r patterns. Ordered
/// tuples are unnecessary: permuting the columns of w together with the
/// entries of b leaves k_{b,w} unchanged, so the maximum is the same.
inline RegularityReport column_regular(const SignMatrix& a, std::size_t r, double eps,
                                       double budget = kDefaultRegularityBudget) {
  const std::size_t n = a.cols(), m = a.rows();
  if (r == 0 || r > n) throw std::invalid_argument("column_regular needs 1 <= r <= n");
  if (r >= 63 || binomial(n, r) * std::ldexp(1.0, static_cast<int>(r)) > budget) {
    throw TooLarge("regularity check exceeds the evaluation budget");
  }
  const double expected = static_cast<double>(m) / std::ldexp(1.0, static_cast<int>(r));
  const std::size_t patterns = std::size_t{1} << r;

  RegularityReport rep;
  rep.worst_deviation = -1.0;
  std::vector<std::size_t> w(r);
  for (std::size_t k = 0; k < r; ++k) w[k] = k;
  std::vector<std::uint64_t> counts(patterns);
  while (true) {
    pattern_counts(a, w, counts);
    for (std::size_t b = 0; b < patterns; ++b) {
      const double dev = std::abs(static_cast<double>(counts[b]) - expected) / expected;
      if (dev > rep.worst_deviation) {
        rep.worst_deviation = dev;
        rep.worst_columns = w;
        rep.worst_pattern.assign(r, Rating::Dislike);
        for (std::size_t k = 0; k < r; ++k) {
          if ((b >> k) & 1) rep.worst_pattern[k] = Rating::Like;
        }
      }
    }
    // Next combination in lexicographic order.
    std::size_t k = r;
    while (k > 0 && w[k - 1] == n - r + (k - 1)) --k;
    if (k == 0) break;
    ++w[k - 1];
    for (std::size_t x = k; x < r; ++x) w[x] = w[x - 1] + 1;
  }
  rep.is_regular = rep.worst_deviation <= eps;
  return rep;
}

/// Row regularity is column regularity of the transpose.
inline RegularityReport row_regular(const SignMatrix& a, std::size_t r, double eps,
                                    double budget = kDefaultRegularityBudget) {
  return column_regular(a.transposed(), r, eps, budget);
}

/// Given (r, eps)-column regularity, checks (s, eps) regularity for every
/// s < r. A false return means the checker contradicts the known implication.
inline bool smaller_r_regularity_check(const SignMatrix& a, std::size_t r, double eps,
                                       double budget = kDefaultRegularityBudget) {
  if (!column_regular(a, r, eps, budget).is_regular) {
    throw std::invalid_argument("precondition: matrix must be (r, eps)-column regular");
  }
  for (std::size_t s = 1; s < r; ++s) {
    if (!column_regular(a, s, eps, budget).is_regular) return false;
  }
  return true;
}

/// Lower bound on the probability that an i.i.d. m x n sign matrix is
/// (r, eps)-column regular: 1 - 2 (2n)^r exp(-eps^2 m / (3 2^r)).
inline double regularity_probability_bound(std::size_t m, std::size_t n, std::size_t r, double eps) {
  const double two_r = std::ldexp(1.0, static_cast<int>(r));
  return 1.0 - 2.0 * std::pow(2.0 * static_cast<double>(n), static_cast<double>(r)) *
                   std::exp(-eps * eps * static_cast<double>(m) / (3.0 * two_r));
}

struct BallsBinsReport {
  double tail_frequency = 0.0;  // fraction of trials with >= m/2 nonempty bins
  double mean_nonempty = 0.0;
  double var_nonempty = 0.0;    // sample variance across trials
  std::uint64_t trials = 0;
};

/// Throws m balls uniformly into n bins, `trials` times.
inline BallsBinsReport balls_bins_trial(std::uint64_t m, std::uint64_t n, std::uint64_t trials,
                                        std::uint64_t seed) {
  if (m == 0 || n == 0 || trials == 0) throw std::invalid_argument("balls_bins_trial needs m, n, trials >= 1");
  Rng rng = make_rng(seed, 0xb1);
  std::vector<std::uint32_t> stamp(n, 0);
  std::uint64_t tail = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t k = 1; k <= trials; ++k) {
    // stamp[b] == k marks bin b as hit during trial k.
    const auto mark = static_cast<std::uint32_t>(k);
    std::uint64_t nonempty = 0;
    for (std::uint64_t b = 0; b < m; ++b) {
      auto& s = stamp[uniform_below<std::uint64_t>(rng, n)];
      if (s != mark) {
        s = mark;
        ++nonempty;
      }
    }
    if (2 * nonempty >= m) ++tail;
    sum += static_cast<double>(nonempty);
    sum_sq += static_cast<double>(nonempty) * static_cast<double>(nonempty);
  }
  BallsBinsReport rep;
  rep.trials = trials;
  rep.tail_frequency = static_cast<double>(tail) / static_cast<double>(trials);
  rep.mean_nonempty = sum / static_cast<double>(trials);
  rep.var_nonempty =
      trials > 1 ? (sum_sq - sum * sum / static_cast<double>(trials)) / static_cast<double>(trials - 1) : 0.0;
  return rep;
}

// n (1 - (1 - 1/n)^m).
inline double expected_nonempty_bins(std::uint64_t m, std::uint64_t n) {
  const double nn = static_cast<double>(n);
  return nn * (1.0 - std::pow(1.0 - 1.0 / nn, static_cast<double>(m)));
}

}  // namespace cfregret
