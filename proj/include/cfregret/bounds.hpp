#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "cfregret/types.hpp"

// Closed-form regret bounds, in per-user regret units. Logs are base 2.
namespace cfregret::bounds {

enum class BoundKind { UserUpper, UserUpperNoisy, UserLower, ItemUpper, ItemLower };

inline std::string_view to_string(BoundKind k) {
  switch (k) {
    case BoundKind::UserUpper: return "UserUpper";
    case BoundKind::UserUpperNoisy: return "UserUpperNoisy";
    case BoundKind::UserLower: return "UserLower";
    case BoundKind::ItemUpper: return "ItemUpper";
    case BoundKind::ItemLower: return "ItemLower";
  }
  return "?";
}

inline BoundKind parse_bound_kind(std::string_view s) {
  for (auto k : {BoundKind::UserUpper, BoundKind::UserUpperNoisy, BoundKind::UserLower,
                 BoundKind::ItemUpper, BoundKind::ItemLower}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown bound kind '" + std::string(s) + "'");
}

inline bool is_upper(BoundKind k) {
  return k == BoundKind::UserUpper || k == BoundKind::UserUpperNoisy || k == BoundKind::ItemUpper;
}

struct BoundValue {
  double value = 0.0;      // clamped at 0
  double raw = 0.0;        // before clamping
  std::string_view regime;
  bool hypotheses_hold = true;
  // Upper bounds: value exceeds T/2, which random recommendation achieves.
  // Lower bounds: the rank parameter r is not positive, so that branch is void.
  bool vacuous = false;
};

struct Setting {
  std::uint32_t n_users = 1;
  double n_user_types = 1;
  double n_item_types = 1;
  double gamma = 0.0;
  double delta = 0.01;
};

inline double log2d(double x) { return std::log2(x); }

inline std::int64_t user_upper_r(double n, double q_u) {
  return static_cast<std::int64_t>(std::ceil(2.0 * log2d(n * q_u * q_u)));
}

/// T/2 while T <= r, then r/2 + (2 q_U + 2) T / N + 2, with
/// r = ceil(2 log2(N q_U^2)). Needs q_I > 18 r.
inline BoundValue user_upper(double t, const Setting& s) {
  const double n = s.n_users;
  const auto r = user_upper_r(n, s.n_user_types);
  BoundValue b;
  if (t <= static_cast<double>(r)) {
    b.raw = t / 2.0;
    b.regime = "cold";
  } else {
    b.raw = 0.5 * r + (2.0 * s.n_user_types + 2.0) / n * t + 2.0;
    b.regime = "linear";
  }
  b.value = std::max(b.raw, 0.0);
  b.hypotheses_hold = s.n_item_types > 18.0 * r;
  b.vacuous = b.value > t / 2.0;
  return b;
}

inline std::int64_t user_upper_noisy_r(double n, double gamma) {
  const double margin = (1.0 - 2.0 * gamma) * (1.0 - 2.0 * gamma);
  const double r = std::ceil(12.0 / margin * log2d(n));
  if (!(gamma < 0.5) || !std::isfinite(r) || r > 1e15) return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(r);
}

/// T/2 while T <= r, then r/2 + [(5 q_U + 2)/N + gamma] T + 5, with
/// r = ceil(12/(1-2 gamma)^2 log2 N). Needs q_I > 432 log2 N.
inline BoundValue user_upper_noisy(double t, const Setting& s) {
  const double n = s.n_users;
  const auto r = user_upper_noisy_r(n, s.gamma);
  BoundValue b;
  if (t <= static_cast<double>(r)) {
    b.raw = t / 2.0;
    b.regime = "cold";
  } else {
    b.raw = 0.5 * static_cast<double>(r) + ((5.0 * s.n_user_types + 2.0) / n + s.gamma) * t + 5.0;
    b.regime = "linear";
  }
  b.value = std::max(b.raw, 0.0);
  b.hypotheses_hold = s.n_item_types > 432.0 * log2d(n);
  b.vacuous = b.value > t / 2.0;
  return b;
}

inline std::int64_t item_upper_r(double n, double q_i) {
  return static_cast<std::int64_t>(std::ceil(2.0 * log2d(2.0 * n * q_i * q_i)));
}

// Y(T) = 4 + max{52 log2 T, 48 sqrt(q_I r T / N), 270 r T / N}.
inline double item_upper_y(double t, const Setting& s) {
  const double n = s.n_users, q = s.n_item_types;
  const double r = static_cast<double>(item_upper_r(n, q));
  return 4.0 + std::max({52.0 * log2d(t), 48.0 * std::sqrt(q * r * t / n), 270.0 * r / n * t});
}

/// min{Y(T), T/2}. Needs q_I > 13 log2 N and q_U > 4 r.
inline BoundValue item_upper(double t, const Setting& s) {
  const double y = item_upper_y(t, s);
  BoundValue b;
  b.raw = std::min(y, t / 2.0);
  b.value = std::max(b.raw, 0.0);
  b.regime = y < t / 2.0 ? "Y" : "random";
  const double r = static_cast<double>(item_upper_r(s.n_users, s.n_item_types));
  b.hypotheses_hold = s.n_item_types > 13.0 * log2d(s.n_users) && s.n_user_types > 4.0 * r;
  b.vacuous = y >= t / 2.0;
  return b;
}

inline std::int64_t user_lower_r(double n, double q_u, double delta) {
  const double lq = log2d(q_u);
  return static_cast<std::int64_t>(std::floor(lq - log2d(16.0 * lq * log2d(n / delta))));
}

// (1/2 - delta) T - 4; applies only while T <= r.
inline double user_lower_cold(double t, double delta) { return (0.5 - delta) * t - 4.0; }

// [1 - exp(-N/q_U)] q_U/(2N) T; applies for all T.
inline double user_lower_slope(double t, const Setting& s) {
  const double n = s.n_users, q = s.n_user_types;
  return (1.0 - std::exp(-n / q)) * q / (2.0 * n) * t;
}

/// Larger of the two lower-bound branches on their own domains, clamped at 0.
inline BoundValue user_lower(double t, const Setting& s) {
  if (!(s.delta > 0.0)) throw ConfigError("delta must be positive");
  const auto r = user_lower_r(s.n_users, s.n_user_types, s.delta);
  BoundValue b;
  b.raw = user_lower_slope(t, s);
  b.regime = "slope";
  b.vacuous = r <= 0;
  if (r > 0 && t <= static_cast<double>(r)) {
    const double cold = user_lower_cold(t, s.delta);
    if (cold > b.raw) {
      b.raw = cold;
      b.regime = "cold";
    }
  }
  b.value = std::max(b.raw, 0.0);
  return b;
}

inline std::int64_t item_lower_r(double n, double q_i) {
  return static_cast<std::int64_t>(std::floor(0.8 * log2d(q_i) - 4.0 * log2d(log2d(n))));
}

struct ZValue {
  double value;
  int regime;  // 1..4 in order of increasing T
};

/// Four-regime Z(T) from the item-structure lower bound.
inline ZValue item_lower_z(double t, double n, double q_i) {
  const double lq = log2d(q_i);
  if (t < 2.0 * std::sqrt(q_i) / (3.0 * n)) return {t / 2.0, 1};
  if (t < 4.0 * q_i * lq / n) {
    return {t / (5.0 * lq) * (log2d(8.0 * q_i * lq) - log2d(n * t)), 2};
  }
  if (t < 16.0 * q_i * lq * lq / n) return {t / (8.0 * lq), 3};
  return {0.5 * std::sqrt(t * q_i / n), 4};
}

/// ((1 - 3 eta)/2) max{1, Z(T)/2, (r/N) T} - T/N with eta = 1/log2 N and
/// r = floor(0.8 log2 q_I - 4 log2 log2 N), clamped at 0. Needs N > 32.
inline BoundValue item_lower(double t, const Setting& s) {
  const double n = s.n_users, q = s.n_item_types;
  const double eta = 1.0 / log2d(n);
  const auto r = item_lower_r(n, q);
  const auto z = item_lower_z(t, n, q);
  const double linear = static_cast<double>(r) / n * t;
  BoundValue b;
  double inner = 1.0;
  b.regime = "birthday";
  if (z.value / 2.0 > inner) {
    inner = z.value / 2.0;
    b.regime = z.regime == 4 ? "sqrt" : (z.regime == 1 ? "birthday" : "log-shaved");
  }
  if (linear > inner) {
    inner = linear;
    b.regime = "linear";
  }
  b.raw = (1.0 - 3.0 * eta) / 2.0 * inner - t / n;
  b.value = std::max(b.raw, 0.0);
  b.hypotheses_hold = n > 32.0;
  b.vacuous = r <= 0;
  return b;
}

inline BoundValue evaluate(BoundKind k, double t, const Setting& s) {
  switch (k) {
    case BoundKind::UserUpper: return user_upper(t, s);
    case BoundKind::UserUpperNoisy: return user_upper_noisy(t, s);
    case BoundKind::UserLower: return user_lower(t, s);
    case BoundKind::ItemUpper: return item_upper(t, s);
    case BoundKind::ItemLower: return item_lower(t, s);
  }
  return {};
}

struct BoundCurve {
  BoundKind kind = BoundKind::UserUpper;
  std::vector<double> values;  // index t-1
  std::vector<double> raw;
  std::vector<std::string_view> regime_labels;
};

inline BoundCurve bound_curve(BoundKind k, std::uint32_t horizon, const Setting& s) {
  BoundCurve c;
  c.kind = k;
  c.values.reserve(horizon);
  for (std::uint32_t t = 1; t <= horizon; ++t) {
    const auto b = evaluate(k, t, s);
    c.values.push_back(b.value);
    c.raw.push_back(b.raw);
    c.regime_labels.push_back(b.regime);
  }
  return c;
}

}  // namespace cfregret::bounds
