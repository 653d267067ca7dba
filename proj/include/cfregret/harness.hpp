#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cfregret/anytime.hpp"
#include "cfregret/baselines.hpp"
#include "cfregret/bounds.hpp"
#include "cfregret/cf_item.hpp"
#include "cfregret/cf_user.hpp"
#include "cfregret/engine.hpp"
#include "cfregret/model.hpp"
#include "json.hpp"

namespace cfregret {

enum class Algorithm { Random, Omniscient, UserUser, UserUserNoisy, ItemItem };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Random: return "Random";
    case Algorithm::Omniscient: return "Omniscient";
    case Algorithm::UserUser: return "UserUser";
    case Algorithm::UserUserNoisy: return "UserUserNoisy";
    case Algorithm::ItemItem: return "ItemItem";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::Random, Algorithm::Omniscient, Algorithm::UserUser,
                 Algorithm::UserUserNoisy, Algorithm::ItemItem}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

// Optional knobs; anything unset takes the algorithm's own formula.
struct AlgorithmOverrides {
  std::optional<double> epsilon;        // UserUser / UserUserNoisy
  std::optional<std::uint32_t> r;       // UserUser, UserUserNoisy or ItemItem
  std::optional<double> gamma;          // noise level assumed by UserUserNoisy
  std::optional<double> pool_factor;    // ItemItem
  std::optional<std::uint64_t> ell;     // ItemItem
  std::optional<double> delta;          // lower-bound overlay
};

struct ExperimentConfig {
  ModelParams model;
  Algorithm algorithm = Algorithm::Random;
  AlgorithmOverrides algorithm_overrides;
  std::uint32_t horizon = 1;
  std::uint32_t trials = 100;
  std::uint64_t base_seed = 1;
  bool anytime = false;
  AnytimeSchedule anytime_schedule = AnytimeSchedule::PowersOfTwo;
  std::vector<double> coldstart_gammas;
  std::vector<bounds::BoundKind> emit_bounds;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                           std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown field '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
T get_as(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <class T>
std::optional<T> get_opt(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) return std::nullopt;
  return get_as<T>(obj, key, where);
}

inline ExperimentConfig parse_config_unchecked(const nlohmann::json& doc) {
  reject_unknown(doc,
                         {"model", "algorithm", "algorithm_overrides", "horizon", "trials", "base_seed",
                          "anytime", "anytime_schedule", "coldstart_gammas", "emit_bounds"},
                         "config");
  ExperimentConfig c;
  const auto& m = doc.at("model");
  // The per-trial model seed is base_seed + trial, so a fixed one is rejected.
  reject_unknown(m, {"n_users", "n_user_types", "n_item_types", "noise", "mode"}, "model");
  c.model.mode = parse_model_mode(get_opt<std::string>(m, "mode", "model").value_or("Generic"));
  c.model.n_users = get_as<std::uint32_t>(m, "n_users", "model");
  c.model.n_user_types = get_opt<std::uint64_t>(m, "n_user_types", "model").value_or(0);
  c.model.n_item_types = get_opt<std::uint64_t>(m, "n_item_types", "model").value_or(0);
  c.model.noise = get_opt<double>(m, "noise", "model").value_or(0.0);
  c.model = normalized(c.model);

  c.algorithm = parse_algorithm(get_as<std::string>(doc, "algorithm", "config"));
  if (doc.contains("algorithm_overrides")) {
    const auto& o = doc.at("algorithm_overrides");
    reject_unknown(o, {"epsilon", "r", "gamma", "pool_factor", "ell", "delta"},
                           "algorithm_overrides");
    auto& ov = c.algorithm_overrides;
    ov.epsilon = get_opt<double>(o, "epsilon", "algorithm_overrides");
    ov.r = get_opt<std::uint32_t>(o, "r", "algorithm_overrides");
    ov.gamma = get_opt<double>(o, "gamma", "algorithm_overrides");
    ov.pool_factor = get_opt<double>(o, "pool_factor", "algorithm_overrides");
    ov.ell = get_opt<std::uint64_t>(o, "ell", "algorithm_overrides");
    ov.delta = get_opt<double>(o, "delta", "algorithm_overrides");
  }
  c.horizon = get_as<std::uint32_t>(doc, "horizon", "config");
  c.trials = get_opt<std::uint32_t>(doc, "trials", "config").value_or(100);
  c.base_seed = get_opt<std::uint64_t>(doc, "base_seed", "config").value_or(1);
  c.anytime = get_opt<bool>(doc, "anytime", "config").value_or(false);
  c.anytime_schedule =
      parse_anytime_schedule(get_opt<std::string>(doc, "anytime_schedule", "config").value_or("PowersOfTwo"));
  c.coldstart_gammas = get_opt<std::vector<double>>(doc, "coldstart_gammas", "config").value_or(std::vector<double>{});
  for (const auto& k : get_opt<std::vector<std::string>>(doc, "emit_bounds", "config").value_or(std::vector<std::string>{})) {
    c.emit_bounds.push_back(bounds::parse_bound_kind(k));
  }

  if (c.horizon == 0) throw ConfigError("horizon must be at least 1");
  if (c.trials == 0) throw ConfigError("trials must be at least 1");
  for (double g : c.coldstart_gammas) {
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("coldstart_gammas must lie strictly inside (0, 1)");
  }
  return c;
}

}  // namespace detail

/// Parses the JSON experiment document. Unknown fields are errors.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  try {
    return detail::parse_config_unchecked(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

/// Fixed-horizon recommender for one trial. `model` is only consulted for the
/// omniscient baseline's oracle.
inline std::unique_ptr<Recommender> make_fixed_recommender(const ExperimentConfig& cfg,
                                                           std::uint32_t horizon,
                                                           PreferenceModel& model,
                                                           std::uint64_t seed) {
  const auto& p = model.params();
  const auto& ov = cfg.algorithm_overrides;
  switch (cfg.algorithm) {
    case Algorithm::Random:
      return std::make_unique<RandomRecommender>();
    case Algorithm::Omniscient:
      return std::make_unique<OmniscientRecommender>(model.oracle_view());
    case Algorithm::UserUser: {
      auto up = user_user_params(horizon, p.n_users, p.n_user_types, ov.epsilon);
      if (ov.r) up.r = *ov.r;
      return std::make_unique<UserUserRecommender>(up);
    }
    case Algorithm::UserUserNoisy: {
      auto up = user_user_params(horizon, p.n_users, p.n_user_types, ov.epsilon);
      auto np = noisy_partition_params(p.n_users, ov.gamma.value_or(p.noise), ov.epsilon);
      if (ov.r) np.r = *ov.r;
      return std::make_unique<UserUserRecommender>(up, np);
    }
    case Algorithm::ItemItem: {
      ItemItemOverrides io{ov.pool_factor, ov.ell, ov.r};
      return std::make_unique<ItemItemRecommender>(item_item_params(horizon, p.n_users, p.n_item_types, io),
                                                   seed);
    }
  }
  throw ConfigError("unsupported algorithm");
}

inline std::unique_ptr<Recommender> make_recommender(const ExperimentConfig& cfg, PreferenceModel& model,
                                                     std::uint64_t seed) {
  if (!cfg.anytime) return make_fixed_recommender(cfg, cfg.horizon, model, seed);
  PreferenceModel* m = &model;
  return std::make_unique<AnytimeRecommender>(
      [cfg, m, seed](std::uint32_t horizon, std::uint32_t epoch) {
        return make_fixed_recommender(cfg, horizon, *m, mix64(seed, epoch));
      },
      cfg.anytime_schedule);
}

/// Monte Carlo regret estimate. Index t-1 holds the value at step t; units
/// are disliked recommendations per user.
struct RegretCurve {
  std::vector<double> regret_mean;
  std::vector<double> regret_se;
  std::vector<double> slope_mean;

  std::uint32_t horizon() const noexcept { return static_cast<std::uint32_t>(regret_mean.size()); }
};

struct ExperimentResult {
  RegretCurve curve;
  TrialResult totals;  // instrumentation summed over trials
};

// Called once per finished trial, serialized across workers.
using TrialHook =
    std::function<void(std::uint32_t trial, PreferenceModel&, Recommender&, const TrialResult&)>;

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  TrialHook hook;
};

inline std::uint64_t trial_seed(const ExperimentConfig& cfg, std::uint32_t k) { return cfg.base_seed + k; }

inline TrialResult run_single_trial(const ExperimentConfig& cfg, std::uint32_t k, const TrialHook& hook = {},
                                    std::mutex* hook_mutex = nullptr) {
  ModelParams mp = cfg.model;
  mp.seed = trial_seed(cfg, k);
  PreferenceModel model{mp};
  auto rec = make_recommender(cfg, model, mix64(mp.seed, 0xa1));
  TrialResult res = run_trial(model, *rec, cfg.horizon);
  if (hook) {
    std::unique_lock lock = hook_mutex ? std::unique_lock{*hook_mutex} : std::unique_lock<std::mutex>{};
    hook(k, model, *rec, res);
  }
  return res;
}

/// Runs cfg.trials independent trials (trial k seeded with base_seed + k,
/// model redrawn each time) on a worker pool. Accumulation is in integers,
/// so the output does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  const std::uint32_t trials = cfg.trials, horizon = cfg.horizon;
  std::vector<TrialResult> results(trials);
  std::atomic<std::uint32_t> next{0};
  std::mutex hook_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::uint32_t k; (k = next.fetch_add(1)) < trials;) {
      try {
        results[k] = run_single_trial(cfg, k, opts.hook, &hook_mutex);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, trials);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  auto& tot = out.totals;
  tot.horizon = horizon;
  for (auto* v : {&tot.disliked_per_step, &tot.explore_per_step, &tot.exploit_per_step,
                  &tot.disliked_explore_per_step, &tot.disliked_exploit_per_step}) {
    v->assign(horizon, 0);
  }
  std::vector<std::uint64_t> sum_step(horizon, 0), sum_cum(horizon, 0);
  std::vector<unsigned __int128> sum_cum_sq(horizon, 0);
  for (const auto& r : results) {
    std::uint64_t cum = 0;
    for (std::uint32_t s = 0; s < horizon; ++s) {
      cum += r.disliked_per_step[s];
      sum_step[s] += r.disliked_per_step[s];
      sum_cum[s] += cum;
      sum_cum_sq[s] += static_cast<unsigned __int128>(cum) * cum;
      tot.disliked_per_step[s] += r.disliked_per_step[s];
      tot.explore_per_step[s] += r.explore_per_step[s];
      tot.exploit_per_step[s] += r.exploit_per_step[s];
      tot.disliked_explore_per_step[s] += r.disliked_explore_per_step[s];
      tot.disliked_exploit_per_step[s] += r.disliked_exploit_per_step[s];
    }
  }
  const double n = cfg.model.n_users, rr = trials;
  auto& c = out.curve;
  c.regret_mean.resize(horizon);
  c.regret_se.resize(horizon);
  c.slope_mean.resize(horizon);
  for (std::uint32_t s = 0; s < horizon; ++s) {
    c.regret_mean[s] = static_cast<double>(sum_cum[s]) / (rr * n);
    c.slope_mean[s] = static_cast<double>(sum_step[s]) / (rr * n);
    if (trials > 1) {
      // Exact integer numerator: R * sum(x^2) - (sum x)^2.
      const auto sc = static_cast<unsigned __int128>(sum_cum[s]);
      const auto num = static_cast<unsigned __int128>(trials) * sum_cum_sq[s] - sc * sc;
      const double var = static_cast<double>(num) / (rr * (rr - 1.0)) / (n * n);
      c.regret_se[s] = std::sqrt(var / rr);
    }
  }
  return out;
}

/// First t with regret_mean[t] / t <= gamma.
inline std::optional<std::uint32_t> coldstart(const RegretCurve& c, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("cold-start threshold must lie in (0, 1)");
  for (std::uint32_t s = 0; s < c.horizon(); ++s) {
    if (c.regret_mean[s] <= gamma * (s + 1)) return s + 1;
  }
  return std::nullopt;
}

// Average per-step regret over steps (from, to].
inline double tail_slope(const RegretCurve& c, std::uint32_t from, std::uint32_t to) {
  return (c.regret_mean.at(to - 1) - c.regret_mean.at(from - 1)) / static_cast<double>(to - from);
}

inline bounds::Setting bound_setting(const ExperimentConfig& cfg) {
  bounds::Setting s;
  s.n_users = cfg.model.n_users;
  s.n_user_types = static_cast<double>(cfg.model.n_user_types);
  s.n_item_types = static_cast<double>(cfg.model.n_item_types);
  s.gamma = cfg.model.noise;
  s.delta = cfg.algorithm_overrides.delta.value_or(0.01);
  return s;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// CSV with header "t,regret_mean,regret_se,slope_mean[,bound_<kind>...]",
/// one row per step, LF line endings, 6 significant digits.
inline void write_csv(std::ostream& out, const RegretCurve& c, const std::vector<bounds::BoundCurve>& overlays) {
  for (const auto& b : overlays) {
    if (b.values.size() != c.horizon()) throw ConfigError("bound curve horizon differs from regret curve");
  }
  out << "t,regret_mean,regret_se,slope_mean";
  for (const auto& b : overlays) out << ",bound_" << bounds::to_string(b.kind);
  out << '\n';
  for (std::uint32_t s = 0; s < c.horizon(); ++s) {
    out << (s + 1) << ',' << format_number(c.regret_mean[s]) << ',' << format_number(c.regret_se[s]) << ','
        << format_number(c.slope_mean[s]);
    for (const auto& b : overlays) out << ',' << format_number(b.values[s]);
    out << '\n';
  }
}

inline void emit_csv(const RegretCurve& c, const std::vector<bounds::BoundCurve>& overlays,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, c, overlays);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<bounds::BoundCurve> overlays_for(const ExperimentConfig& cfg) {
  std::vector<bounds::BoundCurve> out;
  const auto s = bound_setting(cfg);
  for (auto k : cfg.emit_bounds) out.push_back(bounds::bound_curve(k, cfg.horizon, s));
  return out;
}

}  // namespace cfregret
