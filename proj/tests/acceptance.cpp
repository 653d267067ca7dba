// Acceptance checks. Each criterion prints one PASS/FAIL line; --only k runs
// a single criterion so ctest can list them separately.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "cfregret/cfregret.hpp"

namespace fs = std::filesystem;
using namespace cfregret;

namespace {

// Tolerances, pinned.
constexpr double kSigmas = 3.0;
constexpr double kRandomMean = 250.0;
constexpr double kRandomMaxSeconds = 10.0;
constexpr double kFig1MaxSeconds = 300.0;
constexpr double kFig1ColdstartBand = 1.5;
constexpr double kColdstartGamma = 0.25;
constexpr double kFig2MaxSeconds = 600.0;
constexpr double kFig2RatioLow = 1.6;
constexpr double kFig2RatioHigh = 2.6;
constexpr double kNoise = 0.1;
constexpr double kAnytimeFactor = 6.0;
constexpr std::uint32_t kAnytimeCheckpoints[] = {64, 256, 1024};
constexpr std::uint64_t kVerifySeed = 20240601;
constexpr std::size_t kEquivalenceInstances = 200;

struct Outcome {
  bool passed = false;
  std::string detail;
};

fs::path g_config_dir;

ExperimentConfig config(const std::string& name) { return load_config((g_config_dir / (name + ".json")).string()); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) { return format_fixed(v, 6); }

std::string fmt_cs(std::optional<std::uint32_t> cs) { return cs ? std::to_string(*cs) : "none"; }

std::vector<TypeId> true_user_types(PreferenceModel& m) {
  const auto view = m.oracle_view();
  std::vector<TypeId> types(m.n_users());
  for (UserId u = 0; u < m.n_users(); ++u) types[u] = view.user_type(u);
  return types;
}

// Largest violation of regret_mean[t] <= bound[t] + 3 SE over the steps
// selected by `use`. Returns the first offending t, if any.
struct Dominance {
  std::optional<std::uint32_t> first_violation;
  std::uint32_t checked = 0;
  double worst_excess = -1e300;
};

Dominance check_upper(const RegretCurve& c, const std::function<double(std::uint32_t)>& bound,
                      const std::function<bool(std::uint32_t)>& use = {}) {
  Dominance d;
  for (std::uint32_t t = 1; t <= c.horizon(); ++t) {
    if (use && !use(t)) continue;
    ++d.checked;
    const double excess = c.regret_mean[t - 1] - (bound(t) + kSigmas * c.regret_se[t - 1]);
    d.worst_excess = std::max(d.worst_excess, excess);
    if (excess > 0 && !d.first_violation) d.first_violation = t;
  }
  return d;
}

Dominance check_lower(const RegretCurve& c, const std::function<double(std::uint32_t)>& bound) {
  Dominance d;
  for (std::uint32_t t = 1; t <= c.horizon(); ++t) {
    ++d.checked;
    const double excess = bound(t) - (c.regret_mean[t - 1] + kSigmas * c.regret_se[t - 1]);
    d.worst_excess = std::max(d.worst_excess, excess);
    if (excess > 0 && !d.first_violation) d.first_violation = t;
  }
  return d;
}

std::string describe(const Dominance& d) {
  std::string s = std::to_string(d.checked) + " steps checked, worst margin " + fmt(d.worst_excess);
  if (d.first_violation) s += ", first violation at t=" + std::to_string(*d.first_violation);
  return s;
}

Outcome random_baseline() {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = config("random_baseline");
  const auto c = run_experiment(cfg).curve;
  const double secs = seconds_since(start);
  const double mean = c.regret_mean.back(), se = c.regret_se.back();
  // Nominal SE if every rating were an independent coin flip.
  const double nominal = std::sqrt(cfg.horizon / (4.0 * cfg.model.n_users * cfg.trials));
  Outcome o;
  o.passed = std::abs(mean - kRandomMean) <= kSigmas * se && secs < kRandomMaxSeconds;
  o.detail = "regret(T)=" + fmt(mean) + ", SE=" + fmt(se) + " (independent-flip SE " + fmt(nominal) +
             "), runtime " + fmt(secs) + "s";
  return o;
}

struct PurityStats {
  std::uint32_t matched = 0, fallback = 0, trials = 0;
  std::uint64_t exploit = 0, disliked_exploit = 0;
  std::vector<double> per_trial_fraction;
};

TrialHook purity_hook(PurityStats& st) {
  return [&st](std::uint32_t, PreferenceModel& m, Recommender& rec, const TrialResult& res) {
    ++st.trials;
    auto* uu = dynamic_cast<UserUserRecommender*>(&rec);
    if (!uu || !uu->partitioned()) return;
    st.fallback += uu->clique_fallback();
    if (!partition_matches(uu->partition(), true_user_types(m))) return;
    ++st.matched;
    std::uint64_t n = 0, bad = 0;
    for (std::uint32_t s = 0; s < res.horizon; ++s) {
      n += res.exploit_per_step[s];
      bad += res.disliked_exploit_per_step[s];
    }
    st.exploit += n;
    st.disliked_exploit += bad;
    if (n) st.per_trial_fraction.push_back(static_cast<double>(bad) / n);
  };
}

Outcome user_user_purity() {
  const auto cfg = config("user_user_q40");
  PurityStats st;
  run_experiment(cfg, {.threads = 0, .hook = purity_hook(st)});
  Outcome o;
  o.passed = st.matched > 0 && st.disliked_exploit == 0;
  o.detail = std::to_string(st.matched) + "/" + std::to_string(st.trials) + " trials matched true types, " +
             std::to_string(st.exploit) + " exploits, " + std::to_string(st.disliked_exploit) + " disliked";
  return o;
}

Outcome user_upper_dominance() {
  const auto cfg = config("user_user_q40");
  const auto c = run_experiment(cfg).curve;
  const auto s = bound_setting(cfg);
  const auto r = bounds::user_upper_r(s.n_users, s.n_user_types);
  const bool hyp = bounds::user_upper(1, s).hypotheses_hold;
  const auto d = check_upper(c, [&](std::uint32_t t) { return bounds::user_upper(t, s).value; });
  Outcome o;
  o.passed = !d.first_violation;
  o.detail = describe(d) + "; r=" + std::to_string(r) + ", q_I > 18r " + (hyp ? "holds" : "does not hold");
  return o;
}

Outcome figure1_shape() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> slope_q, slope_n;
  std::vector<std::optional<std::uint32_t>> cs_n;
  std::string detail = "slopes by q_U {20,40,80}:";
  for (const char* name : {"fig1a_qU20", "fig1a_qU40", "fig1a_qU80"}) {
    const auto cfg = config(name);
    const auto c = run_experiment(cfg).curve;
    slope_q.push_back(tail_slope(c, cfg.horizon / 2, cfg.horizon));
    detail += " " + fmt(slope_q.back());
  }
  detail += "; by N {200,400,800}:";
  std::string cs_text = "; coldstart(0.25):";
  for (const char* name : {"fig1b_N200", "fig1b_N400", "fig1b_N800"}) {
    const auto cfg = config(name);
    const auto c = run_experiment(cfg).curve;
    slope_n.push_back(tail_slope(c, cfg.horizon / 2, cfg.horizon));
    cs_n.push_back(coldstart(c, kColdstartGamma));
    detail += " " + fmt(slope_n.back());
    cs_text += " " + fmt_cs(cs_n.back());
  }
  const double secs = seconds_since(start);
  const bool q_up = slope_q[0] < slope_q[1] && slope_q[1] < slope_q[2];
  const bool n_down = slope_n[0] > slope_n[1] && slope_n[1] > slope_n[2];
  bool band = std::all_of(cs_n.begin(), cs_n.end(), [](auto v) { return v.has_value(); });
  if (band) {
    const auto [lo, hi] = std::minmax_element(cs_n.begin(), cs_n.end());
    band = static_cast<double>(**hi) < kFig1ColdstartBand * static_cast<double>(**lo);
  }
  Outcome o;
  o.passed = q_up && n_down && band && secs < kFig1MaxSeconds;
  o.detail = detail + cs_text + (band ? " (within 1.5x)" : " (not within 1.5x)") + ", runtime " + fmt(secs) + "s";
  return o;
}

Outcome noisy_user_user() {
  const auto cfg = config("noisy_g010");
  PurityStats st;
  const auto c = run_experiment(cfg, {.threads = 0, .hook = purity_hook(st)}).curve;
  const auto s = bound_setting(cfg);
  const auto d = check_upper(
      c, [&](std::uint32_t t) { return bounds::user_upper_noisy(t, s).value; },
      [&](std::uint32_t t) { return bounds::user_upper_noisy(t, s).value < t / 2.0; });
  Outcome o;
  const double frac = st.exploit ? static_cast<double>(st.disliked_exploit) / st.exploit : 0.0;
  // Binomial sigma of the pooled fraction around gamma.
  const double sigma = st.exploit ? std::sqrt(kNoise * (1 - kNoise) / st.exploit) : 0.0;
  const bool frac_ok = st.exploit > 0 && std::abs(frac - kNoise) <= kSigmas * sigma;
  o.passed = !d.first_violation && frac_ok;
  o.detail = "bound region: " + describe(d) + "; " + std::to_string(st.matched) + "/" +
             std::to_string(st.trials) + " trials matched, " + std::to_string(st.fallback) +
             " fell back to one group; exploit dislike fraction " + fmt(frac) + " vs " + fmt(kNoise) + " +- " +
             fmt(kSigmas * sigma);
  return o;
}

Outcome item_item_shape() {
  const auto start = std::chrono::steady_clock::now();
  const auto base = config("fig2_N600");
  const auto c600 = run_experiment(base).curve;
  const auto s = bound_setting(base);
  const auto d = check_upper(c600, [&](std::uint32_t t) { return std::min(bounds::item_upper_y(t, s), t / 2.0); });
  const auto cs600 = coldstart(c600, kColdstartGamma);
  const auto cs1200 = coldstart(run_experiment(config("fig2_N1200")).curve, kColdstartGamma);
  const auto cs_q120 = coldstart(run_experiment(config("fig2_qI120")).curve, kColdstartGamma);
  const double secs = seconds_since(start);
  std::optional<double> ratio;
  if (cs600 && cs1200) ratio = static_cast<double>(*cs600) / *cs1200;
  const bool ratio_ok = ratio && *ratio >= kFig2RatioLow && *ratio <= kFig2RatioHigh;
  const bool q_ok = cs600 && (!cs_q120 || *cs_q120 > *cs600);
  Outcome o;
  o.passed = !d.first_violation && ratio_ok && q_ok && secs < kFig2MaxSeconds;
  o.detail = "dominance: " + describe(d) + "; coldstart N600 " + fmt_cs(cs600) + ", N1200 " + fmt_cs(cs1200) +
             ", ratio " + (ratio ? fmt(*ratio) : std::string("n/a")) + "; q_I=120 " + fmt_cs(cs_q120) +
             "; runtime " + fmt(secs) + "s";
  return o;
}

Outcome lower_bounds() {
  // Omniscient reads the hidden types, so it is not a learning algorithm
  // and is outside the scope of a lower bound.
  const Algorithm algorithms[] = {Algorithm::Random, Algorithm::UserUser, Algorithm::UserUserNoisy,
                                  Algorithm::ItemItem};
  Outcome o;
  o.passed = true;
  for (const char* name : {"lower_user_structure", "lower_item_structure"}) {
    for (auto a : algorithms) {
      auto cfg = config(name);
      cfg.algorithm = a;
      const auto c = run_experiment(cfg).curve;
      const auto s = bound_setting(cfg);
      const bool user = cfg.model.mode == ModelMode::UserStructureOnly;
      const auto d = check_lower(c, [&](std::uint32_t t) {
        return user ? bounds::user_lower(t, s).value : bounds::item_lower(t, s).value;
      });
      o.passed = o.passed && !d.first_violation;
      o.detail += std::string(o.detail.empty() ? "" : "; ") + name + "/" + std::string(to_string(a)) + ": " +
                  (d.first_violation ? "violated at t=" + std::to_string(*d.first_violation)
                                     : "ok (worst margin " + fmt(d.worst_excess) + ")");
    }
  }
  return o;
}

// Second regularity implementation: ordered tuples and map-keyed patterns,
// sharing nothing with column_regular except the matrix type.
double naive_worst_deviation(const SignMatrix& a, std::size_t r) {
  const std::size_t n = a.cols(), m = a.rows();
  const double expected = m / std::ldexp(1.0, static_cast<int>(r));
  const std::size_t patterns = std::size_t{1} << r;
  double worst = 0;
  std::vector<std::size_t> w(r);
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    if (depth == r) {
      std::map<std::vector<int>, std::size_t> counts;
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<int> key;
        for (auto c : w) key.push_back(sign(a(i, c)));
        ++counts[key];
      }
      if (counts.size() < patterns) worst = std::max(worst, 1.0);
      for (const auto& [key, k] : counts) worst = std::max(worst, std::abs(k - expected) / expected);
      return;
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (std::find(w.begin(), w.begin() + depth, c) != w.begin() + depth) continue;
      w[depth] = c;
      rec(depth + 1);
    }
  };
  rec(0);
  return worst;
}

Outcome regularity() {
  Outcome o;
  o.passed = true;
  for (const auto& c : regularity_suite(kVerifySeed)) {
    o.passed = o.passed && c.passed;
    o.detail += c.name + ": " + c.detail + "; ";
  }
  Rng rng = make_rng(kVerifySeed, 0x99);
  std::size_t disagreements = 0;
  for (std::size_t k = 0; k < kEquivalenceInstances; ++k) {
    const std::size_t n = 1 + uniform_below<std::size_t>(rng, 6);
    const std::size_t m = 1 + uniform_below<std::size_t>(rng, 64);
    const std::size_t r = 1 + uniform_below<std::size_t>(rng, std::min<std::size_t>(3, n));
    const double eps = 0.1 * static_cast<double>(uniform_below<int>(rng, 10));
    const auto a = SignMatrix::random(m, n, rng);
    const auto rep = column_regular(a, r, eps);
    const double naive = naive_worst_deviation(a, r);
    if (std::abs(rep.worst_deviation - naive) > 1e-12 || rep.is_regular != (naive <= eps)) ++disagreements;
  }
  o.passed = o.passed && disagreements == 0;
  o.detail += "two implementations disagree on " + std::to_string(disagreements) + "/" +
              std::to_string(kEquivalenceInstances) + " instances";
  return o;
}

Outcome balls_bins() {
  Outcome o;
  o.passed = true;
  for (const auto& c : balls_bins_suite(kVerifySeed)) {
    o.passed = o.passed && c.passed;
    o.detail += (o.detail.empty() ? "" : "; ") + c.name + ": " + c.detail;
  }
  return o;
}

Outcome anytime() {
  const auto wrapped_cfg = config("anytime_user_user");
  const auto wrapped = run_experiment(wrapped_cfg).curve;
  Outcome o;
  o.passed = true;
  for (std::uint32_t cp : kAnytimeCheckpoints) {
    auto fixed_cfg = wrapped_cfg;
    fixed_cfg.anytime = false;
    fixed_cfg.horizon = cp;
    const double fixed = run_experiment(fixed_cfg).curve.regret_mean.back();
    const double any = wrapped.regret_mean.at(cp - 1);
    o.passed = o.passed && any <= kAnytimeFactor * fixed;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("t=") + std::to_string(cp) + ": wrapped " + fmt(any) +
                ", fixed " + fmt(fixed) + ", ratio " + fmt(any / fixed);
  }
  return o;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / ("cfregret_repro_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(g_config_dir)) {
    if (e.path().extension() == ".json") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  Outcome o;
  o.passed = !configs.empty();
  std::vector<std::string> differing;
  for (const auto& path : configs) {
    const auto cfg = load_config(path.string());
    const auto overlays = overlays_for(cfg);
    const auto a = dir / "a.csv", b = dir / "b.csv";
    emit_csv(run_experiment(cfg).curve, overlays, a.string());
    emit_csv(run_experiment(cfg).curve, overlays, b.string());
    const auto bytes_a = read_bytes(a);
    if (bytes_a.empty() || bytes_a != read_bytes(b)) differing.push_back(path.stem().string());
  }
  fs::remove_all(dir);
  o.passed = o.passed && differing.empty();
  o.detail = std::to_string(configs.size()) + " configs run twice, " + std::to_string(differing.size()) + " differ";
  for (const auto& d : differing) o.detail += " " + d;
  return o;
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "random baseline regret", random_baseline},
    {2, "user-user exploit purity", user_user_purity},
    {3, "user-user upper bound dominance", user_upper_dominance},
    {4, "user-user figure shape", figure1_shape},
    {5, "noisy user-user bound and exploit noise", noisy_user_user},
    {6, "item-item dominance and figure shape", item_item_shape},
    {7, "lower-bound consistency", lower_bounds},
    {8, "regularity suite", regularity},
    {9, "balls and bins", balls_bins},
    {10, "anytime wrapper", anytime},
    {11, "reproducibility", reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string config_dir = CFREGRET_CONFIG_DIR;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--config-dir", config_dir, "Directory holding the shipped configs");
  CLI11_PARSE(app, argc, argv);
  g_config_dir = config_dir;

  int failures = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s criterion %d (%s): %s\n", o.passed ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
