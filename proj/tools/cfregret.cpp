// Command-line driver: simulate, bounds, coldstart, verify.
//
// Exit codes: 0 success, 1 a verification failed, 2 bad configuration or
// arguments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfregret/cfregret.hpp"

namespace {

using namespace cfregret;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct CommonRunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> trials;
  unsigned threads = 0;
};

void add_run_flags(CLI::App* cmd, CommonRunFlags& f) {
  cmd->add_option("--seed", f.seed, "Override base_seed");
  cmd->add_option("--trials", f.trials, "Override the trial count");
  cmd->add_option("--threads", f.threads, "Worker threads (0: all cores)");
}

ExperimentConfig load_with_overrides(const std::string& path, const CommonRunFlags& f) {
  ExperimentConfig cfg = load_config(path);
  if (f.seed) cfg.base_seed = *f.seed;
  if (f.trials) {
    if (*f.trials == 0) throw ConfigError("--trials must be at least 1");
    cfg.trials = *f.trials;
  }
  if (auto w = small_type_count_warning(cfg.model)) std::cerr << *w << '\n';
  return cfg;
}

void print_coldstart(const RegretCurve& curve, double gamma) {
  const auto cs = coldstart(curve, gamma);
  std::printf("coldstart(%s) = %s\n", format_number(gamma).c_str(),
              cs ? std::to_string(*cs).c_str() : "none");
}

int run_simulate(const std::string& config, const std::string& out, const CommonRunFlags& f) {
  const auto cfg = load_with_overrides(config, f);
  const auto overlays = overlays_for(cfg);
  const auto result = run_experiment(cfg, {.threads = f.threads, .hook = {}});
  emit_csv(result.curve, overlays, out);
  const auto& c = result.curve;
  std::printf("regret(%u) = %s +- %s\n", c.horizon(), format_number(c.regret_mean.back()).c_str(),
              format_number(c.regret_se.back()).c_str());
  for (double g : cfg.coldstart_gammas) print_coldstart(c, g);
  return kExitOk;
}

int run_coldstart(const std::string& config, double gamma, const CommonRunFlags& f) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("--gamma must lie in (0, 1)");
  const auto cfg = load_with_overrides(config, f);
  const auto result = run_experiment(cfg, {.threads = f.threads, .hook = {}});
  print_coldstart(result.curve, gamma);
  return kExitOk;
}

struct BoundFlags {
  std::string kind;
  std::uint32_t n = 0;
  double q_u = 0, q_i = 0, gamma = 0.0, delta = 0.01;
  std::uint32_t horizon = 0;
  std::string out;
};

int run_bounds(const BoundFlags& f) {
  const auto kind = bounds::parse_bound_kind(f.kind);
  if (f.n == 0 || f.horizon == 0) throw ConfigError("--N and --T must be positive");
  if (!(f.gamma >= 0.0 && f.gamma < 0.5)) throw ConfigError("--gamma must lie in [0, 1/2)");
  bounds::Setting s{f.n, f.q_u, f.q_i, f.gamma, f.delta};
  const auto curve = bounds::bound_curve(kind, f.horizon, s);
  const auto last = bounds::evaluate(kind, f.horizon, s);
  if (!last.hypotheses_hold) std::cerr << "note: the bound's hypotheses do not hold for these parameters\n";
  if (last.vacuous) std::cerr << "note: bound is vacuous at T=" << f.horizon << '\n';

  std::ofstream out(f.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + f.out + "' for writing");
  out << "t,bound_" << bounds::to_string(kind) << ",raw,regime\n";
  for (std::uint32_t t = 1; t <= f.horizon; ++t) {
    out << t << ',' << format_number(curve.values[t - 1]) << ',' << format_number(curve.raw[t - 1]) << ','
        << curve.regime_labels[t - 1] << '\n';
  }
  return out ? kExitOk : kExitFailed;
}

int run_verify(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> checks;
  if (suite == "regularity" || suite == "all") {
    auto r = regularity_suite(seed);
    checks.insert(checks.end(), r.begin(), r.end());
  }
  if (suite == "ballsbins" || suite == "all") {
    auto r = balls_bins_suite(seed);
    checks.insert(checks.end(), r.begin(), r.end());
  }
  if (checks.empty()) throw ConfigError("unknown suite '" + suite + "'");
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regret simulation for online collaborative filtering"};
  app.require_subcommand(1);

  CommonRunFlags run_flags;
  std::string config, out;

  auto* sim = app.add_subcommand("simulate", "Run a configured experiment and write the regret CSV");
  sim->add_option("--config", config, "Experiment JSON")->required();
  sim->add_option("--out", out, "Output CSV")->required();
  add_run_flags(sim, run_flags);

  double cs_gamma = 0.25;
  auto* cs = app.add_subcommand("coldstart", "Print the cold-start time of a configured experiment");
  cs->add_option("--config", config, "Experiment JSON")->required();
  cs->add_option("--gamma", cs_gamma, "Threshold in (0, 1)")->required();
  add_run_flags(cs, run_flags);

  BoundFlags bf;
  auto* bd = app.add_subcommand("bounds", "Tabulate a closed-form regret bound");
  bd->add_option("--kind", bf.kind, "UserUpper, UserUpperNoisy, UserLower, ItemUpper or ItemLower")->required();
  bd->add_option("--N", bf.n, "Number of users")->required();
  bd->add_option("--qU", bf.q_u, "Number of user types");
  bd->add_option("--qI", bf.q_i, "Number of item types");
  bd->add_option("--gamma", bf.gamma, "Noise level");
  bd->add_option("--delta", bf.delta, "Lower-bound confidence slack");
  bd->add_option("--T", bf.horizon, "Horizon")->required();
  bd->add_option("--out", bf.out, "Output CSV")->required();

  std::string suite = "all";
  std::uint64_t verify_seed = 1;
  auto* vf = app.add_subcommand("verify", "Run the combinatorial self-checks");
  vf->add_option("--suite", suite, "regularity, ballsbins or all");
  vf->add_option("--seed", verify_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return run_simulate(config, out, run_flags);
    if (*cs) return run_coldstart(config, cs_gamma, run_flags);
    if (*bd) return run_bounds(bf);
    if (*vf) return run_verify(suite, verify_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitConfig;
}
