#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uoi/config.hpp"
#include "uoi/export.hpp"
#include "uoi/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kBoundViolation = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Urgency-of-information status update simulator"};
  std::string scenario_arg, config_path, out_path, format_arg = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<uoi::Index> horizon, replications, trace;
  std::optional<int> k;
  std::optional<double> mini_slot, qmax, qstep, a, b, noise_var, p, sigma2;
  std::vector<double> rho, v;
  std::vector<uoi::Index> n;
  std::vector<int> window;
  std::vector<std::string> policies;
  std::string cost;
  bool assert_bounds = false;

  app.add_option("scenario", scenario_arg, "single | multi | csma | mdp | control | waterfill")->required();
  app.add_option("--config,-c", config_path, "JSON experiment file");
  app.add_option("--seed,-s", seed, "64-bit base seed");
  app.add_option("--out,-o", out_path, "output path (stdout if omitted)");
  app.add_option("--format,-f", format_arg, "csv | jsonl | plot");
  app.add_flag("--assert-bounds", assert_bounds, "exit 3 if a proven bound is exceeded by more than 3 SE");
  app.add_option("--horizon", horizon, "slots per replication");
  app.add_option("--replications", replications, "independent replications");
  app.add_option("--policy", policies, "policies to compare (repeatable)");
  app.add_option("--rho", rho, "update budgets");
  app.add_option("--V", v, "penalty weights");
  app.add_option("--p", p, "single-terminal success probability");
  app.add_option("--sigma2", sigma2, "increment variance");
  app.add_option("--n", n, "fleet sizes");
  app.add_option("--k", k, "sub-channels");
  app.add_option("--window", window, "contention windows");
  app.add_option("--mini-slot-us", mini_slot, "mini-slot duration in microseconds");
  app.add_option("--cost", cost, "uoi | aoi (mdp scenario)");
  app.add_option("--qmax", qmax, "error grid half-width");
  app.add_option("--qstep", qstep, "error grid step");
  app.add_option("--a", a, "plant gain");
  app.add_option("--b", b, "control gain");
  app.add_option("--noise-var", noise_var, "plant noise variance");
  app.add_option("--trace", trace, "per-slot trace length (jsonl only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    const auto scenario = uoi::parse_scenario(scenario_arg);
    if (!scenario) throw uoi::ConfigError("scenario", "unknown scenario '" + scenario_arg + "'");
    const auto format = uoi::parse_format(format_arg);
    if (!format) throw uoi::ConfigError("--format", "expected csv, jsonl or plot");

    uoi::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = uoi::load_config(config_path, *scenario);
    } else {
      cfg.scenario = *scenario;
    }
    if (seed) cfg.seed = *seed;
    if (horizon) cfg.horizon = *horizon;
    if (replications) cfg.replications = *replications;
    if (!policies.empty()) cfg.policies = policies;
    if (!rho.empty()) cfg.rho = rho;
    if (!v.empty()) cfg.v = v;
    if (p) cfg.p = *p;
    if (sigma2) cfg.sigma2 = *sigma2;
    if (!n.empty()) cfg.n = n;
    if (k) cfg.k = *k;
    if (!window.empty()) cfg.window = window;
    if (mini_slot) cfg.mini_slot_us = *mini_slot;
    if (!cost.empty()) {
      if (cost == "uoi") cfg.cost = uoi::CostKind::uoi;
      else if (cost == "aoi") cfg.cost = uoi::CostKind::aoi;
      else throw uoi::ConfigError("--cost", "expected uoi or aoi");
    }
    if (qmax) cfg.q_max = *qmax;
    if (qstep) cfg.q_step = *qstep;
    if (a) cfg.a = *a;
    if (b) cfg.b = *b;
    if (noise_var) cfg.noise_var = *noise_var;
    if (trace) cfg.trace_slots = *trace;

    const uoi::Report report = uoi::run(cfg);
    uoi::export_report(report, *format, out_path);
    if (assert_bounds && uoi::bounds_violated(report)) {
      std::cerr << "uoi-sim: average UoI exceeds the proven bound by more than 3 standard errors\n";
      return kBoundViolation;
    }
  } catch (const uoi::ConfigError& e) {
    std::cerr << "uoi-sim: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const uoi::InvalidParameter& e) {
    std::cerr << "uoi-sim: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const uoi::IoError& e) {
    std::cerr << "uoi-sim: I/O error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "uoi-sim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
