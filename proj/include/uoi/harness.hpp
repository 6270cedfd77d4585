#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "uoi/control.hpp"
#include "uoi/csma.hpp"
#include "uoi/mdp.hpp"
#include "uoi/simulate.hpp"

namespace uoi {

enum class Scenario { single, multi, csma, mdp, control, waterfill };

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

/// Invalid configuration; `field` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Everything a run needs. Optional fields fall back to scenario defaults.
struct ExperimentConfig {
  Scenario scenario = Scenario::single;
  Index horizon = 1'000'000;
  Index replications = 10;
  std::uint64_t seed = 1;
  std::vector<std::string> policies;  // empty: scenario default set

  // single terminal (single, mdp)
  double p = 0.8;
  double sigma2 = 1.0;
  std::optional<WeightProcess> weight;  // default: 0.01 -> 100 (single), 0.05 -> 100 (fleet)
  std::vector<double> rho{0.25};
  std::vector<double> v{1.0};

  // fleet (multi, csma, control, waterfill)
  std::vector<Index> n{10};
  int k = 2;
  double p_min = 0.7;
  double p_max = 1.0;
  std::vector<TerminalParams> terminals;  // explicit fleet; overrides n/p_min/p_max
  std::vector<double> d;                  // waterfill widths; overrides the fleet

  // contention
  std::vector<int> window{16};
  double mini_slot_us = 10.0;

  // reference policies
  CostKind cost = CostKind::uoi;
  std::optional<double> q_max;
  std::optional<double> q_step;
  Index age_max = 200;
  int max_iter = 100000;

  // control demo
  double a = 1.0;
  double b = 1.0;
  double noise_var = 1.0;
  Reference reference;

  ViolationThresholds thresholds;
  Index trace_slots = 0;

  void validate() const;
  WeightProcess effective_weight() const;
};

/// Metrics for one configuration point, aggregated over replications.
struct RunMetrics {
  std::string scenario;
  std::string policy;
  Index n = 1;
  int k = 1;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double v = std::numeric_limits<double>::quiet_NaN();
  int w = 0;
  double avg_uoi = 0.0;
  double stderr_uoi = 0.0;
  Eigen::VectorXd avg_freq;  // per terminal
  double violation_prob = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool bound_applies = false;  // bound is a proven guarantee for this policy
  Index samples = 0;           // horizon * replications
  std::vector<std::pair<std::string, double>> extras;

  double mean_freq() const { return avg_freq.size() ? avg_freq.mean() : 0.0; }
  double extra(const std::string& key) const;
};

struct Report {
  Scenario scenario = Scenario::single;
  std::vector<RunMetrics> rows;
  std::vector<TracePoint> trace;                 // replication 0 of the first point
  std::optional<StationaryPolicyTable> table;    // mdp scenario
  /// Shared-stream draw counts of each row's first replication.
  std::vector<std::vector<std::uint64_t>> row_draws;
};

/// Executes the scenario. Replications run in parallel and merge by index.
Report run(const ExperimentConfig& config);

/// Aggregates replications into metrics (means, batch-mean standard error).
void aggregate(const std::vector<ReplicationStats>& reps, Index horizon, RunMetrics& out);

/// Builds the fleet of size n that the fleet scenarios use.
FleetConfig build_fleet(const ExperimentConfig& config, Index n);

/// True if some row with a proven bound exceeds bound + 3 standard errors.
bool bounds_violated(const Report& report);

}  // namespace uoi
