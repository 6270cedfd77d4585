#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "uoi/control.hpp"
#include "uoi/core.hpp"
#include "uoi/mdp.hpp"
#include "uoi/multi_scheduler.hpp"
#include "uoi/schedulers.hpp"

namespace uoi {

/// Error bound as a step function of the realized weight: the bound of the
/// largest listed weight not above the realized one (the first entry below).
struct ViolationThresholds {
  std::vector<std::pair<double, double>> by_weight{{1.0, 15.0}, {100.0, 5.0}};

  double bound_for(double weight) const;
  bool violated(double weight, double error) const;
};

struct TracePoint {
  Index t = 0;
  double state = 0.0;  // H_t for single runs, activation threshold for CSMA, else 0
  std::vector<double> q;
  double uoi = 0.0;
};

/// Raw sums from one replication. Slot t contributes the UoI of slot t+1.
struct ReplicationStats {
  static constexpr int kBatches = 20;

  Index slots = 0;
  double uoi_sum = 0.0;
  std::vector<double> batch_sum = std::vector<double>(kBatches, 0.0);
  std::vector<Index> batch_slots = std::vector<Index>(kBatches, 0);
  Eigen::VectorXd attempts;
  Index violations = 0;
  Index terminal_slots = 0;
  double final_h = 0.0;
  std::vector<TracePoint> trace;
  /// Draw counts of the shared (weight, increment, channel) streams, terminal-major.
  std::vector<std::uint64_t> common_draws;
  CsmaStats csma;
  // control runs
  double tracking_sum = 0.0;
  double posterior_sum = 0.0;

  void add_slot(Index t, Index horizon, double uoi);
};

enum class SinglePolicy { adaptive, stationary, rvi_uoi, rvi_aoi, always };

std::string_view single_policy_name(SinglePolicy policy);
SinglePolicy parse_single_policy(std::string_view name);

struct SingleSetup {
  TerminalParams params;
  WeightProcess weight = WeightProcess::constant(1.0);
  double rho = 1.0;
  double v = 1.0;
  SinglePolicy policy = SinglePolicy::adaptive;
  const StationaryPolicyTable* table = nullptr;  // required for rvi policies
  ViolationThresholds thresholds;
  Index trace_slots = 0;
};

ReplicationStats simulate_single(const SingleSetup& setup, Index horizon, std::uint64_t seed,
                                 std::uint64_t replication);

struct FleetSetup {
  FleetConfig fleet;  // sigma2 already scaled for slot length; pi set
  std::vector<WeightProcess> weights;
  ViolationThresholds thresholds;
  Index trace_slots = 0;
};

ReplicationStats simulate_fleet(const FleetSetup& setup, Scheduler& scheduler, Index horizon,
                                std::uint64_t seed, std::uint64_t replication);

struct ControlSetup {
  FleetSetup fleet;      // terminal sigma2 must equal the plant noise variance
  LinearPlant plant;     // template for every terminal
};

/// N plants sharing the uplink. uoi_sum accumulates omega_t (x_t - y_t)^2
/// recomputed from the plant states; posterior_sum accumulates
/// omega_t (x_{t-1} - x_hat_{t-1})^2.
ReplicationStats simulate_control(const ControlSetup& setup, Scheduler& scheduler, Index horizon,
                                  std::uint64_t seed, std::uint64_t replication);

}  // namespace uoi
