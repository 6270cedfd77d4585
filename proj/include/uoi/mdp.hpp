#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "uoi/core.hpp"

namespace uoi {

enum class CostKind { uoi, aoi };

/// Discretization of the single-terminal chain.
///
/// UoI chain state: (error bin, index of omega_{t+1} in weight_support).
/// AoI chain state: integer age in [1, age_max].
struct MdpGrid {
  double q_max = 25.0;
  double q_step = 0.25;
  std::vector<std::pair<double, double>> weight_support{{1.0, 1.0}};
  double lambda = 0.0;  // price per update
  Index age_max = 200;
  int max_iter = 100000;
  double tol = 1e-6;

  /// q_max = 25 sigma, q_step = 0.25 sigma, support from the weight process.
  static MdpGrid defaults(const TerminalParams& params, const WeightProcess& weights);

  Index bins() const;
  Index states(CostKind kind) const;
  void validate() const;
};

struct StationaryPolicyTable {
  CostKind kind = CostKind::uoi;
  /// Update probability per state: rows are error bins (or ages - 1), columns
  /// are omega_{t+1} support points (a single column for AoI). Entries are 0/1
  /// except where two Lagrangian policies are mixed.
  Eigen::MatrixXd decision;
  Eigen::VectorXd q_centers;
  std::vector<double> weights;
  double lambda = 0.0;
  double avg_cost = 0.0;  // long-run cost without the update price
  double avg_freq = 0.0;
  double gain = 0.0;      // RVI average Lagrangian cost
  int iterations = 0;
  double span = 0.0;
  bool converged = false;
  Eigen::VectorXd values;  // relative values, state-major
  std::vector<std::string> diagnostics;

  /// Nearest-bin lookup for the UoI chain.
  double update_probability(double q, double omega_next) const;
  /// Lookup for the AoI chain; ages beyond the cap use the last row.
  double update_probability_age(Index age) const;
};

/// Relative value iteration on the discretized chain with price grid.lambda.
/// `init`, if given, seeds the relative value function.
StationaryPolicyTable rvi_solve(const MdpGrid& grid, const TerminalParams& params, CostKind kind,
                                const std::optional<Eigen::VectorXd>& init = std::nullopt);

/// Exact long-run (cost, frequency) of a decision table via the stationary
/// distribution of the induced chain.
std::pair<double, double> evaluate_table(const MdpGrid& grid, const TerminalParams& params, CostKind kind,
                                         const Eigen::MatrixXd& decision);

struct CalibratedPolicy {
  double lambda = 0.0;
  StationaryPolicyTable table;
};

/// Bisection on the update price until the frequency meets rho, then
/// per-state mixing of the two bracketing policies.
CalibratedPolicy calibrate_multiplier(const MdpGrid& grid, const TerminalParams& params, double rho,
                                      CostKind kind);

/// Discretized zero-mean Gaussian increment: probabilities of offsets
/// -radius..radius bins, tails folded into the end points.
Eigen::VectorXd increment_pmf(double sigma2, double q_step, Index radius);

}  // namespace uoi
