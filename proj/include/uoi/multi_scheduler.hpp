#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uoi/core.hpp"

namespace uoi {

/// N terminals sharing K sub-channels.
struct FleetConfig {
  std::vector<TerminalParams> terminals;
  int k = 1;

  Index size() const { return static_cast<Index>(terminals.size()); }
  void validate() const;

  Eigen::VectorXd p() const;
  Eigen::VectorXd sigma2() const;
  Eigen::VectorXd omega_bar() const;
  Eigen::VectorXd pi() const;
  /// Water-filling widths sqrt(omega_bar sigma^2 / p).
  Eigen::VectorXd widths() const;
  /// Copy with every pi_i replaced.
  FleetConfig with_pi(const Eigen::VectorXd& pi) const;
};

/// Default fleet: p_i = p_min + (p_max - p_min)(i-1)/(N-1), identical sigma^2, omega_bar.
FleetConfig make_linear_fleet(Index n, int k, double sigma2, double omega_bar,
                              double p_min = 0.7, double p_max = 1.0);

struct StationaryPolicy {
  Eigen::VectorXd pi;
  double objective = 0.0;  // sum_i d_i^2 / pi_i over terminals with d_i > 0
  std::vector<std::string> diagnostics;
};

/// Water level search for min sum d_i^2/pi_i s.t. sum pi <= k, pi in [0,1].
/// Bisection on lambda with pi_i = min(1, d_i/lambda), then an exact polish
/// from the identified saturated set.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> waterfill_levels(
    const Eigen::MatrixBase<Derived>& d, int k) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = d.size();
  Vec pi = Vec::Zero(n);
  Index positive = 0;
  for (Index i = 0; i < n; ++i) positive += d(i) > Scalar(0) ? 1 : 0;
  if (positive <= k) {
    for (Index i = 0; i < n; ++i) pi(i) = d(i) > Scalar(0) ? Scalar(1) : Scalar(0);
    return pi;
  }
  const Scalar budget = static_cast<Scalar>(k);
  auto fill = [&](Scalar lambda) {
    Scalar sum(0);
    for (Index i = 0; i < n; ++i) {
      pi(i) = d(i) > Scalar(0) ? std::min(Scalar(1), d(i) / lambda) : Scalar(0);
      sum += pi(i);
    }
    return sum;
  };
  Scalar lo = std::numeric_limits<Scalar>::max();
  for (Index i = 0; i < n; ++i)
    if (d(i) > Scalar(0)) lo = std::min(lo, d(i));
  Scalar hi = d.sum() / budget;
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    const Scalar sum = fill(mid);
    if (std::abs(sum - budget) < Scalar(1e-12)) break;
    (sum > budget ? lo : hi) = mid;
    if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * hi) break;
  }
  const Scalar lambda = Scalar(0.5) * (lo + hi);
  // Exact level from the saturated set.
  Index saturated = 0;
  Scalar free_width(0);
  for (Index i = 0; i < n; ++i) {
    if (d(i) <= Scalar(0)) continue;
    if (d(i) >= lambda) ++saturated;
    else free_width += d(i);
  }
  const Scalar exact = free_width / (budget - static_cast<Scalar>(saturated));
  bool consistent = free_width > Scalar(0) && saturated < k;
  for (Index i = 0; i < n && consistent; ++i) {
    if (d(i) <= Scalar(0)) continue;
    if ((d(i) >= lambda) != (d(i) >= exact)) consistent = false;
  }
  fill(consistent ? exact : lambda);
  return pi;
}

/// Optimal stationary randomized policy for a fleet.
StationaryPolicy waterfill(const FleetConfig& fleet);

/// Objective sum_i omega_bar_i sigma_i^2 / (p_i pi_i), skipping sigma_i^2 = 0.
double stationary_objective(const FleetConfig& fleet, const Eigen::VectorXd& pi);

/// Multi-terminal update index (omega_bar (1/(p pi) - 1) + omega_next) p q^2.
template <typename Scalar>
Scalar multi_update_index(const TerminalParams& t, Scalar omega_next, Scalar q) {
  const Scalar pp = static_cast<Scalar>(t.p * t.pi);
  if (!(pp > Scalar(0)))
    throw InvalidParameter("multi_update_index: terminal " + std::to_string(t.id) + " has p*pi = 0");
  return (static_cast<Scalar>(t.omega_bar) * (Scalar(1) / pp - Scalar(1)) + omega_next) *
         static_cast<Scalar>(t.p) * q * q;
}

/// The min(k, N) ids with largest values, ordered by rank; ties go to the lower id.
std::vector<Index> schedule_topk(const Eigen::Ref<const Eigen::VectorXd>& indices, int k);

/// Average-UoI bound of top-K scheduling parameterized by `policy`.
double theorem2_bound(const FleetConfig& fleet, const StationaryPolicy& policy);

/// K consecutive ids modulo N starting at slot*K.
std::vector<Index> schedule_round_robin(Index slot, Index n, int k);

/// Age of information per terminal.
struct AoIState {
  std::vector<Index> delta;

  explicit AoIState(Index n = 0) : delta(static_cast<std::size_t>(n), 1) {}
  /// Reset to 1 on delivery, otherwise grow by one.
  void step(const std::vector<std::uint8_t>& delivered);
};

/// Top-K by p_i Delta_i (Delta_i + 1).
std::vector<Index> schedule_aoi(const AoIState& aoi, const FleetConfig& fleet);

/// Systematic sampling: selects floor or ceil of sum(pi) ids with inclusion
/// probabilities exactly pi_i, using a single uniform `u` in (0,1).
std::vector<Index> sample_stationary(const Eigen::Ref<const Eigen::VectorXd>& pi, double u);

}  // namespace uoi
