#pragma once

#include "uoi/core.hpp"

namespace uoi {

/// Budget-tracking queue H_{t+1} = [H_t - rho + U_t]^+ with tradeoff V.
struct VirtualQueue {
  double h = 0.0;
  double rho = 1.0;
  double v = 1.0;
};

VirtualQueue step_virtual_queue(const VirtualQueue& vq, bool u);

/// Single-terminal update index (omega_{t+1} - omega_bar + omega_bar/(p rho)) p q^2.
template <typename Scalar>
Scalar update_index(const TerminalParams& params, Scalar rho, Scalar omega_next, Scalar q) {
  const Scalar p = static_cast<Scalar>(params.p);
  const Scalar wbar = static_cast<Scalar>(params.omega_bar);
  if (!(p * rho > Scalar(0))) throw InvalidParameter("update_index: p*rho must be positive");
  return (omega_next - wbar + wbar / (p * rho)) * p * q * q;
}

/// Average-UoI upper bound of the threshold rule: omega_bar sigma^2/(p rho) + V/2.
template <typename Scalar>
Scalar theorem1_bound(const TerminalParams& params, Scalar rho, Scalar v) {
  const Scalar p = static_cast<Scalar>(params.p);
  if (!(p * rho > Scalar(0))) throw InvalidParameter("theorem1_bound: p*rho must be positive");
  return static_cast<Scalar>(params.omega_bar * params.sigma2) / (p * rho) + v / Scalar(2);
}

struct SingleUpdaterState {
  TerminalParams params;
  VirtualQueue vq;
  ErrorQueue eq;
  double theta = 0.0;  // omega_bar (1 - p rho) / (p rho)
};

/// Starts from H_0 = 0, Q_0 = 0.
SingleUpdaterState make_single_updater(const TerminalParams& params, double rho, double v);

/// 1 iff the update index strictly exceeds V H_t.
bool decide_update(const SingleUpdaterState& state, double omega_next);

/// Right-hand side of the per-slot drift-plus-penalty bound for a fixed
/// decision `u`, with penalty omega_{t+1} Q_{t+1}^2 and Lyapunov function
/// V H^2 / 2 + theta Q^2.
double drift_plus_penalty_bound(const SingleUpdaterState& state, double omega_next, bool u);

/// Lyapunov function V H^2 / 2 + theta Q^2 of a state.
double lyapunov(const SingleUpdaterState& state);

}  // namespace uoi
