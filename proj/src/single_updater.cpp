#include "uoi/single_updater.hpp"

#include <algorithm>

namespace uoi {

VirtualQueue step_virtual_queue(const VirtualQueue& vq, bool u) {
  VirtualQueue next = vq;
  next.h = std::max(0.0, vq.h - vq.rho + (u ? 1.0 : 0.0));
  return next;
}

SingleUpdaterState make_single_updater(const TerminalParams& params, double rho, double v) {
  params.validate();
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidParameter("rho must be in (0,1]");
  if (!(v > 0.0)) throw InvalidParameter("V must be positive");
  SingleUpdaterState s;
  s.params = params;
  s.vq = {0.0, rho, v};
  const double pr = params.p * rho;
  s.theta = params.omega_bar * (1.0 - pr) / pr;
  return s;
}

bool decide_update(const SingleUpdaterState& state, double omega_next) {
  const double j = update_index(state.params, state.vq.rho, omega_next, state.eq.q);
  return j > state.vq.v * state.vq.h;
}

double drift_plus_penalty_bound(const SingleUpdaterState& state, double omega_next, bool u) {
  const auto& P = state.params;
  const double q2 = state.eq.q * state.eq.q;
  const double v = state.vq.v;
  const double h = state.vq.h;
  const double uu = u ? 1.0 : 0.0;
  const double penalty = omega_next * (q2 * (1.0 - P.p * uu) + P.sigma2);
  return state.theta * P.sigma2 + 0.5 * v - v * state.vq.rho * h + penalty +
         (v * h - state.theta * P.p * q2) * uu;
}

double lyapunov(const SingleUpdaterState& state) {
  return 0.5 * state.vq.v * state.vq.h * state.vq.h + state.theta * state.eq.q * state.eq.q;
}

}  // namespace uoi
