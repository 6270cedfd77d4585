#pragma once

#include "uoi/core.hpp"

namespace uoi {

/// Reference trajectory y_t.
struct Reference {
  enum class Kind { constant, sinusoid };
  Kind kind = Kind::constant;
  double level = 0.0;
  double amplitude = 0.0;
  double period = 100.0;

  double at(Index slot) const;
};

/// Scalar plant x_t = a x_{t-1} + b v_t + r_t controlled from an estimate.
///
/// `x_hat` is the controller's posterior estimate of `x`; `x_pred` is its
/// prediction of `x` before the current slot's update is resolved.
struct LinearPlant {
  double a = 1.0;
  double b = 1.0;
  double noise_var = 1.0;
  double x = 0.0;
  double x_hat = 0.0;
  double x_pred = 0.0;
  Index slot = 0;
  Reference y_ref;

  void validate() const;
  /// Prior estimation error x - x_pred; equals the tracking error x - y
  /// under certainty-equivalent control.
  double prior_error() const { return x - x_pred; }
  double posterior_error() const { return x - x_hat; }
};

/// Certainty-equivalent action (y_next - a x_hat) / b.
double optimal_control(const LinearPlant& plant, double y_next);

/// Applies v and noise r: x' = a x + b v + r, x_pred' = a x_hat + b v.
/// The estimate is left for resolve_update.
LinearPlant advance_plant(const LinearPlant& plant, double v, double r);

/// x_hat' = x' on delivery, otherwise the prediction.
LinearPlant resolve_update(const LinearPlant& plant, bool updated);

/// advance_plant with r ~ N(0, noise_var) drawn at the plant's slot, then resolve_update.
LinearPlant step_plant(const LinearPlant& plant, double v, bool updated, Stream& stream);

}  // namespace uoi
