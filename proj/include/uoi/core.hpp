#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uoi/rng.hpp"

namespace uoi {

using Index = std::int64_t;

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Urgency of information for a squared-error cost: weight * error^2.
template <typename Scalar>
Scalar uoi(Scalar weight, Scalar error) {
  if (!(weight > Scalar(0))) throw InvalidParameter("uoi: weight must be positive");
  return weight * error * error;
}

/// Per-terminal constants.
struct TerminalParams {
  Index id = 0;
  double p = 1.0;          // channel success probability
  double sigma2 = 1.0;     // increment variance per slot
  double omega_bar = 1.0;  // mean context weight
  double pi = 1.0;         // stationary schedule probability

  /// Throws InvalidParameter on the first violated invariant.
  void validate() const;
};

/// Context-aware weight process. Samples are indexed by slot, so the
/// realized weight of slot t+1 is available (and stable) at slot t.
class WeightProcess {
 public:
  enum class Kind { two_point, constant, periodic_burst };

  static WeightProcess two_point(double lo, double hi, double prob_hi);
  static WeightProcess constant(double w);
  static WeightProcess periodic_burst(double base, double burst, Index period, Index burst_len);

  Kind kind() const { return kind_; }
  double mean() const;
  /// Realized weight of `slot`. Draws once from `stream` for two-point.
  double at(Index slot, Stream& stream) const;
  /// (value, probability) pairs of the per-slot marginal.
  std::vector<std::pair<double, double>> support() const;
  /// True if samples are i.i.d. across slots.
  bool iid() const { return kind_ != Kind::periodic_burst; }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double prob_hi() const { return prob_hi_; }
  Index period() const { return period_; }
  Index burst_len() const { return burst_len_; }

 private:
  Kind kind_ = Kind::constant;
  double lo_ = 1.0;
  double hi_ = 1.0;
  double prob_hi_ = 0.0;
  Index period_ = 1;
  Index burst_len_ = 0;
};

/// Zero-mean Gaussian error increments.
struct IncrementProcess {
  double sigma2 = 1.0;

  double at(Index slot, Stream& stream) const { return std::sqrt(sigma2) * stream.normal(slot); }
};

/// Estimation error Q_t with instantaneous-delivery dynamics.
struct ErrorQueue {
  double q = 0.0;
  Index slot = 0;
  Index last_delivery_slot = -1;
};

/// Channel state S_t for one slot.
struct ChannelDraw {
  bool s = false;
};

ChannelDraw draw_channel(double p, Index slot, Stream& stream);

/// D_t = U_t * S_t.
inline bool delivered(bool u, ChannelDraw c) { return u && c.s; }

/// Q' = (1 - U*S) q + A.
ErrorQueue step_error(const ErrorQueue& queue, bool u, bool s, double a);

/// (omega_t, omega_{t+1}) for `slot`.
std::pair<double, double> sample_weight_pair(const WeightProcess& process, Index slot,
                                             Stream& stream);

}  // namespace uoi
