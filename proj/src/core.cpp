#include "uoi/core.hpp"

#include <cmath>

namespace uoi {

void TerminalParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("terminal " + std::to_string(id) + ": p must be in (0,1]");
  if (!(sigma2 >= 0.0)) throw InvalidParameter("terminal " + std::to_string(id) + ": sigma2 must be nonnegative");
  if (!(omega_bar > 0.0)) throw InvalidParameter("terminal " + std::to_string(id) + ": omega_bar must be positive");
  if (!(pi >= 0.0 && pi <= 1.0)) throw InvalidParameter("terminal " + std::to_string(id) + ": pi must be in [0,1]");
}

WeightProcess WeightProcess::two_point(double lo, double hi, double prob_hi) {
  if (!(lo > 0.0 && hi > 0.0)) throw InvalidParameter("two-point weights must be positive");
  if (!(prob_hi >= 0.0 && prob_hi <= 1.0)) throw InvalidParameter("two-point prob_hi must be in [0,1]");
  WeightProcess w;
  w.kind_ = Kind::two_point;
  w.lo_ = lo;
  w.hi_ = hi;
  w.prob_hi_ = prob_hi;
  return w;
}

WeightProcess WeightProcess::constant(double value) {
  if (!(value > 0.0)) throw InvalidParameter("constant weight must be positive");
  WeightProcess w;
  w.kind_ = Kind::constant;
  w.lo_ = w.hi_ = value;
  return w;
}

WeightProcess WeightProcess::periodic_burst(double base, double burst, Index period, Index burst_len) {
  if (!(base > 0.0 && burst > 0.0)) throw InvalidParameter("burst weights must be positive");
  if (period < 1 || burst_len < 0 || burst_len > period)
    throw InvalidParameter("periodic-burst needs period >= 1 and 0 <= burst_len <= period");
  WeightProcess w;
  w.kind_ = Kind::periodic_burst;
  w.lo_ = base;
  w.hi_ = burst;
  w.period_ = period;
  w.burst_len_ = burst_len;
  w.prob_hi_ = static_cast<double>(burst_len) / static_cast<double>(period);
  return w;
}

double WeightProcess::mean() const {
  switch (kind_) {
    case Kind::constant:
      return lo_;
    case Kind::two_point:
    case Kind::periodic_burst:
      return (1.0 - prob_hi_) * lo_ + prob_hi_ * hi_;
  }
  return lo_;
}

double WeightProcess::at(Index slot, Stream& stream) const {
  switch (kind_) {
    case Kind::constant:
      return lo_;
    case Kind::two_point:
      return stream.uniform(static_cast<std::uint64_t>(slot)) < prob_hi_ ? hi_ : lo_;
    case Kind::periodic_burst: {
      const Index phase = ((slot % period_) + period_) % period_;
      return phase >= period_ - burst_len_ ? hi_ : lo_;
    }
  }
  return lo_;
}

std::vector<std::pair<double, double>> WeightProcess::support() const {
  if (kind_ == Kind::constant || prob_hi_ == 0.0 || lo_ == hi_) return {{lo_, 1.0}};
  if (prob_hi_ == 1.0) return {{hi_, 1.0}};
  return {{lo_, 1.0 - prob_hi_}, {hi_, prob_hi_}};
}

ChannelDraw draw_channel(double p, Index slot, Stream& stream) {
  return {stream.uniform(static_cast<std::uint64_t>(slot)) < p};
}

ErrorQueue step_error(const ErrorQueue& queue, bool u, bool s, double a) {
  ErrorQueue next = queue;
  const bool d = u && s;
  next.q = (d ? 0.0 : queue.q) + a;
  if (d) next.last_delivery_slot = queue.slot;
  next.slot = queue.slot + 1;
  return next;
}

std::pair<double, double> sample_weight_pair(const WeightProcess& process, Index slot, Stream& stream) {
  return {process.at(slot, stream), process.at(slot + 1, stream)};
}

}  // namespace uoi
