#pragma once

#include <span>
#include <vector>

#include "uoi/core.hpp"

namespace uoi {

/// Contention window setup of the distributed scheduler.
struct ContentionConfig {
  int w = 16;                 // max contention window, mini-slots
  int k = 2;                  // sub-channels
  double mini_slot_us = 10.0; // mini-slot duration

  /// Slot length in units of the 1 ms data slot: 1 + W * mini_slot / 1 ms.
  double slot_scale() const { return 1.0 + static_cast<double>(w) * mini_slot_us / 1000.0; }
  void validate() const;
};

/// Dynamic activation threshold.
struct ThresholdState {
  double j_th = 0.0;
  double delta_j = 1.0;
};

/// One sub-channel claimed during the contention window.
struct ChannelClaim {
  int channel = 0;             // 0-based sub-channel
  std::vector<Index> senders;  // more than one sender means a collision
  int mini_slot = 0;           // 1-based mini-slot of the intention message

  bool collided() const { return senders.size() > 1; }
};

struct ContentionOutcome {
  std::vector<ChannelClaim> reservations;
  int window_len = 0;
  int idle_channels = 0;

  /// Terminals holding a collision-free reservation.
  std::vector<Index> winners() const;
  /// Terminals whose data is lost to a collision.
  std::vector<Index> collided() const;
};

/// Ids whose index strictly exceeds the threshold.
std::vector<Index> activate(std::span<const double> indices, const ThresholdState& thresholds);

/// Resolves contention for the given backoffs (each in [0, W-1]).
ContentionOutcome contend_with_backoffs(std::span<const Index> active, std::span<const int> backoffs,
                                        const ContentionConfig& cfg);

/// Draws each active terminal's backoff uniformly from {0..W-1} out of its
/// own stream (streams indexed by terminal id) at position `slot`, then resolves.
ContentionOutcome contend(std::span<const Index> active, const ContentionConfig& cfg,
                          std::span<Stream> backoff_streams, Index slot);

ThresholdState adapt_threshold(const ThresholdState& state, const ContentionOutcome& outcome,
                               const ContentionConfig& cfg);

/// Mean window length with k distinct backoffs in a window of w: k/(k+1)(w+1).
template <typename Scalar = double>
Scalar expected_window(int k, int w) {
  if (k < 1 || w < 1 || k > w) throw InvalidParameter("expected_window: need 1 <= k <= w");
  return static_cast<Scalar>(k) / static_cast<Scalar>(k + 1) * static_cast<Scalar>(w + 1);
}

}  // namespace uoi
