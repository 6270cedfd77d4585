#include "uoi/csma.hpp"

#include <algorithm>
#include <numeric>

namespace uoi {

void ContentionConfig::validate() const {
  if (k < 1) throw InvalidParameter("contention: k must be at least 1");
  if (w < k) throw InvalidParameter("contention: window w must be at least k");
  if (!(mini_slot_us > 0.0)) throw InvalidParameter("contention: mini-slot length must be positive");
}

std::vector<Index> ContentionOutcome::winners() const {
  std::vector<Index> out;
  for (const auto& r : reservations)
    if (!r.collided()) out.push_back(r.senders.front());
  return out;
}

std::vector<Index> ContentionOutcome::collided() const {
  std::vector<Index> out;
  for (const auto& r : reservations)
    if (r.collided()) out.insert(out.end(), r.senders.begin(), r.senders.end());
  return out;
}

std::vector<Index> activate(std::span<const double> indices, const ThresholdState& thresholds) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < indices.size(); ++i)
    if (indices[i] > thresholds.j_th) out.push_back(static_cast<Index>(i));
  return out;
}

ContentionOutcome contend_with_backoffs(std::span<const Index> active, std::span<const int> backoffs,
                                        const ContentionConfig& cfg) {
  if (active.size() != backoffs.size()) throw InvalidParameter("contend: one backoff per active terminal");
  for (int l : backoffs)
    if (l < 0 || l >= cfg.w) throw InvalidParameter("contend: backoff outside [0, W-1]");
  ContentionOutcome out;
  std::vector<std::size_t> order(active.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return backoffs[a] < backoffs[b]; });

  // Everyone listening tracks the same lowest unclaimed channel, so each
  // mini-slot claims at most one channel.
  int next_channel = 0;
  out.window_len = cfg.w;
  for (std::size_t pos = 0; pos < order.size() && next_channel < cfg.k;) {
    const int l = backoffs[order[pos]];
    ChannelClaim claim;
    claim.channel = next_channel;
    claim.mini_slot = l + 1;
    while (pos < order.size() && backoffs[order[pos]] == l) claim.senders.push_back(active[order[pos++]]);
    out.reservations.push_back(std::move(claim));
    if (++next_channel == cfg.k) out.window_len = l + 1;
  }
  out.idle_channels = cfg.k - next_channel;
  return out;
}

ContentionOutcome contend(std::span<const Index> active, const ContentionConfig& cfg,
                          std::span<Stream> backoff_streams, Index slot) {
  std::vector<int> backoffs(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto& s = backoff_streams[static_cast<std::size_t>(active[i])];
    backoffs[i] = static_cast<int>(s.below(static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(cfg.w)));
  }
  return contend_with_backoffs(active, backoffs, cfg);
}

ThresholdState adapt_threshold(const ThresholdState& state, const ContentionOutcome& outcome,
                               const ContentionConfig& cfg) {
  ThresholdState next = state;
  if (outcome.idle_channels > 0) {
    next.j_th = std::max(0.0, state.j_th - state.delta_j);
  } else if (static_cast<double>(outcome.window_len) < expected_window(cfg.k, cfg.w)) {
    next.j_th = state.j_th + state.delta_j;
  }
  return next;
}

}  // namespace uoi
