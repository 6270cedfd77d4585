#include "uoi/schedulers.hpp"

#include <algorithm>

namespace uoi {

std::string_view policy_name(SchedulerPolicy policy) {
  switch (policy) {
    case SchedulerPolicy::adaptive_centralized: return "adaptive-centralized";
    case SchedulerPolicy::csma_distributed: return "csma-distributed";
    case SchedulerPolicy::round_robin: return "round-robin";
    case SchedulerPolicy::aoi_index: return "aoi-index";
    case SchedulerPolicy::stationary_randomized: return "stationary-randomized";
    case SchedulerPolicy::rvi_optimal: return "rvi-optimal";
  }
  return "unknown";
}

SchedulerPolicy parse_policy(std::string_view name) {
  if (name == "adaptive-centralized" || name == "centralized" || name == "adaptive")
    return SchedulerPolicy::adaptive_centralized;
  if (name == "csma-distributed" || name == "distributed" || name == "csma") return SchedulerPolicy::csma_distributed;
  if (name == "round-robin" || name == "rr") return SchedulerPolicy::round_robin;
  if (name == "aoi-index" || name == "aoi") return SchedulerPolicy::aoi_index;
  if (name == "stationary-randomized" || name == "stationary") return SchedulerPolicy::stationary_randomized;
  if (name == "rvi-optimal" || name == "rvi") return SchedulerPolicy::rvi_optimal;
  throw InvalidParameter("unknown policy '" + std::string(name) + "'");
}

namespace {

constexpr std::uint64_t kFleetStream = 1u << 20;

// Fleet indices; terminals with pi = 0 are never eligible.
void fill_indices(const FleetConfig& fleet, const SlotView& view, Eigen::VectorXd& out) {
  out.resize(fleet.size());
  for (Index i = 0; i < fleet.size(); ++i) {
    const auto& t = fleet.terminals[static_cast<std::size_t>(i)];
    const auto ii = static_cast<std::size_t>(i);
    out(i) = t.pi > 0.0 ? multi_update_index(t, view.omega_next[ii], view.q[ii]) : -1.0;
  }
}

class Centralized final : public Scheduler {
 public:
  explicit Centralized(FleetConfig fleet) : fleet_(std::move(fleet)) {}
  Decision decide(const SlotView& view) override {
    fill_indices(fleet_, view, idx_);
    Decision d;
    for (Index i : schedule_topk(idx_, fleet_.k))
      if (idx_(i) >= 0.0) d.transmit.push_back(i);
    return d;
  }
  SchedulerPolicy policy() const override { return SchedulerPolicy::adaptive_centralized; }

 private:
  FleetConfig fleet_;
  Eigen::VectorXd idx_;
};

class RoundRobin final : public Scheduler {
 public:
  explicit RoundRobin(const FleetConfig& fleet) : n_(fleet.size()), k_(fleet.k) {}
  Decision decide(const SlotView& view) override { return {schedule_round_robin(view.slot, n_, k_), {}}; }
  SchedulerPolicy policy() const override { return SchedulerPolicy::round_robin; }

 private:
  Index n_;
  int k_;
};

class AgeBased final : public Scheduler {
 public:
  explicit AgeBased(FleetConfig fleet) : fleet_(std::move(fleet)), aoi_(fleet_.size()) {}
  Decision decide(const SlotView&) override { return {schedule_aoi(aoi_, fleet_), {}}; }
  void feedback(const std::vector<std::uint8_t>& delivered) override { aoi_.step(delivered); }
  SchedulerPolicy policy() const override { return SchedulerPolicy::aoi_index; }

 private:
  FleetConfig fleet_;
  AoIState aoi_;
};

class StationaryRandom final : public Scheduler {
 public:
  StationaryRandom(const FleetConfig& fleet, std::uint64_t seed, std::uint64_t rep)
      : pi_(fleet.pi()), stream_(seed, rep, kFleetStream, StreamKind::policy) {}
  Decision decide(const SlotView& view) override {
    return {sample_stationary(pi_, stream_.uniform(static_cast<std::uint64_t>(view.slot))), {}};
  }
  SchedulerPolicy policy() const override { return SchedulerPolicy::stationary_randomized; }

 private:
  Eigen::VectorXd pi_;
  Stream stream_;
};

class Distributed final : public Scheduler {
 public:
  Distributed(FleetConfig fleet, ContentionConfig cfg, std::uint64_t seed, std::uint64_t rep)
      : fleet_(std::move(fleet)), cfg_(cfg) {
    cfg_.validate();
    for (Index i = 0; i < fleet_.size(); ++i) streams_.emplace_back(seed, rep, static_cast<std::uint64_t>(i), StreamKind::backoff);
    double growth = 0.0;
    for (const auto& t : fleet_.terminals) growth += t.omega_bar * t.sigma2;
    state_.delta_j = growth / static_cast<double>(fleet_.size());
  }
  Decision decide(const SlotView& view) override {
    fill_indices(fleet_, view, idx_);
    const auto active = activate(std::span<const double>(idx_.data(), static_cast<std::size_t>(idx_.size())), state_);
    const auto outcome = contend(active, cfg_, streams_, view.slot);
    Decision d;
    for (const auto& r : outcome.reservations) d.transmit.insert(d.transmit.end(), r.senders.begin(), r.senders.end());
    d.collided = outcome.collided();
    stats_.slots += 1;
    stats_.collisions += static_cast<std::int64_t>(std::count_if(
        outcome.reservations.begin(), outcome.reservations.end(), [](const ChannelClaim& c) { return c.collided(); }));
    stats_.idle_channels += outcome.idle_channels;
    state_ = adapt_threshold(state_, outcome, cfg_);
    stats_.threshold_sum += state_.j_th;
    stats_.threshold_max = std::max(stats_.threshold_max, state_.j_th);
    return d;
  }
  double threshold() const override { return state_.j_th; }
  SchedulerPolicy policy() const override { return SchedulerPolicy::csma_distributed; }
  const CsmaStats& stats() const { return stats_; }

 private:
  FleetConfig fleet_;
  ContentionConfig cfg_;
  ThresholdState state_;
  std::vector<Stream> streams_;
  Eigen::VectorXd idx_;
  CsmaStats stats_;
};

}  // namespace

std::unique_ptr<Scheduler> make_fleet_scheduler(SchedulerPolicy policy, const FleetConfig& fleet,
                                                const ContentionConfig& contention, std::uint64_t seed,
                                                std::uint64_t replication) {
  fleet.validate();
  switch (policy) {
    case SchedulerPolicy::adaptive_centralized: return std::make_unique<Centralized>(fleet);
    case SchedulerPolicy::csma_distributed: {
      ContentionConfig cfg = contention;
      cfg.k = fleet.k;
      return std::make_unique<Distributed>(fleet, cfg, seed, replication);
    }
    case SchedulerPolicy::round_robin: return std::make_unique<RoundRobin>(fleet);
    case SchedulerPolicy::aoi_index: return std::make_unique<AgeBased>(fleet);
    case SchedulerPolicy::stationary_randomized: return std::make_unique<StationaryRandom>(fleet, seed, replication);
    case SchedulerPolicy::rvi_optimal:
      throw InvalidParameter("rvi-optimal is a single-terminal reference policy");
  }
  throw InvalidParameter("unknown policy");
}

const CsmaStats* csma_stats(const Scheduler& scheduler) {
  if (const auto* d = dynamic_cast<const Distributed*>(&scheduler)) return &d->stats();
  return nullptr;
}

}  // namespace uoi
