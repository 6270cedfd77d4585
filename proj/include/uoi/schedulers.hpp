#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uoi/csma.hpp"
#include "uoi/multi_scheduler.hpp"

namespace uoi {

enum class SchedulerPolicy {
  adaptive_centralized,
  csma_distributed,
  round_robin,
  aoi_index,
  stationary_randomized,
  rvi_optimal,
};

std::string_view policy_name(SchedulerPolicy policy);
/// Accepts the canonical names plus the short aliases used on the command line.
SchedulerPolicy parse_policy(std::string_view name);

/// What a fleet scheduler sees at the start of a slot.
struct SlotView {
  Index slot = 0;
  std::span<const double> q;
  std::span<const double> omega_next;
};

struct Decision {
  std::vector<Index> transmit;  // every terminal that sends data
  std::vector<Index> collided;  // subset of transmit whose data is lost
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual Decision decide(const SlotView& view) = 0;
  /// Delivery indicators at the end of the slot.
  virtual void feedback(const std::vector<std::uint8_t>& /*delivered*/) {}
  /// Current activation threshold, if the scheduler has one.
  virtual double threshold() const { return std::numeric_limits<double>::quiet_NaN(); }
  virtual SchedulerPolicy policy() const = 0;
};

/// `fleet` must carry the stationary probabilities pi used by the index
/// policies. Random choices come from policy-private streams.
std::unique_ptr<Scheduler> make_fleet_scheduler(SchedulerPolicy policy, const FleetConfig& fleet,
                                                const ContentionConfig& contention, std::uint64_t seed,
                                                std::uint64_t replication);

/// Scheduler-side statistics of the distributed scheme.
struct CsmaStats {
  std::int64_t slots = 0;
  std::int64_t collisions = 0;
  std::int64_t idle_channels = 0;
  double threshold_sum = 0.0;
  double threshold_max = 0.0;
};

/// Stats of a scheduler built with csma_distributed; null otherwise.
const CsmaStats* csma_stats(const Scheduler& scheduler);

}  // namespace uoi
