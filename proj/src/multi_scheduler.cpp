#include "uoi/multi_scheduler.hpp"

#include <numeric>

namespace uoi {

void FleetConfig::validate() const {
  if (terminals.empty()) throw InvalidParameter("fleet must contain at least one terminal");
  if (k < 1) throw InvalidParameter("fleet k must be at least 1");
  for (const auto& t : terminals) t.validate();
}

namespace {
template <typename F>
Eigen::VectorXd gather(const std::vector<TerminalParams>& ts, F field) {
  Eigen::VectorXd v(static_cast<Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) v(static_cast<Index>(i)) = field(ts[i]);
  return v;
}
}  // namespace

Eigen::VectorXd FleetConfig::p() const { return gather(terminals, [](const auto& t) { return t.p; }); }
Eigen::VectorXd FleetConfig::sigma2() const { return gather(terminals, [](const auto& t) { return t.sigma2; }); }
Eigen::VectorXd FleetConfig::omega_bar() const { return gather(terminals, [](const auto& t) { return t.omega_bar; }); }
Eigen::VectorXd FleetConfig::pi() const { return gather(terminals, [](const auto& t) { return t.pi; }); }

Eigen::VectorXd FleetConfig::widths() const {
  return (omega_bar().cwiseProduct(sigma2()).cwiseQuotient(p())).cwiseSqrt();
}

FleetConfig FleetConfig::with_pi(const Eigen::VectorXd& pi) const {
  FleetConfig out = *this;
  for (std::size_t i = 0; i < out.terminals.size(); ++i) out.terminals[i].pi = pi(static_cast<Index>(i));
  return out;
}

FleetConfig make_linear_fleet(Index n, int k, double sigma2, double omega_bar, double p_min, double p_max) {
  if (n < 1) throw InvalidParameter("fleet size must be at least 1");
  FleetConfig f;
  f.k = k;
  for (Index i = 0; i < n; ++i) {
    TerminalParams t;
    t.id = i;
    t.p = n == 1 ? 0.5 * (p_min + p_max) : p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    t.sigma2 = sigma2;
    t.omega_bar = omega_bar;
    f.terminals.push_back(t);
  }
  f.validate();
  return f;
}

double stationary_objective(const FleetConfig& fleet, const Eigen::VectorXd& pi) {
  double obj = 0.0;
  for (Index i = 0; i < fleet.size(); ++i) {
    const auto& t = fleet.terminals[static_cast<std::size_t>(i)];
    if (t.sigma2 <= 0.0) continue;
    obj += t.omega_bar * t.sigma2 / (t.p * pi(i));
  }
  return obj;
}

StationaryPolicy waterfill(const FleetConfig& fleet) {
  fleet.validate();
  StationaryPolicy out;
  const Eigen::VectorXd d = fleet.widths();
  for (Index i = 0; i < d.size(); ++i)
    if (!(d(i) > 0.0))
      out.diagnostics.push_back("terminal " + std::to_string(fleet.terminals[static_cast<std::size_t>(i)].id) +
                                " has zero increment variance; pi set to 0");
  out.pi = waterfill_levels(d, fleet.k);
  out.objective = stationary_objective(fleet, out.pi);
  return out;
}

std::vector<Index> schedule_topk(const Eigen::Ref<const Eigen::VectorXd>& indices, int k) {
  const Index n = indices.size();
  const Index m = std::min<Index>(std::max(k, 0), n);
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::partial_sort(ids.begin(), ids.begin() + m, ids.end(), [&](Index a, Index b) {
    return indices(a) > indices(b) || (indices(a) == indices(b) && a < b);
  });
  ids.resize(static_cast<std::size_t>(m));
  return ids;
}

double theorem2_bound(const FleetConfig& fleet, const StationaryPolicy& policy) {
  for (Index i = 0; i < fleet.size(); ++i)
    if (fleet.terminals[static_cast<std::size_t>(i)].sigma2 > 0.0 && !(policy.pi(i) > 0.0))
      throw InvalidParameter("theorem2_bound: pi must be positive wherever sigma^2 > 0");
  return stationary_objective(fleet, policy.pi) / static_cast<double>(fleet.size());
}

std::vector<Index> schedule_round_robin(Index slot, Index n, int k) {
  const Index m = std::min<Index>(k, n);
  std::vector<Index> ids;
  ids.reserve(static_cast<std::size_t>(m));
  const Index start = (slot % n) * (k % n) % n;
  for (Index j = 0; j < m; ++j) ids.push_back((start + j) % n);
  return ids;
}

void AoIState::step(const std::vector<std::uint8_t>& delivered) {
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = delivered[i] ? 1 : delta[i] + 1;
}

std::vector<Index> schedule_aoi(const AoIState& aoi, const FleetConfig& fleet) {
  Eigen::VectorXd idx(fleet.size());
  for (Index i = 0; i < fleet.size(); ++i) {
    const double age = static_cast<double>(aoi.delta[static_cast<std::size_t>(i)]);
    idx(i) = fleet.terminals[static_cast<std::size_t>(i)].p * age * (age + 1.0);
  }
  return schedule_topk(idx, fleet.k);
}

std::vector<Index> sample_stationary(const Eigen::Ref<const Eigen::VectorXd>& pi, double u) {
  std::vector<Index> ids;
  double cum = 0.0;
  double next = u;
  for (Index i = 0; i < pi.size(); ++i) {
    const double upper = cum + pi(i);
    if (next < upper) {
      ids.push_back(i);
      next += 1.0;
    }
    cum = upper;
  }
  return ids;
}

}  // namespace uoi
