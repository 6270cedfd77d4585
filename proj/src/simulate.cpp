#include "uoi/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "uoi/single_updater.hpp"

namespace uoi {

double ViolationThresholds::bound_for(double weight) const {
  if (by_weight.empty()) return std::numeric_limits<double>::infinity();
  double bound = by_weight.front().second;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [w, b] : by_weight) {
    if (w <= weight && w > best) {
      best = w;
      bound = b;
    }
  }
  return bound;
}

bool ViolationThresholds::violated(double weight, double error) const { return std::abs(error) > bound_for(weight); }

void ReplicationStats::add_slot(Index t, Index horizon, double uoi) {
  const auto b = static_cast<std::size_t>(t * kBatches / horizon);
  uoi_sum += uoi;
  batch_sum[b] += uoi;
  batch_slots[b] += 1;
  slots += 1;
}

std::string_view single_policy_name(SinglePolicy policy) {
  switch (policy) {
    case SinglePolicy::adaptive: return "adaptive";
    case SinglePolicy::stationary: return "stationary";
    case SinglePolicy::rvi_uoi: return "rvi-uoi";
    case SinglePolicy::rvi_aoi: return "rvi-aoi";
    case SinglePolicy::always: return "always";
  }
  return "unknown";
}

SinglePolicy parse_single_policy(std::string_view name) {
  if (name == "adaptive") return SinglePolicy::adaptive;
  if (name == "stationary" || name == "stationary-randomized") return SinglePolicy::stationary;
  if (name == "rvi-uoi" || name == "rvi-optimal" || name == "rvi") return SinglePolicy::rvi_uoi;
  if (name == "rvi-aoi" || name == "aoi-optimal") return SinglePolicy::rvi_aoi;
  if (name == "always") return SinglePolicy::always;
  throw InvalidParameter("unknown single-terminal policy '" + std::string(name) + "'");
}

ReplicationStats simulate_single(const SingleSetup& setup, Index horizon, std::uint64_t seed,
                                 std::uint64_t replication) {
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  if ((setup.policy == SinglePolicy::rvi_uoi || setup.policy == SinglePolicy::rvi_aoi) && !setup.table)
    throw InvalidParameter("rvi policies need a policy table");
  Stream ws(seed, replication, 0, StreamKind::weight);
  Stream as(seed, replication, 0, StreamKind::increment);
  Stream cs(seed, replication, 0, StreamKind::channel);
  Stream ps(seed, replication, 0, StreamKind::policy);
  const IncrementProcess inc{setup.params.sigma2};

  SingleUpdaterState st = make_single_updater(setup.params, setup.rho, setup.v);
  ReplicationStats out;
  out.attempts = Eigen::VectorXd::Zero(1);
  Index age = 1;

  for (Index t = 0; t < horizon; ++t) {
    const double wn = setup.weight.at(t + 1, ws);
    bool u = false;
    const auto ut = static_cast<std::uint64_t>(t);
    switch (setup.policy) {
      case SinglePolicy::adaptive: u = decide_update(st, wn); break;
      case SinglePolicy::stationary: u = ps.uniform(ut) < setup.rho; break;
      case SinglePolicy::rvi_uoi: u = ps.uniform(ut) < setup.table->update_probability(st.eq.q, wn); break;
      case SinglePolicy::rvi_aoi: u = ps.uniform(ut) < setup.table->update_probability_age(age); break;
      case SinglePolicy::always: u = true; break;
    }
    const ChannelDraw ch = draw_channel(setup.params.p, t, cs);
    const double a = inc.at(t, as);
    st.eq = step_error(st.eq, u, ch.s, a);
    st.vq = step_virtual_queue(st.vq, u);
    age = delivered(u, ch) ? 1 : age + 1;

    const double f = uoi(wn, st.eq.q);
    out.add_slot(t, horizon, f);
    out.attempts(0) += u ? 1.0 : 0.0;
    out.violations += setup.thresholds.violated(wn, st.eq.q) ? 1 : 0;
    out.terminal_slots += 1;
    if (t < setup.trace_slots) out.trace.push_back({t + 1, st.vq.h, {st.eq.q}, f});
  }
  out.final_h = st.vq.h;
  out.common_draws = {ws.draws(), as.draws(), cs.draws()};
  return out;
}

namespace {

struct TerminalStreams {
  Stream weight, increment, channel;
};

std::vector<TerminalStreams> make_streams(Index n, std::uint64_t seed, std::uint64_t rep) {
  std::vector<TerminalStreams> s;
  s.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint64_t>(i);
    s.push_back({Stream(seed, rep, id, StreamKind::weight), Stream(seed, rep, id, StreamKind::increment),
                 Stream(seed, rep, id, StreamKind::channel)});
  }
  return s;
}

std::vector<std::uint64_t> draw_counts(const std::vector<TerminalStreams>& s) {
  std::vector<std::uint64_t> out;
  for (const auto& t : s) out.insert(out.end(), {t.weight.draws(), t.increment.draws(), t.channel.draws()});
  return out;
}

void check_fleet_setup(const FleetSetup& setup, Index horizon) {
  setup.fleet.validate();
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  if (static_cast<Index>(setup.weights.size()) != setup.fleet.size())
    throw InvalidParameter("one weight process per terminal is required");
}

}  // namespace

ReplicationStats simulate_fleet(const FleetSetup& setup, Scheduler& scheduler, Index horizon, std::uint64_t seed,
                                std::uint64_t replication) {
  check_fleet_setup(setup, horizon);
  const Index n = setup.fleet.size();
  const auto nn = static_cast<std::size_t>(n);
  auto streams = make_streams(n, seed, replication);
  std::vector<double> q(nn, 0.0), wn(nn), sd(nn);
  for (std::size_t i = 0; i < nn; ++i) sd[i] = std::sqrt(setup.fleet.terminals[i].sigma2);
  std::vector<std::uint8_t> sent(nn), lost(nn), delivered_now(nn);

  ReplicationStats out;
  out.attempts = Eigen::VectorXd::Zero(n);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Index t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < nn; ++i) wn[i] = setup.weights[i].at(t + 1, streams[i].weight);
    const Decision d = scheduler.decide({t, q, wn});
    std::fill(sent.begin(), sent.end(), 0);
    std::fill(lost.begin(), lost.end(), 0);
    for (Index i : d.transmit) sent[static_cast<std::size_t>(i)] = 1;
    for (Index i : d.collided) lost[static_cast<std::size_t>(i)] = 1;

    double slot_uoi = 0.0;
    const auto ut = static_cast<std::uint64_t>(t);
    for (std::size_t i = 0; i < nn; ++i) {
      const bool s = draw_channel(setup.fleet.terminals[i].p, t, streams[i].channel).s;
      const double a = sd[i] * streams[i].increment.normal(ut);
      const bool dlv = sent[i] && s && !lost[i];
      delivered_now[i] = dlv ? 1 : 0;
      q[i] = (dlv ? 0.0 : q[i]) + a;
      slot_uoi += wn[i] * q[i] * q[i];
      out.violations += setup.thresholds.violated(wn[i], q[i]) ? 1 : 0;
      out.attempts(static_cast<Index>(i)) += sent[i];
    }
    out.terminal_slots += n;
    scheduler.feedback(delivered_now);
    out.add_slot(t, horizon, slot_uoi * inv_n);
    if (t < setup.trace_slots) out.trace.push_back({t + 1, scheduler.threshold(), q, slot_uoi * inv_n});
  }
  out.common_draws = draw_counts(streams);
  if (const auto* cs = csma_stats(scheduler)) out.csma = *cs;
  return out;
}

ReplicationStats simulate_control(const ControlSetup& setup, Scheduler& scheduler, Index horizon,
                                  std::uint64_t seed, std::uint64_t replication) {
  check_fleet_setup(setup.fleet, horizon);
  setup.plant.validate();
  const FleetSetup& fs = setup.fleet;
  const Index n = fs.fleet.size();
  const auto nn = static_cast<std::size_t>(n);
  auto streams = make_streams(n, seed, replication);
  std::vector<LinearPlant> plants(nn, setup.plant);
  std::vector<double> q(nn), w(nn), wn(nn);
  std::vector<std::uint8_t> sent(nn), lost(nn), delivered_now(nn);
  const double sd = std::sqrt(setup.plant.noise_var);

  for (std::size_t i = 0; i < nn; ++i) w[i] = fs.weights[i].at(0, streams[i].weight);

  ReplicationStats out;
  out.attempts = Eigen::VectorXd::Zero(n);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Index t = 0; t < horizon; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    double slot_uoi = 0.0, slot_track = 0.0, slot_post = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      LinearPlant& pl = plants[i];
      const double y = pl.y_ref.at(t);
      const double prev_err = pl.posterior_error();
      const double v = optimal_control(pl, y);
      pl = advance_plant(pl, v, sd * streams[i].increment.normal(ut));
      q[i] = pl.prior_error();
      const double track = pl.x - y;
      slot_uoi += uoi(w[i], q[i]);
      slot_track += w[i] * track * track;
      slot_post += w[i] * prev_err * prev_err;
      out.violations += fs.thresholds.violated(w[i], q[i]) ? 1 : 0;
      wn[i] = fs.weights[i].at(t + 1, streams[i].weight);
    }
    const Decision d = scheduler.decide({t, q, wn});
    std::fill(sent.begin(), sent.end(), 0);
    std::fill(lost.begin(), lost.end(), 0);
    for (Index i : d.transmit) sent[static_cast<std::size_t>(i)] = 1;
    for (Index i : d.collided) lost[static_cast<std::size_t>(i)] = 1;
    for (std::size_t i = 0; i < nn; ++i) {
      const bool s = draw_channel(fs.fleet.terminals[i].p, t, streams[i].channel).s;
      const bool dlv = sent[i] && s && !lost[i];
      delivered_now[i] = dlv ? 1 : 0;
      plants[i] = resolve_update(plants[i], dlv);
      out.attempts(static_cast<Index>(i)) += sent[i];
      w[i] = wn[i];
    }
    scheduler.feedback(delivered_now);
    out.terminal_slots += n;
    out.add_slot(t, horizon, slot_uoi * inv_n);
    out.tracking_sum += slot_track * inv_n;
    out.posterior_sum += slot_post * inv_n;
    if (t < fs.trace_slots) out.trace.push_back({t, scheduler.threshold(), q, slot_uoi * inv_n});
  }
  out.common_draws = draw_counts(streams);
  if (const auto* cs = csma_stats(scheduler)) out.csma = *cs;
  return out;
}

}  // namespace uoi
