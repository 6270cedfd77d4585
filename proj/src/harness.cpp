#include "uoi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "uoi/multi_scheduler.hpp"
#include "uoi/single_updater.hpp"

namespace uoi {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::single: return "single";
    case Scenario::multi: return "multi";
    case Scenario::csma: return "csma";
    case Scenario::mdp: return "mdp";
    case Scenario::control: return "control";
    case Scenario::waterfill: return "waterfill";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::single, Scenario::multi, Scenario::csma, Scenario::mdp, Scenario::control,
                     Scenario::waterfill})
    if (scenario_name(s) == name) return s;
  return std::nullopt;
}

double RunMetrics::extra(const std::string& key) const {
  for (const auto& [k, v] : extras)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
  if (replications < 1) throw ConfigError("replications", "must be at least 1");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p", "must be in (0,1]");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2", "must be positive");
  for (double r : rho)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rho", "every value must be in (0,1]");
  for (double x : v)
    if (!(x > 0.0)) throw ConfigError("V", "every value must be positive");
  for (Index x : n)
    if (x < 1) throw ConfigError("n", "every fleet size must be at least 1");
  if (k < 1) throw ConfigError("k", "must be at least 1");
  if (!(p_min > 0.0 && p_min <= 1.0 && p_max > 0.0 && p_max <= 1.0)) throw ConfigError("p_min", "p_min and p_max must be in (0,1]");
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    try {
      terminals[i].validate();
    } catch (const InvalidParameter& e) {
      throw ConfigError("terminals[" + std::to_string(i) + "]", e.what());
    }
  }
  for (double x : d)
    if (!(x >= 0.0)) throw ConfigError("d", "widths must be nonnegative");
  for (int w : window)
    if (w < k) throw ConfigError("window", "must be at least k");
  if (!(mini_slot_us > 0.0)) throw ConfigError("mini_slot_us", "must be positive");
  if (q_max && !(*q_max > 0.0)) throw ConfigError("q_max", "must be positive");
  if (q_step && !(*q_step > 0.0)) throw ConfigError("q_step", "must be positive");
  if (age_max < 2) throw ConfigError("age_max", "must be at least 2");
  if (b == 0.0) throw ConfigError("b", "must be nonzero");
  if (!(noise_var > 0.0)) throw ConfigError("noise_var", "must be positive");
  for (const auto& [w, bound] : thresholds.by_weight)
    if (!(w > 0.0) || !(bound > 0.0)) throw ConfigError("thresholds", "weights and bounds must be positive");
  if (trace_slots < 0) throw ConfigError("trace_slots", "must be nonnegative");
  for (const auto& name : policies) {
    try {
      if (scenario == Scenario::single) parse_single_policy(name);
      else parse_policy(name);
    } catch (const InvalidParameter& e) {
      throw ConfigError("policies", e.what());
    }
  }
}

WeightProcess ExperimentConfig::effective_weight() const {
  if (weight) return *weight;
  const bool single_terminal = scenario == Scenario::single || scenario == Scenario::mdp;
  return WeightProcess::two_point(1.0, 100.0, single_terminal ? 0.01 : 0.05);
}

FleetConfig build_fleet(const ExperimentConfig& config, Index n) {
  FleetConfig fleet;
  fleet.k = config.k;
  if (!config.d.empty()) {
    for (std::size_t i = 0; i < config.d.size(); ++i) {
      TerminalParams t;
      t.id = static_cast<Index>(i);
      t.p = 1.0;
      t.sigma2 = 1.0;
      t.omega_bar = config.d[i] * config.d[i];
      if (t.omega_bar == 0.0) {
        t.omega_bar = 1.0;
        t.sigma2 = 0.0;
      }
      fleet.terminals.push_back(t);
    }
  } else if (!config.terminals.empty()) {
    fleet.terminals = config.terminals;
  } else {
    fleet = make_linear_fleet(n, config.k, config.sigma2, config.effective_weight().mean(), config.p_min, config.p_max);
  }
  fleet.validate();
  return fleet;
}

void aggregate(const std::vector<ReplicationStats>& reps, Index horizon, RunMetrics& out) {
  if (reps.empty()) throw InvalidParameter("aggregate: empty replication set");
  double total = 0.0;
  Index slots = 0, viol = 0, tslots = 0;
  Eigen::VectorXd attempts = Eigen::VectorXd::Zero(reps.front().attempts.size());
  for (const auto& r : reps) {
    total += r.uoi_sum;
    slots += r.slots;
    viol += r.violations;
    tslots += r.terminal_slots;
    attempts += r.attempts;
  }
  out.avg_uoi = total / static_cast<double>(slots);
  out.avg_freq = attempts / static_cast<double>(slots);
  out.violation_prob = tslots ? static_cast<double>(viol) / static_cast<double>(tslots) : 0.0;
  out.samples = slots;

  std::vector<double> means;
  if (reps.size() >= 2) {
    for (const auto& r : reps) means.push_back(r.uoi_sum / static_cast<double>(r.slots));
  } else {
    const auto& r = reps.front();
    for (int b = 0; b < ReplicationStats::kBatches; ++b)
      if (r.batch_slots[static_cast<std::size_t>(b)] > 0)
        means.push_back(r.batch_sum[static_cast<std::size_t>(b)] / static_cast<double>(r.batch_slots[static_cast<std::size_t>(b)]));
  }
  const auto m = static_cast<double>(means.size());
  if (means.size() < 2) {
    out.stderr_uoi = 0.0;
    return;
  }
  double mu = 0.0;
  for (double x : means) mu += x;
  mu /= m;
  double ss = 0.0;
  for (double x : means) ss += (x - mu) * (x - mu);
  out.stderr_uoi = std::sqrt(ss / (m - 1.0) / m);
  (void)horizon;
}

bool bounds_violated(const Report& report) {
  for (const auto& r : report.rows)
    if (r.bound_applies && r.avg_uoi > r.bound + 3.0 * r.stderr_uoi) return true;
  return false;
}

namespace {

template <typename Body>
std::vector<ReplicationStats> run_replications(Index count, Body body) {
  std::vector<ReplicationStats> out(static_cast<std::size_t>(count));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<Index>(count, hw));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = body(static_cast<std::uint64_t>(i));
    return out;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (Index i = next++; i < count; i = next++) {
          try {
            out[static_cast<std::size_t>(i)] = body(static_cast<std::uint64_t>(i));
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

struct Runner {
  const ExperimentConfig& cfg;
  Report report;

  void finish_row(RunMetrics m, std::vector<ReplicationStats>& reps) {
    aggregate(reps, cfg.horizon, m);
    if (report.trace.empty() && !reps.front().trace.empty()) report.trace = std::move(reps.front().trace);
    report.row_draws.push_back(reps.front().common_draws);
    report.rows.push_back(std::move(m));
  }

  RunMetrics base_row(std::string policy, Index n) const {
    RunMetrics m;
    m.scenario = std::string(scenario_name(cfg.scenario));
    m.policy = std::move(policy);
    m.n = n;
    m.k = cfg.k;
    return m;
  }

  MdpGrid grid_for(const TerminalParams& tp, const WeightProcess& weight) const {
    MdpGrid g;
    try {
      g = MdpGrid::defaults(tp, weight);
    } catch (const InvalidParameter& e) {
      throw ConfigError("weight", e.what());
    }
    if (cfg.q_max) g.q_max = *cfg.q_max;
    if (cfg.q_step) g.q_step = *cfg.q_step;
    g.age_max = cfg.age_max;
    g.max_iter = cfg.max_iter;
    try {
      g.validate();
    } catch (const InvalidParameter& e) {
      throw ConfigError("q_max", e.what());
    }
    return g;
  }

  void single() {
    const WeightProcess weight = cfg.effective_weight();
    const TerminalParams tp{0, cfg.p, cfg.sigma2, weight.mean(), 1.0};
    std::vector<SinglePolicy> policies;
    for (const auto& name : cfg.policies) policies.push_back(parse_single_policy(name));
    if (policies.empty()) policies.push_back(SinglePolicy::adaptive);

    for (double rho : cfg.rho) {
      for (SinglePolicy pol : policies) {
        std::optional<CalibratedPolicy> cal;
        if (pol == SinglePolicy::rvi_uoi || pol == SinglePolicy::rvi_aoi)
          cal = calibrate_multiplier(grid_for(tp, weight), tp, rho, pol == SinglePolicy::rvi_uoi ? CostKind::uoi : CostKind::aoi);
        const std::vector<double> vs = pol == SinglePolicy::adaptive ? cfg.v : std::vector<double>{cfg.v.front()};
        for (double v : vs) {
          SingleSetup setup;
          setup.params = tp;
          setup.weight = weight;
          setup.rho = rho;
          setup.v = v;
          setup.policy = pol;
          setup.table = cal ? &cal->table : nullptr;
          setup.thresholds = cfg.thresholds;
          setup.trace_slots = cfg.trace_slots;
          auto reps = run_replications(cfg.replications, [&](std::uint64_t r) {
            return simulate_single(setup, cfg.horizon, cfg.seed, r);
          });
          RunMetrics m = base_row(std::string(single_policy_name(pol)), 1);
          m.k = 1;
          m.rho = rho;
          if (pol == SinglePolicy::adaptive) m.v = v;
          m.bound = theorem1_bound(tp, rho, v);
          m.bound_applies = pol == SinglePolicy::adaptive;
          double h_max = 0.0, freq_max = 0.0, slack_min = std::numeric_limits<double>::infinity();
          for (const auto& r : reps) {
            const double h_t = r.final_h / static_cast<double>(r.slots);
            const double f = r.attempts(0) / static_cast<double>(r.slots);
            h_max = std::max(h_max, h_t);
            freq_max = std::max(freq_max, f);
            slack_min = std::min(slack_min, rho + h_t - f);
          }
          m.extras = {{"h_over_t_max", h_max}, {"freq_max", freq_max}, {"budget_slack_min", slack_min}};
          if (cal) {
            m.extras.emplace_back("lambda", cal->lambda);
            m.extras.emplace_back("model_avg_cost", cal->table.avg_cost);
            m.extras.emplace_back("model_avg_freq", cal->table.avg_freq);
          }
          finish_row(std::move(m), reps);
        }
      }
    }
  }

  std::vector<SchedulerPolicy> fleet_policies(std::vector<SchedulerPolicy> defaults) const {
    if (cfg.policies.empty()) return defaults;
    std::vector<SchedulerPolicy> out;
    for (const auto& name : cfg.policies) out.push_back(parse_policy(name));
    return out;
  }

  std::vector<WeightProcess> weights_for(Index n) const {
    return std::vector<WeightProcess>(static_cast<std::size_t>(n), cfg.effective_weight());
  }

  static FleetConfig scaled(const FleetConfig& fleet, double scale) {
    FleetConfig out = fleet;
    for (auto& t : out.terminals) t.sigma2 *= scale;
    return out;
  }

  void fleet_point(const FleetConfig& base, SchedulerPolicy pol, int window, double* centralized_uoi) {
    const double scale = pol == SchedulerPolicy::csma_distributed
                             ? ContentionConfig{window, base.k, cfg.mini_slot_us}.slot_scale()
                             : 1.0;
    const FleetConfig fleet = scaled(base, scale);
    const StationaryPolicy sp = waterfill(fleet);
    FleetSetup setup{fleet.with_pi(sp.pi), weights_for(fleet.size()), cfg.thresholds, cfg.trace_slots};
    const ContentionConfig cc{window, fleet.k, cfg.mini_slot_us};
    auto reps = run_replications(cfg.replications, [&](std::uint64_t r) {
      auto sched = make_fleet_scheduler(pol, setup.fleet, cc, cfg.seed, r);
      return simulate_fleet(setup, *sched, cfg.horizon, cfg.seed, r);
    });
    RunMetrics m = base_row(std::string(policy_name(pol)), fleet.size());
    m.k = fleet.k;
    m.bound = theorem2_bound(fleet, sp);
    m.bound_applies = pol == SchedulerPolicy::adaptive_centralized;
    if (pol == SchedulerPolicy::csma_distributed) {
      m.w = window;
      double slots = 0.0, coll = 0.0, idle = 0.0, thr = 0.0, thr_max = 0.0;
      for (const auto& r : reps) {
        slots += static_cast<double>(r.csma.slots);
        coll += static_cast<double>(r.csma.collisions);
        idle += static_cast<double>(r.csma.idle_channels);
        thr += r.csma.threshold_sum;
        thr_max = std::max(thr_max, r.csma.threshold_max);
      }
      m.extras = {{"slot_scale", scale},
                  {"collisions_per_slot", coll / slots},
                  {"idle_channels_per_slot", idle / slots},
                  {"mean_threshold", thr / slots},
                  {"max_threshold", thr_max},
                  {"delta_j", fleet.omega_bar().dot(fleet.sigma2()) / static_cast<double>(fleet.size())}};
    }
    finish_row(std::move(m), reps);
    RunMetrics& row = report.rows.back();
    if (pol == SchedulerPolicy::csma_distributed) {
      row.extras.emplace_back("uoi_per_unit_variance", row.avg_uoi / scale);
      if (centralized_uoi) row.extras.emplace_back("ratio_to_centralized", row.avg_uoi / *centralized_uoi);
    }
    if (pol == SchedulerPolicy::adaptive_centralized && centralized_uoi) *centralized_uoi = row.avg_uoi;
  }

  void multi() {
    const auto policies = fleet_policies({SchedulerPolicy::adaptive_centralized, SchedulerPolicy::csma_distributed,
                                          SchedulerPolicy::aoi_index, SchedulerPolicy::round_robin});
    for (Index n : cfg.n) {
      const FleetConfig base = build_fleet(cfg, n);
      for (SchedulerPolicy pol : policies) {
        if (pol == SchedulerPolicy::rvi_optimal) throw ConfigError("policies", "rvi-optimal is single-terminal only");
        if (pol == SchedulerPolicy::csma_distributed) {
          for (int w : cfg.window) fleet_point(base, pol, w, nullptr);
        } else {
          fleet_point(base, pol, 0, nullptr);
        }
      }
    }
  }

  void csma() {
    for (Index n : cfg.n) {
      const FleetConfig base = build_fleet(cfg, n);
      double central = 0.0;
      fleet_point(base, SchedulerPolicy::adaptive_centralized, 0, &central);
      for (int w : cfg.window) fleet_point(base, SchedulerPolicy::csma_distributed, w, &central);
    }
  }

  void mdp() {
    const WeightProcess weight = cfg.effective_weight();
    const TerminalParams tp{0, cfg.p, cfg.sigma2, weight.mean(), 1.0};
    for (double rho : cfg.rho) {
      const MdpGrid grid = grid_for(tp, weight);
      CalibratedPolicy cal = calibrate_multiplier(grid, tp, rho, cfg.cost);
      RunMetrics m = base_row(cfg.cost == CostKind::uoi ? "rvi-uoi" : "rvi-aoi", 1);
      m.k = 1;
      m.rho = rho;
      m.bound = theorem1_bound(tp, rho, cfg.v.front());
      m.avg_freq = Eigen::VectorXd::Constant(1, cal.table.avg_freq);
      m.extras = {{"lambda", cal.lambda},
                  {"gain", cal.table.gain},
                  {"iterations", static_cast<double>(cal.table.iterations)},
                  {"span", cal.table.span},
                  {"converged", cal.table.converged ? 1.0 : 0.0}};
      if (cfg.cost == CostKind::uoi) {
        m.avg_uoi = cal.table.avg_cost;
        m.samples = 0;
        report.rows.push_back(std::move(m));
        report.row_draws.push_back({});
      } else {
        // The age policy's UoI needs the error process, so simulate it.
        SingleSetup setup{tp, weight, rho, cfg.v.front(), SinglePolicy::rvi_aoi, &cal.table, cfg.thresholds, 0};
        auto reps = run_replications(cfg.replications, [&](std::uint64_t r) {
          return simulate_single(setup, cfg.horizon, cfg.seed, r);
        });
        m.extras.emplace_back("avg_age", cal.table.avg_cost);
        const double freq = cal.table.avg_freq;
        finish_row(std::move(m), reps);
        report.rows.back().extras.emplace_back("model_avg_freq", freq);
      }
      report.table = std::move(cal.table);
    }
  }

  void control() {
    const auto policies = fleet_policies({SchedulerPolicy::adaptive_centralized, SchedulerPolicy::csma_distributed,
                                          SchedulerPolicy::aoi_index, SchedulerPolicy::round_robin});
    for (Index n : cfg.n) {
      for (SchedulerPolicy pol : policies) {
        if (pol == SchedulerPolicy::rvi_optimal) throw ConfigError("policies", "rvi-optimal is single-terminal only");
        const int window = cfg.window.front();
        const double scale = pol == SchedulerPolicy::csma_distributed
                                 ? ContentionConfig{window, cfg.k, cfg.mini_slot_us}.slot_scale()
                                 : 1.0;
        ExperimentConfig fc = cfg;
        fc.sigma2 = cfg.noise_var * scale;
        FleetConfig fleet = build_fleet(fc, n);
        for (auto& t : fleet.terminals) t.sigma2 = cfg.noise_var * scale;
        const StationaryPolicy sp = waterfill(fleet);
        ControlSetup setup;
        setup.fleet = {fleet.with_pi(sp.pi), weights_for(n), cfg.thresholds, cfg.trace_slots};
        setup.plant.a = cfg.a;
        setup.plant.b = cfg.b;
        setup.plant.noise_var = cfg.noise_var * scale;
        setup.plant.y_ref = cfg.reference;
        try {
          setup.plant.validate();
        } catch (const InvalidParameter& e) {
          throw ConfigError("reference", e.what());
        }
        const ContentionConfig cc{window, cfg.k, cfg.mini_slot_us};
        auto reps = run_replications(cfg.replications, [&](std::uint64_t r) {
          auto sched = make_fleet_scheduler(pol, setup.fleet.fleet, cc, cfg.seed, r);
          return simulate_control(setup, *sched, cfg.horizon, cfg.seed, r);
        });
        double track = 0.0, post = 0.0, slots = 0.0;
        for (const auto& r : reps) {
          track += r.tracking_sum;
          post += r.posterior_sum;
          slots += static_cast<double>(r.slots);
        }
        track /= slots;
        post /= slots;
        const double rhs = cfg.a * cfg.a * post + fleet.omega_bar().mean() * setup.plant.noise_var;
        RunMetrics m = base_row(std::string(policy_name(pol)), n);
        if (pol == SchedulerPolicy::csma_distributed) m.w = window;
        m.bound = theorem2_bound(fleet, sp);
        m.bound_applies = false;
        m.extras = {{"tracking_cost", track},
                    {"weighted_posterior_error", post},
                    {"decomposition_rhs", rhs},
                    {"decomposition_rel_gap", std::abs(track - rhs) / track},
                    {"noise_var", setup.plant.noise_var}};
        finish_row(std::move(m), reps);
      }
    }
  }

  void waterfill_scenario() {
    const FleetConfig fleet = build_fleet(cfg, cfg.n.front());
    const StationaryPolicy sp = waterfill(fleet);
    const Eigen::VectorXd d = fleet.widths();
    // Common level d_i / pi_i over unsaturated coordinates.
    double level_min = std::numeric_limits<double>::infinity(), level_max = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
      if (sp.pi(i) > 0.0 && sp.pi(i) < 1.0) {
        level_min = std::min(level_min, d(i) / sp.pi(i));
        level_max = std::max(level_max, d(i) / sp.pi(i));
      }
    }
    const double residual = level_max >= level_min ? level_max - level_min : 0.0;
    for (Index i = 0; i < fleet.size(); ++i) {
      RunMetrics m = base_row("terminal-" + std::to_string(i), fleet.size());
      m.k = fleet.k;
      m.avg_freq = Eigen::VectorXd::Constant(1, sp.pi(i));
      m.avg_uoi = d(i) > 0.0 ? d(i) * d(i) / sp.pi(i) : 0.0;
      m.bound = theorem2_bound(fleet, sp);
      m.extras = {{"pi", sp.pi(i)}, {"d", d(i)}, {"objective", sp.objective}, {"kkt_level_spread", residual}};
      report.rows.push_back(std::move(m));
      report.row_draws.push_back({});
    }
  }
};

}  // namespace

Report run(const ExperimentConfig& config) {
  config.validate();
  Runner runner{config, {}};
  runner.report.scenario = config.scenario;
  try {
    switch (config.scenario) {
      case Scenario::single: runner.single(); break;
      case Scenario::multi: runner.multi(); break;
      case Scenario::csma: runner.csma(); break;
      case Scenario::mdp: runner.mdp(); break;
      case Scenario::control: runner.control(); break;
      case Scenario::waterfill: runner.waterfill_scenario(); break;
    }
  } catch (const InvalidParameter& e) {
    throw ConfigError("<config>", e.what());
  }
  return std::move(runner.report);
}

}  // namespace uoi
