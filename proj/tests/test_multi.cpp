#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "uoi/multi_scheduler.hpp"
#include "uoi/schedulers.hpp"
#include "uoi/simulate.hpp"

using namespace uoi;

namespace {

FleetConfig fleet_from_widths(const std::vector<double>& d, int k) {
  FleetConfig f;
  f.k = k;
  for (std::size_t i = 0; i < d.size(); ++i) f.terminals.push_back({static_cast<Index>(i), 1.0, 1.0, d[i] * d[i], 1.0});
  return f;
}

double objective(const std::vector<double>& d, const std::vector<double>& pi) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * d[i] / pi[i];
  return s;
}

std::set<Index> as_set(const std::vector<Index>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("waterfill symmetric split") {
  const auto sp = waterfill(fleet_from_widths({1.0, 1.0}, 1));
  CHECK(sp.pi(0) == doctest::Approx(0.5));
  CHECK(sp.pi(1) == doctest::Approx(0.5));
  CHECK(sp.diagnostics.empty());
}

TEST_CASE("waterfill proportional split matches a fine grid search") {
  const std::vector<double> d{3.0, 1.0};
  const auto sp = waterfill(fleet_from_widths(d, 1));
  CHECK(sp.pi(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(sp.pi(1) == doctest::Approx(0.25).epsilon(1e-12));
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int i = 1; i < 10000; ++i) {
    const double x = i * 1e-4;
    const double f = objective(d, {x, 1.0 - x});
    if (f < best) {
      best = f;
      arg = x;
    }
  }
  CHECK(arg == doctest::Approx(0.75).epsilon(1e-4));
  CHECK(sp.objective <= best + 1e-6);
}

TEST_CASE("waterfill saturates the widest bar then splits the rest") {
  const std::vector<double> d{10.0, 1.0, 1.0};
  const auto sp = waterfill(fleet_from_widths(d, 2));
  CHECK(sp.pi(0) == doctest::Approx(1.0));
  CHECK(sp.pi(1) == doctest::Approx(0.5));
  CHECK(sp.pi(2) == doctest::Approx(0.5));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> arg;
  for (int i = 1; i <= 1000; ++i) {
    for (int j = 1; j <= 1000; ++j) {
      const int kth = 2000 - i - j;
      if (kth < 1 || kth > 1000) continue;
      const std::vector<double> pi{i * 1e-3, j * 1e-3, kth * 1e-3};
      const double f = objective(d, pi);
      if (f < best) {
        best = f;
        arg = pi;
      }
    }
  }
  CHECK(arg[0] == doctest::Approx(1.0));
  CHECK(arg[1] == doctest::Approx(0.5));
  CHECK(sp.objective <= best + 1e-6);
}

TEST_CASE("waterfill KKT certificate and proportional form on random fleets") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> width(0.05, 5.0);
  for (int inst = 0; inst < 500; ++inst) {
    const int n = 1 + static_cast<int>(gen() % 8);
    const int k = 1 + static_cast<int>(gen() % static_cast<unsigned>(n));
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = width(gen);
    const auto sp = waterfill(fleet_from_widths(d, k));
    double sum = 0.0, total = 0.0, dmax = 0.0;
    for (int i = 0; i < n; ++i) {
      REQUIRE(sp.pi(i) > 0.0);
      REQUIRE(sp.pi(i) <= 1.0);
      sum += sp.pi(i);
      total += d[static_cast<std::size_t>(i)];
      dmax = std::max(dmax, d[static_cast<std::size_t>(i)]);
    }
    CHECK(sum == doctest::Approx(std::min(k, n)).epsilon(1e-12));
    // Unsaturated bars share one level; saturated bars are at least that wide.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n; ++i) {
      if (sp.pi(i) < 1.0) {
        lo = std::min(lo, d[static_cast<std::size_t>(i)] / sp.pi(i));
        hi = std::max(hi, d[static_cast<std::size_t>(i)] / sp.pi(i));
      }
    }
    if (hi > 0.0) {
      CHECK(hi - lo < 1e-6);
      for (int i = 0; i < n; ++i)
        if (sp.pi(i) == 1.0) CHECK(d[static_cast<std::size_t>(i)] >= lo - 1e-6);
    }
    if (n > k && dmax / total <= 1.0 / k)
      for (int i = 0; i < n; ++i) CHECK(std::abs(sp.pi(i) - k * d[static_cast<std::size_t>(i)] / total) < 1e-9);
  }
}

TEST_CASE("waterfill gives zero probability to a silent terminal") {
  FleetConfig f = fleet_from_widths({1.0, 2.0, 1.0}, 1);
  f.terminals[1].sigma2 = 0.0;
  const auto sp = waterfill(f);
  CHECK(sp.pi(1) == 0.0);
  CHECK(sp.pi(0) == doctest::Approx(0.5));
  CHECK(sp.diagnostics.size() == 1);
  CHECK(std::isfinite(theorem2_bound(f, sp)));
}

TEST_CASE("multi-terminal index values") {
  CHECK(multi_update_index(TerminalParams{0, 1.0, 1.0, 1.0, 1.0}, 1.0, 2.0) == doctest::Approx(4.0));
  CHECK(multi_update_index(TerminalParams{0, 0.7, 1.0, 5.95, 0.2}, 100.0, 0.0) == 0.0);
  // Independent evaluation through theta = wbar (1 - p pi)/(p pi).
  const double theta = 5.95 * (1.0 - 0.14) / 0.14;
  const double expect = (theta + 100.0) * 0.7 * 1.0;
  CHECK(expect == doctest::Approx(95.585));
  CHECK(multi_update_index(TerminalParams{0, 0.7, 1.0, 5.95, 0.2}, 100.0, 1.0) == doctest::Approx(95.585));
  CHECK_THROWS_AS(multi_update_index(TerminalParams{0, 0.7, 1.0, 5.95, 0.0}, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("top-K selection") {
  CHECK(schedule_topk(Eigen::Vector3d(5, 1, 9), 2) == std::vector<Index>{2, 0});
  CHECK(schedule_topk(Eigen::Vector3d(5, 5, 1), 1) == std::vector<Index>{0});
  CHECK(schedule_topk(Eigen::VectorXd::Constant(1, 3.0), 2) == std::vector<Index>{0});
}

TEST_CASE("top-K is invariant to positive scaling") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index n = 1 + static_cast<Index>(gen() % 12);
    Eigen::VectorXd j(n);
    for (Index i = 0; i < n; ++i) j(i) = std::floor(u(gen));  // integer values create ties
    const int k = 1 + static_cast<int>(gen() % 4);
    const double c = std::pow(2.0, static_cast<double>(gen() % 20) - 10.0);
    CHECK(schedule_topk(j, k) == schedule_topk(c * j, k));
  }
}

TEST_CASE("top-K over indices maximizes the drift scheme objective") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 6);
    const int k = 1 + static_cast<int>(gen() % static_cast<unsigned>(n));
    std::vector<TerminalParams> ts;
    std::vector<double> q(static_cast<std::size_t>(n)), wn(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      ts.push_back({i, 0.2 + 0.8 * u01(gen), 1.0, 1.0 + 10.0 * u01(gen), 0.05 + 0.95 * u01(gen)});
      q[static_cast<std::size_t>(i)] = 6.0 * (u01(gen) - 0.5);
      wn[static_cast<std::size_t>(i)] = u01(gen) < 0.2 ? 100.0 : 1.0;
    }
    Eigen::VectorXd idx(n), gain(n);
    for (int i = 0; i < n; ++i) {
      const auto& t = ts[static_cast<std::size_t>(i)];
      const double theta = t.omega_bar * (1.0 - t.p * t.pi) / (t.p * t.pi);
      const double qi = q[static_cast<std::size_t>(i)];
      gain(i) = (theta + wn[static_cast<std::size_t>(i)]) * t.p * qi * qi;
      idx(i) = multi_update_index(t, wn[static_cast<std::size_t>(i)], qi);
    }
    double best = -1.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) > k) continue;
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) s += gain(i);
      best = std::max(best, s);
    }
    double chosen = 0.0;
    const auto pick = schedule_topk(idx, k);
    CHECK(static_cast<int>(pick.size()) <= k);
    for (Index i : pick) chosen += gain(i);
    CHECK(chosen == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("stationary bound values") {
  {
    const auto f = fleet_from_widths({1.0, 1.0}, 1);
    StationaryPolicy sp;
    sp.pi = Eigen::Vector2d(0.5, 0.5);
    CHECK(theorem2_bound(f, sp) == doctest::Approx(2.0));
  }
  {
    const auto f = fleet_from_widths({1.0}, 1);
    StationaryPolicy sp;
    sp.pi = Eigen::VectorXd::Ones(1);
    CHECK(theorem2_bound(f, sp) == doctest::Approx(1.0));
  }
  {
    const auto f = fleet_from_widths({1.0, 2.0}, 1);
    const auto sp = waterfill(f);
    CHECK(sp.pi(0) == doctest::Approx(1.0 / 3.0));
    CHECK(sp.pi(1) == doctest::Approx(2.0 / 3.0));
    CHECK(theorem2_bound(f, sp) == doctest::Approx(4.5));
  }
}

TEST_CASE("round robin rotation") {
  CHECK(schedule_round_robin(0, 4, 2) == std::vector<Index>{0, 1});
  CHECK(schedule_round_robin(1, 4, 2) == std::vector<Index>{2, 3});
  CHECK(schedule_round_robin(1, 3, 2) == std::vector<Index>{2, 0});
  auto all = schedule_round_robin(5, 2, 3);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<Index>{0, 1});
  // Every terminal is served equally often over a full cycle.
  std::vector<int> hits(7, 0);
  for (Index t = 0; t < 7 * 3; ++t)
    for (Index i : schedule_round_robin(t, 7, 3)) ++hits[static_cast<std::size_t>(i)];
  for (int h : hits) CHECK(h == 9);
}

TEST_CASE("age-based selection") {
  FleetConfig f = fleet_from_widths({1.0, 1.0}, 1);
  f.terminals[0].p = 0.5;
  AoIState a(2);
  a.delta = {3, 2};
  CHECK(schedule_aoi(a, f) == std::vector<Index>{0});
  f.terminals[0].p = 1.0;
  a.delta = {1, 5};
  CHECK(schedule_aoi(a, f) == std::vector<Index>{1});
  f.k = 2;
  CHECK(as_set(schedule_aoi(a, f)) == std::set<Index>{0, 1});
}

TEST_CASE("age resets to one exactly on delivery") {
  AoIState a(3);
  std::mt19937_64 gen(12);
  std::vector<Index> shadow{1, 1, 1};
  for (int t = 0; t < 10000; ++t) {
    std::vector<std::uint8_t> d(3);
    for (int i = 0; i < 3; ++i) d[static_cast<std::size_t>(i)] = gen() % 4 == 0;
    a.step(d);
    for (std::size_t i = 0; i < 3; ++i) shadow[i] = d[i] ? 1 : shadow[i] + 1;
    REQUIRE(a.delta == shadow);
  }
}

TEST_CASE("systematic sampling has the requested marginals") {
  const Eigen::Vector4d pi(0.9, 0.5, 0.35, 0.25);
  Eigen::Vector4d hits = Eigen::Vector4d::Zero();
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const auto ids = sample_stationary(pi, (i + 0.5) / m);
    CHECK(ids.size() == 2);
    for (Index id : ids) hits(id) += 1.0;
  }
  for (int i = 0; i < 4; ++i) CHECK(hits(i) / m == doctest::Approx(pi(i)).epsilon(1e-4));
}

TEST_CASE("every fleet scheduler respects the channel count") {
  FleetConfig f = make_linear_fleet(9, 3, 1.0, 5.95);
  f = f.with_pi(waterfill(f).pi);
  std::mt19937_64 gen(77);
  std::normal_distribution<double> z(0.0, 3.0);
  for (auto pol : {SchedulerPolicy::adaptive_centralized, SchedulerPolicy::csma_distributed, SchedulerPolicy::round_robin,
                   SchedulerPolicy::aoi_index, SchedulerPolicy::stationary_randomized}) {
    auto s = make_fleet_scheduler(pol, f, ContentionConfig{16, 3, 10.0}, 1, 0);
    CHECK(s->policy() == pol);
    std::vector<double> q(9), wn(9);
    for (Index t = 0; t < 5000; ++t) {
      for (std::size_t i = 0; i < 9; ++i) {
        q[i] = z(gen);
        wn[i] = gen() % 20 == 0 ? 100.0 : 1.0;
      }
      const Decision d = s->decide({t, q, wn});
      const auto delivered_count = d.transmit.size() - d.collided.size();
      REQUIRE(delivered_count <= 3);
      REQUIRE(as_set(d.transmit).size() == d.transmit.size());
      s->feedback(std::vector<std::uint8_t>(9, 0));
    }
  }
  CHECK_THROWS_AS(make_fleet_scheduler(SchedulerPolicy::rvi_optimal, f, {}, 1, 0), InvalidParameter);
}

TEST_CASE("linear fleet success probabilities") {
  const auto f = make_linear_fleet(4, 2, 1.0, 5.95);
  CHECK(f.terminals[0].p == doctest::Approx(0.7));
  CHECK(f.terminals[1].p == doctest::Approx(0.8));
  CHECK(f.terminals[3].p == doctest::Approx(1.0));
  CHECK(make_linear_fleet(1, 1, 1.0, 1.0).terminals[0].p == doctest::Approx(0.85));
}

TEST_CASE("centralized scheduler stays below its stationary bound") {
  FleetConfig f = make_linear_fleet(10, 2, 1.0, 5.95);
  const auto sp = waterfill(f);
  FleetSetup setup{f.with_pi(sp.pi), std::vector<WeightProcess>(10, WeightProcess::two_point(1.0, 100.0, 0.05)), {}, 0};
  auto s = make_fleet_scheduler(SchedulerPolicy::adaptive_centralized, setup.fleet, {}, 6, 0);
  const auto r = simulate_fleet(setup, *s, 1'000'000, 6, 0);
  CHECK(r.uoi_sum / 1e6 <= theorem2_bound(f, sp));
}

TEST_CASE("policies compared in one run consume identical shared streams") {
  FleetConfig f = make_linear_fleet(6, 2, 1.0, 5.95);
  f = f.with_pi(waterfill(f).pi);
  FleetSetup setup{f, std::vector<WeightProcess>(6, WeightProcess::two_point(1.0, 100.0, 0.05)), {}, 0};
  std::vector<std::vector<std::uint64_t>> draws;
  for (auto pol : {SchedulerPolicy::adaptive_centralized, SchedulerPolicy::csma_distributed, SchedulerPolicy::round_robin,
                   SchedulerPolicy::aoi_index, SchedulerPolicy::stationary_randomized}) {
    auto s = make_fleet_scheduler(pol, f, {}, 2, 0);
    draws.push_back(simulate_fleet(setup, *s, 20000, 2, 0).common_draws);
  }
  for (const auto& d : draws) CHECK(d == draws.front());
  CHECK(draws.front().size() == 18);
  for (auto c : draws.front()) CHECK(c == 20000);
}
