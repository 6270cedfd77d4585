#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "uoi/mdp.hpp"

using namespace uoi;

namespace {

double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// Builds the (bin, next-weight) chain from scratch and evaluates the
// Lagrangian average cost of a deterministic policy by power iteration.
struct TinyChain {
  std::vector<double> centers;
  std::vector<double> w, pw;
  double p, sigma, h, lambda;

  double bin_prob(double from, std::size_t j) const {
    const double lo = j == 0 ? -std::numeric_limits<double>::infinity() : centers[j] - 0.5 * h;
    const double hi = j + 1 == centers.size() ? std::numeric_limits<double>::infinity() : centers[j] + 0.5 * h;
    return phi((hi - from) / sigma) - phi((lo - from) / sigma);
  }

  double lagrangian(unsigned policy) const {
    const std::size_t m = centers.size(), nw = w.size(), ns = m * nw;
    std::vector<std::vector<double>> tr(ns, std::vector<double>(ns, 0.0));
    std::vector<double> cost(ns, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < nw; ++k) {
        const std::size_t s = j * nw + k;
        const bool u = policy & (1u << s);
        const double reset = u ? p : 0.0;
        for (std::size_t j2 = 0; j2 < m; ++j2) {
          const double move = (1.0 - reset) * bin_prob(centers[j], j2) + reset * bin_prob(0.0, j2);
          cost[s] += w[k] * move * centers[j2] * centers[j2];
          for (std::size_t k2 = 0; k2 < nw; ++k2) tr[s][j2 * nw + k2] += move * pw[k2];
        }
        if (u) cost[s] += lambda;
      }
    }
    std::vector<double> dist(ns, 1.0 / static_cast<double>(ns)), next(ns);
    for (int it = 0; it < 20000; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = 0; b < ns; ++b) next[b] += dist[a] * tr[a][b];
      dist.swap(next);
    }
    double g = 0.0;
    for (std::size_t s = 0; s < ns; ++s) g += dist[s] * cost[s];
    return g;
  }
};

TerminalParams terminal(double p, double sigma2) { return {0, p, sigma2, 1.0, 1.0}; }

// Average Lagrangian cost of "update once the age reaches tau", by renewal.
double age_threshold_gain(int tau, double p, double lambda) {
  double cost = 0.0, len = tau - 1 + 1.0 / p;
  for (int a = 1; a < tau; ++a) cost += a + 1;
  double surv = 1.0;
  for (int j = 0; j < 5000; ++j) {
    cost += surv * (p * 1.0 + (1.0 - p) * (tau + j + 1) + lambda);
    surv *= 1.0 - p;
  }
  return cost / len;
}

}  // namespace

TEST_CASE("tiny grid solution matches exhaustive policy enumeration") {
  for (double lambda : {0.0, 0.3, 0.8, 2.5, 10.0}) {
    MdpGrid g;
    g.q_max = 1.0;
    g.q_step = 1.0;
    g.weight_support = {{1.0, 0.7}, {5.0, 0.3}};
    g.lambda = lambda;
    g.tol = 1e-12;
    const TerminalParams tp = terminal(0.7, 0.6);
    const auto table = rvi_solve(g, tp, CostKind::uoi);
    REQUIRE(table.converged);
    REQUIRE(table.decision.rows() == 3);
    REQUIRE(table.decision.cols() == 2);

    const TinyChain oracle{{-1.0, 0.0, 1.0}, {1.0, 5.0}, {0.7, 0.3}, 0.7, std::sqrt(0.6), 1.0, lambda};
    double best = std::numeric_limits<double>::infinity();
    for (unsigned pol = 0; pol < 64; ++pol) best = std::min(best, oracle.lagrangian(pol));
    CHECK(table.gain == doctest::Approx(best).epsilon(1e-8));

    unsigned chosen = 0;
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 2; ++k)
        if (table.decision(j, k) > 0.5) chosen |= 1u << static_cast<unsigned>(j * 2 + k);
    CHECK(oracle.lagrangian(chosen) == doctest::Approx(best).epsilon(1e-8));
    const auto [avg_cost, avg_freq] = evaluate_table(g, tp, CostKind::uoi, table.decision);
    CHECK(avg_cost + lambda * avg_freq == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("free updates on a perfect channel reset every slot") {
  MdpGrid g = MdpGrid::defaults(terminal(1.0, 1.0), WeightProcess::two_point(1.0, 100.0, 0.01));
  const TerminalParams tp{0, 1.0, 1.0, 1.99, 1.0};
  const auto table = rvi_solve(g, tp, CostKind::uoi);
  CHECK(table.converged);
  const Index mid = (table.decision.rows() - 1) / 2;
  for (Index j = 0; j < table.decision.rows(); ++j)
    for (Index k = 0; k < table.decision.cols(); ++k)
      if (j != mid) CHECK(table.decision(j, k) == 1.0);
  // Grid quantization inflates E[A^2] by about h^2/12.
  CHECK(table.avg_cost == doctest::Approx(1.99).epsilon(0.01));
}

TEST_CASE("age chain solution matches the best threshold policy") {
  for (double lambda : {0.5, 3.0, 8.8, 20.0}) {
    MdpGrid g;
    g.lambda = lambda;
    g.age_max = 200;
    g.tol = 1e-10;
    const auto table = rvi_solve(g, terminal(0.8, 1.0), CostKind::aoi);
    REQUIRE(table.converged);
    double best = std::numeric_limits<double>::infinity();
    for (int tau = 1; tau < 100; ++tau) best = std::min(best, age_threshold_gain(tau, 0.8, lambda));
    CHECK(table.gain == doctest::Approx(best).epsilon(1e-7));
    // The optimal decision is a threshold in the age.
    bool seen = false;
    for (Index a = 0; a < table.decision.rows(); ++a) {
      if (table.decision(a, 0) > 0.5) seen = true;
      else CHECK_FALSE(seen);
    }
  }
}

TEST_CASE("calibrated policy meets the update budget") {
  const auto weights = WeightProcess::two_point(1.0, 100.0, 0.01);
  const TerminalParams tp{0, 0.8, 1.0, weights.mean(), 1.0};
  const MdpGrid g = MdpGrid::defaults(tp, weights);
  for (CostKind kind : {CostKind::uoi, CostKind::aoi}) {
    const auto cal = calibrate_multiplier(g, tp, 0.25, kind);
    CHECK(cal.table.avg_freq >= 0.249);
    CHECK(cal.table.avg_freq <= 0.251);
    CHECK(cal.lambda > 0.0);
  }
  const auto slack = calibrate_multiplier(g, tp, 1.0, CostKind::uoi);
  CHECK(slack.lambda == 0.0);
}

TEST_CASE("value iteration policy does not depend on the starting values") {
  const auto weights = WeightProcess::two_point(1.0, 100.0, 0.01);
  const TerminalParams tp{0, 0.8, 1.0, weights.mean(), 1.0};
  MdpGrid g = MdpGrid::defaults(tp, weights);
  g.lambda = 4.0;
  const auto a = rvi_solve(g, tp, CostKind::uoi);
  Eigen::VectorXd init = Eigen::VectorXd::LinSpaced(g.states(CostKind::uoi), -50.0, 300.0);
  const auto b = rvi_solve(g, tp, CostKind::uoi, init);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  const double same = (a.decision.array() == b.decision.array()).cast<double>().mean();
  CHECK(same >= 0.99);
  CHECK(a.gain == doctest::Approx(b.gain).epsilon(1e-6));
}

TEST_CASE("halving the grid step barely moves the optimal cost") {
  const auto weights = WeightProcess::two_point(1.0, 100.0, 0.01);
  const TerminalParams tp{0, 0.8, 1.0, weights.mean(), 1.0};
  MdpGrid coarse = MdpGrid::defaults(tp, weights);
  coarse.lambda = calibrate_multiplier(coarse, tp, 0.25, CostKind::uoi).lambda;
  MdpGrid fine = coarse;
  fine.q_step = coarse.q_step / 2.0;
  const auto a = rvi_solve(coarse, tp, CostKind::uoi);
  const auto b = rvi_solve(fine, tp, CostKind::uoi);
  MESSAGE("coarse gain " << a.gain << ", fine gain " << b.gain);
  CHECK(std::abs(a.gain - b.gain) / b.gain < 0.02);
}

TEST_CASE("increment pmf is normalized and symmetric") {
  const auto pmf = increment_pmf(1.0, 0.25, 33);
  CHECK(pmf.sum() == doctest::Approx(1.0));
  for (Index o = 0; o < pmf.size(); ++o) CHECK(pmf(o) == doctest::Approx(pmf(pmf.size() - 1 - o)).epsilon(1e-12));
  double var = 0.0;
  for (Index o = 0; o < pmf.size(); ++o) var += pmf(o) * std::pow((o - 33) * 0.25, 2);
  CHECK(var == doctest::Approx(1.0 + 0.25 * 0.25 / 12.0).epsilon(1e-3));
  const auto point = increment_pmf(0.0, 0.25, 3);
  CHECK(point(3) == 1.0);
}

TEST_CASE("grid validation") {
  MdpGrid g;
  g.q_max = 1.0;
  g.q_step = 0.3;
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
  g.q_step = 0.25;
  g.weight_support = {{1.0, 0.5}};
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
  CHECK_THROWS_AS(MdpGrid::defaults(terminal(1.0, 1.0), WeightProcess::periodic_burst(1, 100, 10, 2)),
                  InvalidParameter);
  CHECK_THROWS_AS(calibrate_multiplier(MdpGrid{}, terminal(1.0, 1.0), 0.0, CostKind::uoi), InvalidParameter);
}

TEST_CASE("policy lookup picks the nearest bin and weight") {
  MdpGrid g;
  g.q_max = 1.0;
  g.q_step = 0.5;
  g.weight_support = {{1.0, 0.5}, {100.0, 0.5}};
  g.lambda = 1.0;
  const auto t = rvi_solve(g, terminal(0.9, 0.5), CostKind::uoi);
  CHECK(t.update_probability(-7.0, 1.0) == t.decision(0, 0));
  CHECK(t.update_probability(0.9, 90.0) == t.decision(4, 1));
  CHECK(t.update_probability(0.1, 2.0) == t.decision(2, 0));
}
