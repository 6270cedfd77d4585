#include "uoi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

namespace uoi {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Error-bin chain shared by value iteration and exact evaluation.
struct ErrorChain {
  Index m = 0;
  Index mid = 0;
  Index radius = 0;
  Eigen::VectorXd centers;
  Eigen::VectorXd pmf;
  Eigen::VectorXd m2;  // E[x'^2] after an increment from center c
  std::vector<double> w;
  std::vector<double> pw;
  double p = 1.0;

  ErrorChain(const MdpGrid& grid, const TerminalParams& params) : p(params.p) {
    m = grid.bins();
    mid = (m - 1) / 2;
    centers = Eigen::VectorXd::LinSpaced(m, -grid.q_max, grid.q_max);
    const double sigma = std::sqrt(params.sigma2);
    radius = sigma > 0.0 ? std::min<Index>(m - 1, static_cast<Index>(std::ceil(8.0 * sigma / grid.q_step)) + 1) : 0;
    pmf = increment_pmf(params.sigma2, grid.q_step, radius);
    m2.resize(m);
    for (Index c = 0; c < m; ++c) {
      double s = 0.0;
      for (Index o = 0; o < pmf.size(); ++o) {
        const double x = centers(target(c, o));
        s += pmf(o) * x * x;
      }
      m2(c) = s;
    }
    for (const auto& [value, prob] : grid.weight_support) {
      w.push_back(value);
      pw.push_back(prob);
    }
  }

  Index target(Index c, Index o) const { return std::clamp<Index>(c + o - radius, 0, m - 1); }
  Index nw() const { return static_cast<Index>(w.size()); }
  Index states() const { return m * nw(); }

  // EH(c) = E[ hbar(c + A) ].
  Eigen::VectorXd shift_expect(const Eigen::VectorXd& hbar) const {
    Eigen::VectorXd out(m);
    for (Index c = 0; c < m; ++c) {
      double s = 0.0;
      for (Index o = 0; o < pmf.size(); ++o) s += pmf(o) * hbar(target(c, o));
      out(c) = s;
    }
    return out;
  }
};

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  const Index n = transition.rows();
  Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd dist = a.partialPivLu().solve(b);
  dist = dist.cwiseMax(0.0);
  return dist / dist.sum();
}

StationaryPolicyTable solve_uoi(const MdpGrid& grid, const TerminalParams& params,
                                const std::optional<Eigen::VectorXd>& init) {
  const ErrorChain chain(grid, params);
  const Index m = chain.m, nw = chain.nw(), ns = chain.states();
  const double p = chain.p;
  const Index ref = chain.mid * nw;

  Eigen::VectorXd h = init && init->size() == ns ? *init : Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd th(ns), hbar(m);
  StationaryPolicyTable out;
  out.kind = CostKind::uoi;
  out.lambda = grid.lambda;

  auto sweep = [&](Eigen::VectorXd& result, Eigen::MatrixXd* decision) {
    hbar.setZero();
    for (Index j = 0; j < m; ++j)
      for (Index k = 0; k < nw; ++k) hbar(j) += chain.pw[static_cast<std::size_t>(k)] * h(j * nw + k);
    const Eigen::VectorXd eh = chain.shift_expect(hbar);
    for (Index j = 0; j < m; ++j) {
      for (Index k = 0; k < nw; ++k) {
        const double wv = chain.w[static_cast<std::size_t>(k)];
        const double stay = wv * chain.m2(j) + eh(j);
        const double update = grid.lambda + p * (wv * chain.m2(chain.mid) + eh(chain.mid)) + (1.0 - p) * stay;
        result(j * nw + k) = std::min(stay, update);
        if (decision) (*decision)(j, k) = update < stay ? 1.0 : 0.0;
      }
    }
  };

  for (out.iterations = 1; out.iterations <= grid.max_iter; ++out.iterations) {
    sweep(th, nullptr);
    const Eigen::VectorXd diff = th - h;
    out.span = diff.maxCoeff() - diff.minCoeff();
    out.gain = 0.5 * (diff.maxCoeff() + diff.minCoeff());
    h = th.array() - th(ref);
    if (out.span < grid.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    out.iterations = grid.max_iter;
    out.diagnostics.push_back("relative value iteration did not converge; final span " + std::to_string(out.span));
  }
  out.decision.resize(m, nw);
  sweep(th, &out.decision);
  out.values = h;
  out.q_centers = chain.centers;
  out.weights = chain.w;
  std::tie(out.avg_cost, out.avg_freq) = evaluate_table(grid, params, CostKind::uoi, out.decision);
  return out;
}

StationaryPolicyTable solve_aoi(const MdpGrid& grid, const TerminalParams& params,
                                const std::optional<Eigen::VectorXd>& init) {
  const Index na = grid.age_max;
  const double p = params.p;
  Eigen::VectorXd h = init && init->size() == na ? *init : Eigen::VectorXd::Zero(na);
  Eigen::VectorXd th(na);
  StationaryPolicyTable out;
  out.kind = CostKind::aoi;
  out.lambda = grid.lambda;

  // State index a-1 holds age a.
  auto sweep = [&](Eigen::VectorXd& result, Eigen::MatrixXd* decision) {
    for (Index i = 0; i < na; ++i) {
      const Index nxt = std::min(i + 1, na - 1);
      const double stay = static_cast<double>(nxt + 1) + h(nxt);
      const double update = grid.lambda + p * (1.0 + h(0)) + (1.0 - p) * stay;
      result(i) = std::min(stay, update);
      if (decision) (*decision)(i, 0) = update < stay ? 1.0 : 0.0;
    }
  };

  for (out.iterations = 1; out.iterations <= grid.max_iter; ++out.iterations) {
    sweep(th, nullptr);
    const Eigen::VectorXd diff = th - h;
    out.span = diff.maxCoeff() - diff.minCoeff();
    out.gain = 0.5 * (diff.maxCoeff() + diff.minCoeff());
    h = th.array() - th(0);
    if (out.span < grid.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    out.iterations = grid.max_iter;
    out.diagnostics.push_back("relative value iteration did not converge; final span " + std::to_string(out.span));
  }
  out.decision.resize(na, 1);
  sweep(th, &out.decision);
  out.values = h;
  std::tie(out.avg_cost, out.avg_freq) = evaluate_table(grid, params, CostKind::aoi, out.decision);
  return out;
}

}  // namespace

MdpGrid MdpGrid::defaults(const TerminalParams& params, const WeightProcess& weights) {
  if (!weights.iid()) throw InvalidParameter("MDP reference policies need an i.i.d. weight process");
  MdpGrid g;
  const double sigma = std::sqrt(params.sigma2);
  g.q_max = 25.0 * sigma;
  g.q_step = 0.25 * sigma;
  g.weight_support = weights.support();
  return g;
}

Index MdpGrid::bins() const { return static_cast<Index>(std::llround(2.0 * q_max / q_step)) + 1; }

Index MdpGrid::states(CostKind kind) const {
  return kind == CostKind::uoi ? bins() * static_cast<Index>(weight_support.size()) : age_max;
}

void MdpGrid::validate() const {
  if (!(q_max > 0.0 && q_step > 0.0)) throw InvalidParameter("mdp: q_max and q_step must be positive");
  const double ratio = q_max / q_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw InvalidParameter("mdp: q_max must be an integer multiple of q_step");
  if (weight_support.empty()) throw InvalidParameter("mdp: empty weight support");
  double total = 0.0;
  for (const auto& [v, pr] : weight_support) {
    if (!(v > 0.0) || pr < 0.0) throw InvalidParameter("mdp: weights must be positive with nonnegative mass");
    total += pr;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidParameter("mdp: weight probabilities must sum to 1");
  if (lambda < 0.0) throw InvalidParameter("mdp: lambda must be nonnegative");
  if (age_max < 2) throw InvalidParameter("mdp: age_max must be at least 2");
}

Eigen::VectorXd increment_pmf(double sigma2, double q_step, Index radius) {
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(2 * radius + 1);
  if (sigma2 <= 0.0 || radius == 0) {
    pmf(radius) = 1.0;
    return pmf;
  }
  const double sigma = std::sqrt(sigma2);
  for (Index o = -radius; o <= radius; ++o) {
    const double upper = o == radius ? 1.0 : normal_cdf((static_cast<double>(o) + 0.5) * q_step / sigma);
    const double lower = o == -radius ? 0.0 : normal_cdf((static_cast<double>(o) - 0.5) * q_step / sigma);
    pmf(o + radius) = upper - lower;
  }
  return pmf / pmf.sum();
}

StationaryPolicyTable rvi_solve(const MdpGrid& grid, const TerminalParams& params, CostKind kind,
                                const std::optional<Eigen::VectorXd>& init) {
  grid.validate();
  params.validate();
  return kind == CostKind::uoi ? solve_uoi(grid, params, init) : solve_aoi(grid, params, init);
}

std::pair<double, double> evaluate_table(const MdpGrid& grid, const TerminalParams& params, CostKind kind,
                                         const Eigen::MatrixXd& decision) {
  const double p = params.p;
  if (kind == CostKind::aoi) {
    const Index na = grid.age_max;
    Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(na, na);
    Eigen::VectorXd cost(na), freq(na);
    for (Index i = 0; i < na; ++i) {
      const double mu = decision(i, 0);
      const Index nxt = std::min(i + 1, na - 1);
      tr(i, 0) += mu * p;
      tr(i, nxt) += 1.0 - mu * p;
      cost(i) = mu * p * 1.0 + (1.0 - mu * p) * static_cast<double>(nxt + 1);
      freq(i) = mu;
    }
    const Eigen::VectorXd dist = stationary_distribution(tr);
    return {dist.dot(cost), dist.dot(freq)};
  }

  const ErrorChain chain(grid, params);
  const Index m = chain.m, nw = chain.nw(), ns = chain.states();
  Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::VectorXd cost(ns), freq(ns);
  for (Index j = 0; j < m; ++j) {
    for (Index k = 0; k < nw; ++k) {
      const Index s = j * nw + k;
      const double mu = decision(j, k);
      const double reset = mu * p;
      for (Index o = 0; o < chain.pmf.size(); ++o) {
        const Index from_here = chain.target(j, o);
        const Index from_zero = chain.target(chain.mid, o);
        for (Index k2 = 0; k2 < nw; ++k2) {
          const double pw = chain.pw[static_cast<std::size_t>(k2)] * chain.pmf(o);
          tr(s, from_here * nw + k2) += (1.0 - reset) * pw;
          tr(s, from_zero * nw + k2) += reset * pw;
        }
      }
      cost(s) = chain.w[static_cast<std::size_t>(k)] * ((1.0 - reset) * chain.m2(j) + reset * chain.m2(chain.mid));
      freq(s) = mu;
    }
  }
  const Eigen::VectorXd dist = stationary_distribution(tr);
  return {dist.dot(cost), dist.dot(freq)};
}

CalibratedPolicy calibrate_multiplier(const MdpGrid& grid_in, const TerminalParams& params, double rho,
                                      CostKind kind) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidParameter("calibrate_multiplier: rho must be in (0,1]");
  constexpr double kFreqTol = 1e-3;
  constexpr double kLambdaHi = 1e6;
  MdpGrid grid = grid_in;
  grid.lambda = 0.0;
  CalibratedPolicy out;
  StationaryPolicyTable lo_table = rvi_solve(grid, params, kind);
  if (lo_table.avg_freq <= rho + kFreqTol) {
    out.lambda = 0.0;
    out.table = std::move(lo_table);
    return out;
  }
  grid.lambda = kLambdaHi;
  StationaryPolicyTable hi_table = rvi_solve(grid, params, kind);
  if (hi_table.avg_freq > rho) {
    out.lambda = kLambdaHi;
    out.table = std::move(hi_table);
    out.table.diagnostics.push_back("no multiplier bracket found up to lambda = 1e6");
    return out;
  }
  double lo = 0.0, hi = kLambdaHi;
  for (int it = 0; it < 60; ++it) {
    grid.lambda = 0.5 * (lo + hi);
    StationaryPolicyTable t = rvi_solve(grid, params, kind, lo_table.values);
    if (std::abs(t.avg_freq - rho) < kFreqTol) {
      out.lambda = grid.lambda;
      out.table = std::move(t);
      return out;
    }
    if (t.avg_freq > rho) {
      lo = grid.lambda;
      lo_table = std::move(t);
    } else {
      hi = grid.lambda;
      hi_table = std::move(t);
    }
  }

  // Mix the bracketing policies state by state until the frequency hits rho.
  double a_lo = 0.0, a_hi = 1.0;  // weight on lo_table (the more frequent one)
  Eigen::MatrixXd mixed = hi_table.decision;
  std::pair<double, double> perf{hi_table.avg_cost, hi_table.avg_freq};
  for (int it = 0; it < 60; ++it) {
    const double a = 0.5 * (a_lo + a_hi);
    mixed = a * lo_table.decision + (1.0 - a) * hi_table.decision;
    perf = evaluate_table(grid, params, kind, mixed);
    if (std::abs(perf.second - rho) < 1e-5) break;
    (perf.second > rho ? a_hi : a_lo) = a;
  }
  out.lambda = 0.5 * (lo + hi);
  out.table = std::move(hi_table);
  out.table.decision = mixed;
  out.table.lambda = out.lambda;
  std::tie(out.table.avg_cost, out.table.avg_freq) = perf;
  return out;
}

double StationaryPolicyTable::update_probability(double q, double omega_next) const {
  const Index m = q_centers.size();
  const double step = m > 1 ? q_centers(1) - q_centers(0) : 1.0;
  const Index j = std::clamp<Index>(std::llround((q - q_centers(0)) / step), 0, m - 1);
  Index k = 0;
  double best = std::abs(weights.front() - omega_next);
  for (std::size_t i = 1; i < weights.size(); ++i) {
    if (std::abs(weights[i] - omega_next) < best) {
      best = std::abs(weights[i] - omega_next);
      k = static_cast<Index>(i);
    }
  }
  return decision(j, k);
}

double StationaryPolicyTable::update_probability_age(Index age) const {
  return decision(std::clamp<Index>(age - 1, 0, decision.rows() - 1), 0);
}

}  // namespace uoi
