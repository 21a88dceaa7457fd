// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance                 exit 0 iff every criterion passes
//   acceptance --expect-fail 6 exit 0 iff the failing set is exactly {6}
//
// Tolerances are fixed below and are not configurable.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "quasieq/bd/density.hpp"
#include "quasieq/bd/model.hpp"
#include "quasieq/bounds/bounds.hpp"
#include "quasieq/ctmc/hitting.hpp"
#include "quasieq/ctmc/solvers.hpp"
#include "quasieq/ctmc/truncation.hpp"
#include "quasieq/error.hpp"
#include "quasieq/mpp/mpp.hpp"
#include "quasieq/ratexpr/expr.hpp"
#include "quasieq/simulate/simulate.hpp"
#include "support/lyapunov_oracle.hpp"
#include "support/test_chains.hpp"

using namespace quasieq;
using bd::BirthDeathModel;
using ctmc::ProbabilityVector;
using ctmc::ReturnDistribution;
using ctmc::SparseGenerator;
using ctmc::StateIndex;

namespace {

// ----------------------------------------------------------- tolerances ---
constexpr double kClosedFormRel = 1e-8;
constexpr double kClosedFormSeconds = 10.0;
constexpr double kSandwichRel = 1e-8;
constexpr double kInequalityRel = 1e-9;  // rounding allowance on exact-vs-bound checks
constexpr double kInequalityAbs = 1e-15;
constexpr double kSweepMinR2 = 0.95;
constexpr double kRenewalRel = 1e-8;
constexpr double kWindowTv = 0.01;
constexpr double kWindowLowFactor = 50.0;
constexpr double kWindowHighFactor = 0.01;
constexpr int kWindowPoints = 10;
constexpr double kMaxCalibratedD = 10.0;
constexpr double kSlopeRelTol = 0.10;
constexpr double kTsSlope = -0.5;
constexpr double kTsSlopeTol = 0.1;
constexpr double kAsymptoticSeconds = 30.0;
constexpr double kLyapunovResidual = 1e-10;
constexpr double kLyapunovOracleRel = 1e-6;
constexpr double kMeanOffsetPerSqrtN = 0.5;
constexpr double kCovRel = 0.15;
constexpr double kMppSeconds = 60.0;
constexpr double kStandardErrors = 3.0;
constexpr double kDerivativeRel = 1e-7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

bool le(double a, double b) { return a <= b * (1.0 + kInequalityRel) + kInequalityAbs; }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// ------------------------------------------------------------ test chains ---

struct TestChain {
  std::string name;
  std::shared_ptr<const SparseGenerator> q;
  StateIndex s;
  std::optional<BirthDeathModel> closed;
};

BirthDeathModel ricker(double A, std::size_t cap) {
  return BirthDeathModel([=](std::size_t j) { return j * 2.0 * std::exp(-1.0 * j / A); },
                         [](std::size_t j) { return j * 1.0; }, cap);
}

BirthDeathModel random_bd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.2, 3.0);
  std::vector<double> b(n), d(n);
  for (std::size_t j = 0; j < n; ++j) {
    b[j] = rate(rng);
    d[j] = rate(rng);
  }
  return BirthDeathModel::from_sequences(b, d);
}

// Ricker A = 20 (cap 120), 25 random birth-death chains with n <= 60 and 10
// random general chains. All criteria that speak of "the test chains" use
// this list.
const std::vector<TestChain>& test_chains() {
  static const std::vector<TestChain> chains = [] {
    std::vector<TestChain> out;
    auto m = ricker(20, 120);
    out.push_back({"ricker-A20", std::make_shared<const SparseGenerator>(m.generator()), {13}, m});
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<std::size_t> size(2, 60);
    for (int rep = 0; rep < 25; ++rep) {
      const std::size_t n = size(rng);
      auto bdm = random_bd(n, rng);
      const std::size_t s = std::uniform_int_distribution<std::size_t>(1, n)(rng);
      out.push_back({"bd-" + std::to_string(rep) + "-n" + std::to_string(n),
                     std::make_shared<const SparseGenerator>(bdm.generator()), {s}, bdm});
    }
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t n = 4 + static_cast<std::size_t>(3 * rep);
      out.push_back({"general-" + std::to_string(rep),
                     std::make_shared<const SparseGenerator>(testing::random_chain(n, rng)),
                     {1 + static_cast<std::size_t>(rep) % n},
                     std::nullopt});
    }
    return out;
  }();
  return chains;
}

double one_minus_ps(const TestChain& c, const ctmc::HittingStats& hs) {
  return c.closed ? c.closed->one_minus_ps(c.s.id) : 1.0 - hs.p_s;
}

// Random return law: random support size, exponential weights.
ReturnDistribution random_mu(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> w(n, 0.0);
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::exponential_distribution<double> e(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += (w[idx[i]] = e(rng));
  for (double& v : w) v /= total;
  return ReturnDistribution(w);
}

std::vector<ReturnDistribution> test_mus(const TestChain& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ReturnDistribution> mus;
  for (int i = 0; i < 20; ++i) mus.push_back(random_mu(c.q->size(), rng));
  return mus;
}

ProbabilityVector returned_law(const SparseGenerator& q, const ReturnDistribution& mu) {
  return ctmc::stationary_distribution(ctmc::build_returned_generator(q, mu));
}

std::vector<bool> stop_at(std::size_t n, std::initializer_list<std::size_t> states) {
  std::vector<bool> stop(n, false);
  for (auto s : states) stop[s - 1] = true;
  return stop;
}

// ---------------------------------------------------------- criterion 1 ---

Outcome closed_forms() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t comparisons = 0;
  auto compare = [&](double closed, double solved) {
    const double scale = std::max(std::abs(closed), std::abs(solved));
    worst = std::max(worst, scale == 0.0 ? 0.0 : std::abs(closed - solved) / scale);
    ++comparisons;
  };
  for (const auto& c : test_chains()) {
    if (!c.closed) continue;
    const auto& m = *c.closed;
    const auto& q = *c.q;
    const std::size_t n = m.cap();
    const std::size_t s = c.s.id;
    const auto hs = ctmc::hitting_stats(c.q, c.s);
    compare(m.ps(s), hs.p_s);
    compare(m.one_minus_ps(s), 1.0 - hs.p_s);
    compare(m.p(s), hs.p_min);
    compare(m.Ts(s), hs.T_s);
    const auto p_all = m.p_all(s);
    const auto T_all = m.T_all(s);
    const auto row = m.occupation_from_s(s);
    for (std::size_t k = 1; k <= n; ++k) {
      compare(p_all[k - 1], hs.p[k - 1]);
      compare(T_all[k - 1], hs.T[k - 1]);
      compare(row[k - 1], hs.occupation[k - 1]);
    }
    std::vector<std::size_t> starts{1, n, (s + n) / 2, (s + 1) / 2};
    if (s > 1) starts.push_back(s - 1);
    if (s < n) starts.push_back(s + 1);
    for (std::size_t k : starts) {
      if (k == s) continue;
      const auto occ = ctmc::occupation_before_stop(q, stop_at(n, {s}), StateIndex{k});
      for (std::size_t i = 1; i <= n; ++i) {
        compare(m.occupation(k, i, s), occ[i - 1]);
        if (i == s) continue;
        const auto hit = ctmc::hit_probability(q, stop_at(n, {s, i}), StateIndex{i});
        compare(m.u(k, i, s), hit[k - 1]);
      }
    }
    for (std::size_t a = s + 1; a <= n; ++a) {
      std::vector<StateIndex> members;
      for (std::size_t j = 1; j <= a; ++j) members.push_back({j});
      compare(m.r_zeta(s, a), ctmc::stay_probability(q, members, c.s));
      compare(m.one_minus_r(s, a), 1.0 - ctmc::stay_probability(q, members, c.s));
    }
  }
  const double secs = seconds_since(start);
  return {worst <= kClosedFormRel && secs < kClosedFormSeconds,
          "max relative gap " + fmt(worst) + " over " + std::to_string(comparisons) +
              " comparisons (tol " + fmt(kClosedFormRel) + "), " + fmt(secs) + " s (limit " +
              fmt(kClosedFormSeconds) + " s)"};
}

// ---------------------------------------------------------- criterion 2 ---

// E_k[tau_s] for the returned chain by a dense solve, with the mean return
// time in position s.
std::vector<double> dense_returned_times(const SparseGenerator& q, const ReturnDistribution& mu,
                                         StateIndex s) {
  const SparseGenerator qm = ctmc::build_returned_generator(q, mu);
  const std::size_t n = q.size();
  std::vector<bool> stop(n, false);
  stop[s.pos()] = true;
  std::vector<double> t = testing::dense_mean_time(qm, stop);
  double back = 1.0;
  for (const auto& e : qm.row(s)) back += e.rate * t[e.to.pos()];
  t[s.pos()] = back / qm.total_rate(s);
  return t;
}

Outcome sandwich() {
  std::size_t checked = 0, violations = 0;
  double worst_low = -INFINITY, worst_high = -INFINITY;  // signed slack ratios
  int seed = 0;
  for (const auto& c : test_chains()) {
    const auto hs = ctmc::hitting_stats(c.q, c.s);
    for (const auto& mu : test_mus(c, 500 + seed++)) {
      const auto t = dense_returned_times(*c.q, mu, c.s);
      const double e_mu = mu.expectation(t);
      const double mu_T = hs.mean_T(mu);
      const double lo = (mu_T - e_mu) / e_mu;
      const double hi = (e_mu - mu_T / hs.p_min) / e_mu;
      worst_low = std::max(worst_low, lo);
      worst_high = std::max(worst_high, hi);
      if (lo > kSandwichRel || hi > kSandwichRel) ++violations;
      ++checked;
    }
  }
  return {violations == 0, std::to_string(checked) + " (chain, mu) pairs, " +
                               std::to_string(violations) +
                               " violations; max (mu(T) - E)/E = " + fmt(worst_low) +
                               ", max (E - mu(T)/p)/E = " + fmt(worst_high) + " (tol " +
                               fmt(kSandwichRel) + ")"};
}

// ------------------------------------------------------ criteria 3 and 4 ---

double mass_outside(const ProbabilityVector& pi, const ctmc::TruncationPlan& plan) {
  double out = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!plan.contains(StateIndex::from_pos(i))) out += pi.values()[i];
  }
  return out;
}

struct StationarySweep {
  std::size_t pairs = 0;
  std::size_t outside_violations = 0;
  std::size_t tv_violations = 0;
  double worst_outside_ratio = 0.0;
  double worst_tv_ratio = 0.0;
};

// Every test chain, delta_s plus its 20 random mu, every zeta of the
// default grid. M = max(1, mu(T)/T_s) puts mu in M_M.
const StationarySweep& stationary_sweep() {
  static const StationarySweep sweep = [] {
    StationarySweep out;
    int seed = 0;
    for (const auto& c : test_chains()) {
      const auto hs = ctmc::hitting_stats(c.q, c.s);
      const auto pi_s = returned_law(*c.q, ReturnDistribution::point_mass(c.q->size(), c.s));
      std::vector<ReturnDistribution> mus{ReturnDistribution::point_mass(c.q->size(), c.s)};
      for (auto& mu : test_mus(c, 500 + seed++)) mus.push_back(std::move(mu));
      std::vector<ctmc::TruncationPlan> plans;
      for (double zeta : bounds::default_zeta_grid()) plans.push_back(ctmc::select_truncation(hs, zeta));
      for (const auto& mu : mus) {
        const double M = std::max(1.0, hs.mean_T(mu) / hs.T_s);
        const auto pi = returned_law(*c.q, mu);
        const double tv = ctmc::total_variation(pi, pi_s);
        for (const auto& plan : plans) {
          const auto in = bounds::make_inputs(hs, plan, M, 1.0);
          const double eps = bounds::epsilon_bound(in);
          const double bound = bounds::tv_bound_main(in);
          const double outside = mass_outside(pi, plan);
          if (!le(outside, eps)) ++out.outside_violations;
          if (!le(tv, bound)) ++out.tv_violations;
          out.worst_outside_ratio = std::max(out.worst_outside_ratio, outside / eps);
          out.worst_tv_ratio = std::max(out.worst_tv_ratio, tv / bound);
          ++out.pairs;
        }
      }
    }
    return out;
  }();
  return sweep;
}

Outcome outside_mass() {
  const auto& s = stationary_sweep();
  return {s.outside_violations == 0,
          std::to_string(s.pairs) + " (chain, mu, zeta) cases, " +
              std::to_string(s.outside_violations) +
              " violations; max pi(C_zeta^c)/epsilon = " + fmt(s.worst_outside_ratio)};
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y, double* slope) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (slope) *slope = sxy / sxx;
  return sxy * sxy / (sxx * syy);
}

Outcome main_tv() {
  const auto& s = stationary_sweep();
  std::vector<double> As, logs;
  std::string values;
  for (double A : {10.0, 15.0, 20.0, 25.0, 30.0}) {
    const bd::DensitySpec spec{bd::Family::kRicker, {{"b", 2.0}, {"d", 1.0}, {"alpha", 1.0}}, A, {}, {}};
    const auto inst = bd::make_density_model(spec, static_cast<std::size_t>(6 * A));
    const SparseGenerator q = inst.model.generator();
    const std::size_t two_A = static_cast<std::size_t>(2 * A);
    const auto pi_u = returned_law(q, ReturnDistribution::uniform(q.size(), {1}, {two_A}));
    const auto pi_s = returned_law(q, ReturnDistribution::point_mass(q.size(), {inst.s}));
    const double tv = ctmc::total_variation(pi_u, pi_s);
    As.push_back(A);
    logs.push_back(std::log(tv));
    values += (values.empty() ? "" : ", ") + fmt(tv);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < logs.size(); ++i) monotone = monotone && logs[i] < logs[i - 1];
  double slope = 0.0;
  const double r2 = r_squared(As, logs, &slope);
  return {s.tv_violations == 0 && monotone && r2 >= kSweepMinR2,
          std::to_string(s.tv_violations) + " violations in " + std::to_string(s.pairs) +
              " cases (max tv/bound " + fmt(s.worst_tv_ratio) + "); Ricker sweep A=10..30 tv = [" +
              values + "], " + (monotone ? "decreasing" : "NOT decreasing") + ", log-linear R^2 = " +
              fmt(r2) + " (min " + fmt(kSweepMinR2) + "), slope " + fmt(slope)};
}

// ---------------------------------------------------------- criterion 5 ---

Outcome renewal() {
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& c : test_chains()) {
    const auto hs = ctmc::hitting_stats(c.q, c.s);
    const auto pi_s = returned_law(*c.q, ReturnDistribution::point_mass(c.q->size(), c.s));
    double flux = 0.0;
    for (std::size_t i = 0; i < c.q->size(); ++i) {
      flux += pi_s.values()[i] * c.q->exit_rate(StateIndex::from_pos(i));
    }
    const double target = one_minus_ps(c, hs);
    const double rel = std::abs(hs.T_s * flux - target) / target;
    worst = std::max(worst, rel);
    if (rel > kRenewalRel) ++violations;
  }
  return {violations == 0, std::to_string(test_chains().size()) + " chains, " +
                               std::to_string(violations) + " violations; max relative gap " +
                               fmt(worst) + " (tol " + fmt(kRenewalRel) + ")"};
}

// ---------------------------------------------------------- criterion 6 ---

std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1));
  }
  g.front() = a;
  g.back() = b;
  return g;
}

// The bounds are affine in D: b(D) = b(0) + D (b(1) - b(0)). Returns the D
// at which b(D) equals `exact`, or 0 when the D-free part already covers it.
double D_needed(double exact, double b1, double b2) {
  const double slope = b2 - b1;
  const double b0 = b1 - slope;
  if (exact <= b0) return 0.0;
  return (exact - b0) / slope;
}

Outcome window() {
  const auto model = ricker(20, 120);
  const auto q = std::make_shared<const SparseGenerator>(model.generator());
  const StateIndex s{13};
  const auto hs = ctmc::hitting_stats(q, s);
  const auto search = bounds::optimize_zeta(hs, 1.0, {});
  const auto& plan = search.report.plan;
  const double t_low = kWindowLowFactor * plan.T_zeta_plus;
  const double t_high = kWindowHighFactor / (1.0 - plan.r_zeta);

  // Whether any zeta on the grid opens the window.
  double best_ratio = 0.0;
  double best_zeta = 0.0;
  for (double zeta : bounds::default_zeta_grid()) {
    const auto p = ctmc::select_truncation(hs, zeta);
    const double ratio = (kWindowHighFactor / (1.0 - p.r_zeta)) / (kWindowLowFactor * p.T_zeta_plus);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_zeta = zeta;
    }
  }

  const bool empty = !(t_low < t_high);
  // With an empty window the grid spans [t_high, t_low] instead, so the
  // exact curve and the D calibration are still reported.
  const auto grid = empty ? log_grid(t_high, t_low, kWindowPoints) : log_grid(t_low, t_high, kWindowPoints);

  const auto pi_tilde = [&] {
    const auto r = ctmc::accelerated_return_generator(*q, plan.members, s);
    return r.lift(ctmc::stationary_distribution(r.generator), q->size());
  }();
  const auto pi_s = returned_law(*q, ReturnDistribution::point_mass(q->size(), s));
  const auto rep1 = bounds::build_report(hs, plan, 1.0, 1.0, grid);
  const auto rep2 = bounds::build_report(hs, plan, 1.0, 2.0, grid);

  double worst_tv = 0.0;
  double D_max = 0.0;
  std::size_t covered = 0, applicable = 0;
  const auto init = ProbabilityVector::point_mass(q->size(), s);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto law = ctmc::transient_distribution(*q, init, grid[i]);
    const double tv_tilde = ctmc::total_variation(law, pi_tilde);
    const double tv_ret = ctmc::total_variation(law, pi_s);
    worst_tv = std::max(worst_tv, tv_tilde);
    const auto& a = rep1.times[i];
    const auto& b = rep2.times[i];
    if (a.eta) {
      ++applicable;
      if (tv_ret <= *a.eta) ++covered;
      D_max = std::max(D_max, D_needed(tv_ret, *a.eta, *b.eta));
    }
    if (a.tilde) {
      ++applicable;
      if (tv_tilde <= *a.tilde) ++covered;
      D_max = std::max(D_max, D_needed(tv_tilde, *a.tilde, *b.tilde));
    }
  }

  const bool tv_ok = !empty && worst_tv <= kWindowTv;
  const bool D_ok = D_max <= kMaxCalibratedD;
  std::string detail = "zeta* = " + fmt(plan.zeta) + ", T_zeta+ = " + fmt(plan.T_zeta_plus) +
                       ", 1 - r_zeta = " + fmt(1.0 - plan.r_zeta) + "; window [50 T_zeta+, 0.01/(1-r_zeta)] = [" +
                       fmt(t_low) + ", " + fmt(t_high) + "]" + (empty ? " is EMPTY" : "") +
                       "; best t_high/t_low over the zeta grid " + fmt(best_ratio) + " at zeta " +
                       fmt(best_zeta) + "; max exact tv to pi_tilde on " + (empty ? "[t_high, t_low]" : "the window") +
                       " = " + fmt(worst_tv) + " (limit " + fmt(kWindowTv) + "); D=1 bounds cover " +
                       std::to_string(covered) + "/" + std::to_string(applicable) +
                       " applicable points, calibrated D = " + fmt(D_max) + " (limit " +
                       fmt(kMaxCalibratedD) + ")";
  return {tv_ok && D_ok, detail};
}

// ---------------------------------------------------------- criterion 7 ---

Outcome asymptotics() {
  const auto start = Clock::now();
  std::vector<double> ss, log_omp, log_A, log_Ts;
  for (double A : {50.0, 100.0, 200.0, 400.0}) {
    const auto m = ricker(A, static_cast<std::size_t>(4 * A));
    const std::size_t s = static_cast<std::size_t>(std::floor(A * std::log(2.0)));
    ss.push_back(static_cast<double>(s));
    log_omp.push_back(std::log(m.one_minus_ps(s)));
    log_A.push_back(std::log(A));
    log_Ts.push_back(std::log(m.Ts(s)));
  }
  double slope_p = 0.0, slope_T = 0.0;
  r_squared(ss, log_omp, &slope_p);
  r_squared(log_A, log_Ts, &slope_T);
  const double target = -0.5 * std::log(2.0);
  const double secs = seconds_since(start);
  const bool ok = std::abs(slope_p - target) <= kSlopeRelTol * std::abs(target) &&
                  std::abs(slope_T - kTsSlope) <= kTsSlopeTol && secs < kAsymptoticSeconds;
  return {ok, "slope of log(1-p_s) vs s = " + fmt(slope_p) + " (target " + fmt(target) + " +-" +
                  fmt(100 * kSlopeRelTol) + "%), slope of log T_s vs log A = " + fmt(slope_T) +
                  " (target " + fmt(kTsSlope) + " +-" + fmt(kTsSlopeTol) + "), " + fmt(secs) + " s"};
}

// ---------------------------------------------------------- criterion 8 ---

mpp::PopulationModel verhulst(double N) {
  return mpp::PopulationModel(1, {{{1}, "b*x"}, {{-1}, "x*(d + c*x)"}},
                              {{"b", 2.0}, {"d", 1.0}, {"c", 1.0}}, N);
}

Outcome lyapunov() {
  std::mt19937_64 rng(2024);
  double worst_residual = 0.0, worst_gap = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index d = 1 + rep % 5;
    const auto [A, sig] = testing::random_stable_pair(d, rng);
    const Eigen::MatrixXd Sigma = mpp::solve_lyapunov(A, sig);
    const Eigen::MatrixXd oracle = testing::lyapunov_integral(A, sig);
    worst_residual = std::max(worst_residual, mpp::lyapunov_residual(A, sig, Sigma));
    worst_gap = std::max(worst_gap, (Sigma - oracle).cwiseAbs().maxCoeff() /
                                        std::max(1.0, oracle.cwiseAbs().maxCoeff()));
  }
  // Verhulst b=2, d=1, c=1: c = 1, DF = -1, sigma^2 = 4, Sigma = 2.
  const auto g = mpp::find_equilibrium(verhulst(200), Eigen::VectorXd::Constant(1, 0.5));
  const double hand = std::max({std::abs(g.c(0) - 1.0), std::abs(g.A(0, 0) + 1.0),
                                std::abs(g.sigma2(0, 0) - 4.0) / 4.0, std::abs(g.Sigma(0, 0) - 2.0) / 2.0});
  const bool ok = worst_residual <= kLyapunovResidual && worst_gap <= kLyapunovOracleRel && hand <= 1e-10;
  return {ok, "10 pairs d<=5: max residual " + fmt(worst_residual) + " (tol " + fmt(kLyapunovResidual) +
                  "), max oracle gap " + fmt(worst_gap) + " (tol " + fmt(kLyapunovOracleRel) +
                  "); Verhulst Sigma = " + fmt(g.Sigma(0, 0)) + " (hand value 2)"};
}

// ---------------------------------------------------------- criterion 9 ---

struct ShapeCheck {
  bool ok = true;
  std::string detail;
};

ShapeCheck gaussian_shape(const mpp::PopulationModel& m, const Eigen::VectorXd& x0, double N) {
  const auto g = mpp::find_equilibrium(m, x0);
  const auto tp = mpp::build_truncated_process(m, g, 4.0);
  const auto qe = mpp::mpp_quasi_equilibrium(tp, g);
  const auto& cmp = qe.comparison;
  ShapeCheck out;
  double worst_mean = 0.0, worst_cov = 0.0;
  for (Eigen::Index i = 0; i < g.c.size(); ++i) {
    worst_mean = std::max(worst_mean, std::abs(cmp.mean_pi(i) - N * g.c(i)) / std::sqrt(N));
    for (Eigen::Index j = 0; j < g.c.size(); ++j) {
      const double scale = i == j ? g.Sigma(i, i) : std::sqrt(g.Sigma(i, i) * g.Sigma(j, j));
      worst_cov = std::max(worst_cov, std::abs(cmp.cov_pi(i, j) / N - g.Sigma(i, j)) / scale);
    }
  }
  out.ok = worst_mean <= kMeanOffsetPerSqrtN && worst_cov <= kCovRel;
  if (m.dimension() > 1) {
    const auto irr = mpp::check_local_irreducibility(m, tp, 200, 4, 9);
    out.ok = out.ok && irr.ok();
    out.detail += "locally irreducible " + std::string(irr.ok() ? "yes" : "NO") + ", ";
  }
  out.detail += std::to_string(cmp.states) + " states, |mean - Nc|/sqrt(N) = " + fmt(worst_mean) +
                " (max " + fmt(kMeanOffsetPerSqrtN) + "), |cov/N - Sigma|/Sigma = " + fmt(worst_cov) +
                " (max " + fmt(kCovRel) + ")";
  return out;
}

Outcome mpp_shape() {
  const auto start = Clock::now();
  const auto one = gaussian_shape(verhulst(200), Eigen::VectorXd::Constant(1, 0.5), 200);
  const mpp::PopulationModel competition(2,
                                         {{{1, 0}, "b*x1"},
                                          {{-1, 0}, "x1*(d + a*x1 + e*x2)"},
                                          {{0, 1}, "b*x2"},
                                          {{0, -1}, "x2*(d + a*x2 + e*x1)"}},
                                         {{"b", 2.0}, {"d", 1.0}, {"a", 1.0}, {"e", 0.5}}, 100);
  const auto two = gaussian_shape(competition, Eigen::VectorXd::Constant(2, 0.5), 100);
  const double secs = seconds_since(start);
  return {one.ok && two.ok && secs < kMppSeconds,
          "Verhulst N=200: " + one.detail + "; 2-d competition N=100: " + two.detail + "; " +
              fmt(secs) + " s (limit " + fmt(kMppSeconds) + " s)"};
}

// --------------------------------------------------------- criterion 10 ---

Outcome simulation() {
  std::size_t estimates = 0, misses = 0;
  double worst_z = 0.0;
  auto compare = [&](const simulate::EstimatorResult& r, double exact) {
    const double se = std::max(r.standard_error, 1e-12);
    const double z = std::abs(r.estimate - exact) / se;
    worst_z = std::max(worst_z, z);
    if (z > kStandardErrors) ++misses;
    ++estimates;
  };

  // Hitting estimates on the untruncated Ricker A = 20 chain.
  const auto model = ricker(20, 120);
  const auto hs = ctmc::hitting_stats(model.generator(), StateIndex{13});
  const simulate::BirthDeathJumpModel jm([](std::size_t j) { return j * 2.0 * std::exp(-static_cast<double>(j) / 20.0); },
                                         [](std::size_t j) { return j * 1.0; }, 120);
  for (std::size_t k : {1, 5, 13, 20, 30}) {
    const auto h = simulate::estimate_hitting(jm, {13}, {k}, 20000, 100 + k);
    compare(h.p, hs.p[k - 1]);
    compare(h.T, hs.T[k - 1]);
  }

  // Hitting estimates on a random general chain.
  std::mt19937_64 rng(77);
  const SparseGenerator g = testing::random_chain(8, rng);
  const auto gs = ctmc::hitting_stats(g, StateIndex{3});
  const simulate::GeneratorJumpModel gm(g);
  for (std::size_t k = 1; k <= 8; ++k) {
    const auto h = simulate::estimate_hitting(gm, {3}, {k}, 10000, 300 + k);
    compare(h.p, gs.p[k - 1]);
    compare(h.T, gs.T[k - 1]);
  }

  // Occupation fractions of the returned chain: independent batches, each
  // started from the stationary law so every batch mean is unbiased.
  const auto mu = ReturnDistribution::uniform(8, {1}, {4});
  const auto pi = returned_law(g, mu);
  constexpr int kBatches = 40;
  std::vector<std::vector<double>> frac(8);
  std::discrete_distribution<std::size_t> draw(pi.values().begin(), pi.values().end());
  std::mt19937_64 init_rng(88);
  for (int b = 0; b < kBatches; ++b) {
    const StateIndex init = StateIndex::from_pos(draw(init_rng));
    const auto occ = simulate::occupation_fractions(gm, init, 200.0, 1, 1000 + b, simulate::Returned{mu}, {1});
    for (std::size_t k = 0; k < 8; ++k) frac[k].push_back(occ.law.values()[k]);
  }
  for (std::size_t k = 0; k < 8; ++k) {
    const double mean = std::accumulate(frac[k].begin(), frac[k].end(), 0.0) / kBatches;
    double ss = 0.0;
    for (double v : frac[k]) ss += (v - mean) * (v - mean);
    compare({mean, std::sqrt(ss / (kBatches - 1) / kBatches), kBatches}, pi.values()[k]);
  }

  // Deterministic replay: same seed, same path; thread count does not matter.
  const auto a = simulate::simulate(jm, {13}, 50.0, 42, simulate::Absorbing{});
  const auto b = simulate::simulate(jm, {13}, 50.0, 42, simulate::Absorbing{});
  bool replay = a.events.size() == b.events.size() && a.terminal == b.terminal;
  for (std::size_t i = 0; replay && i < a.events.size(); ++i) {
    replay = a.events[i].time == b.events[i].time && a.events[i].state == b.events[i].state &&
             a.events[i].flag == b.events[i].flag;
  }
  const auto h1 = simulate::estimate_hitting(gm, {3}, {5}, 2000, 9, {1});
  const auto h4 = simulate::estimate_hitting(gm, {3}, {5}, 2000, 9, {4});
  replay = replay && h1.p.estimate == h4.p.estimate && h1.T.estimate == h4.T.estimate;

  return {misses == 0 && replay,
          std::to_string(estimates) + " estimates, " + std::to_string(misses) + " beyond " +
              fmt(kStandardErrors) + " SE, max |z| = " + fmt(worst_z) + "; replay " +
              (replay ? "identical" : "DIFFERS")};
}

// --------------------------------------------------------- criterion 11 ---

Outcome parser() {
  const ratexpr::Symbols symbols{{"x", "y"}, {"b", "d", "alpha", "m", "c", "A"}};
  const std::map<std::string, double> params{{"b", 2.0}, {"d", 1.0}, {"alpha", 0.7},
                                             {"m", 1.3}, {"c", 2.0}, {"A", 25.0}};
  const std::vector<std::string> zoo{
      "b*exp(-alpha*x)",        "b/(1 + (x/m)^c)",           "x*(d + c*x/A)",
      "b*x/(1 + x/m)^2",        "log(1 + x*y) - x^2/3",      "pow(x, 1.5)*y + exp(-x*y)",
      "-x^-2 + 2^x",            "x^y",                       "(x - y)*(x + y)/(1 + y^2)",
      "exp(log(x)*c) - -x",     "b/(1 + x/m)",               "x*(1 + min(x, 5))"};
  auto at = [&](const ratexpr::Expr& e, double x, double y) {
    const std::vector<double> vars{x, y};
    return ratexpr::eval(e, ratexpr::Bindings{vars, &params});
  };
  std::size_t round_trips = 0, derivative_checks = 0, failures = 0;
  double worst = 0.0;
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> unit(0.2, 3.0);
  for (const auto& text : zoo) {
    const auto e = ratexpr::parse(text, symbols);
    const std::string printed = ratexpr::print(e);
    const auto again = ratexpr::parse(printed, symbols);
    if (!ratexpr::structurally_equal(again, e) || ratexpr::print(again) != printed) ++failures;
    ++round_trips;
    if (!ratexpr::is_smooth(e)) continue;
    for (const char* var : {"x", "y"}) {
      const auto de = ratexpr::diff(e, var);
      const bool wrt_x = std::string(var) == "x";
      for (int trial = 0; trial < 20; ++trial) {
        const double x = unit(rng), y = unit(rng);
        const double h = 1e-4 * (1.0 + (wrt_x ? x : y));
        auto f = [&](double delta) { return wrt_x ? at(e, x + delta, y) : at(e, x, y + delta); };
        const double d1 = (f(h) - f(-h)) / (2 * h);
        const double d2 = (f(2 * h) - f(-2 * h)) / (4 * h);
        const double fd = (4 * d1 - d2) / 3;
        const double exact = at(de, x, y);
        const double rel = std::abs(exact - fd) / std::max(1.0, std::abs(exact));
        worst = std::max(worst, rel);
        if (rel > kDerivativeRel) ++failures;
        ++derivative_checks;
      }
    }
  }
  return {failures == 0, std::to_string(round_trips) + " round trips, " +
                             std::to_string(derivative_checks) +
                             " derivative checks, max finite-difference gap " + fmt(worst) +
                             " (tol " + fmt(kDerivativeRel) + "), " + std::to_string(failures) +
                             " failures"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_failures.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail N]...\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed forms equal the generic solver", closed_forms},
      {"hitting-time sandwich", sandwich},
      {"stationary mass outside C_zeta", outside_mass},
      {"main total-variation bound", main_tv},
      {"renewal identity", renewal},
      {"quasi-equilibrium window, Ricker A=20", window},
      {"Ricker asymptotics", asymptotics},
      {"Lyapunov solver", lyapunov},
      {"mpp Gaussian shape", mpp_shape},
      {"simulation concordance and replay", simulation},
      {"expression parser", parser},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
  if (failed != expected_failures) {
    std::printf("failing set differs from the expected one\n");
    return 1;
  }
  return 0;
}
