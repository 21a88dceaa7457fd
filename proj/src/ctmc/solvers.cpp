#include "quasieq/ctmc/solvers.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "killed_system.hpp"
#include "quasieq/error.hpp"

namespace quasieq::ctmc {

namespace {

void require_irreducible(const SparseGenerator& q) {
  const std::size_t n = q.size();
  const auto forward = reachable_from(q, StateIndex{1});
  for (std::size_t i = 0; i < n; ++i) {
    if (!forward[i]) {
      fail(ErrorKind::kIrreducibility,
           "generator is reducible: state " + std::to_string(i + 1) +
               " is unreachable from state 1");
    }
  }
  std::vector<std::vector<std::size_t>> incoming(n);
  for (const Transition& t : q.transitions()) {
    if (!t.to.is_cemetery()) incoming[t.to.pos()].push_back(t.from.pos());
  }
  std::vector<bool> backward(n, false);
  std::deque<std::size_t> queue{0};
  backward[0] = true;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (std::size_t j : incoming[k]) {
      if (!backward[j]) {
        backward[j] = true;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!backward[i]) {
      fail(ErrorKind::kIrreducibility,
           "generator is reducible: state 1 is unreachable from state " +
               std::to_string(i + 1));
    }
  }
}

// Poisson(lambda) weights on [left, right] whose neglected tails sum to at
// most `tail` in total.
struct PoissonWindow {
  std::size_t left = 0;
  std::vector<double> weights;
};

PoissonWindow poisson_window(double lambda, double tail) {
  const double sd = std::sqrt(lambda);
  const auto mode = static_cast<std::size_t>(std::floor(lambda));
  const auto span = static_cast<std::size_t>(std::ceil(12.0 * sd + 40.0));
  const std::size_t lo = mode > span ? mode - span : 0;
  const std::size_t hi = mode + span;
  std::vector<double> w(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) {
    const double kd = static_cast<double>(k);
    w[k - lo] = lambda > 0.0
                    ? std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0))
                    : (k == 0 ? 1.0 : 0.0);
  }
  std::size_t a = 0;
  double cut = 0.0;
  while (a + 1 < w.size() && cut + w[a] <= 0.5 * tail) cut += w[a++];
  std::size_t b = w.size();
  cut = 0.0;
  while (b > a + 1 && cut + w[b - 1] <= 0.5 * tail) cut += w[--b];
  PoissonWindow out;
  out.left = lo + a;
  out.weights.assign(w.begin() + static_cast<std::ptrdiff_t>(a),
                     w.begin() + static_cast<std::ptrdiff_t>(b));
  return out;
}

}  // namespace

double balance_residual(const SparseGenerator& q, const ProbabilityVector& pi) {
  std::vector<double> flow(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const StateIndex k = StateIndex::from_pos(i);
    const double mass = pi[k];
    flow[i] -= mass * q.total_rate(k);
    for (const Edge& e : q.row(k)) {
      if (!e.to.is_cemetery()) flow[e.to.pos()] += mass * e.rate;
    }
  }
  double worst = 0.0;
  for (double f : flow) worst = std::max(worst, std::abs(f));
  return worst;
}

ProbabilityVector stationary_distribution(const SparseGenerator& q) {
  const std::size_t n = q.size();
  if (n == 0) fail(ErrorKind::kInvalidInput, "stationary law of an empty chain");
  if (q.has_cemetery_exits()) {
    fail(ErrorKind::kInvalidInput,
         "stationary law requested for a generator with cemetery exits");
  }
  if (n == 1) return ProbabilityVector({1.0});
  require_irreducible(q);

  // With a reference state r, pi restricted to the other states is
  // pi_r q_{r,.} (-Q_FF)^{-1}, a transposed killed solve with a nonnegative
  // right-hand side. A second pass re-anchors at the heaviest state so that
  // no component overflows when masses span many orders of magnitude.
  auto solve_from = [&](std::size_t r) {
    std::vector<bool> stop(n, false);
    stop[r] = true;
    const detail::KilledSystem sys(q, stop, ErrorKind::kIrreducibility, "stationary_distribution");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_count()));
    for (const Edge& e : q.row(StateIndex::from_pos(r))) {
      b(sys.index_of(e.to.pos())) = e.rate;
    }
    const Eigen::VectorXd x = sys.solve_transposed(b);
    std::vector<double> pi(n);
    pi[r] = 1.0;
    for (std::size_t k = 0; k < sys.free_count(); ++k) {
      pi[sys.free_positions()[k]] = x(static_cast<Eigen::Index>(k));
    }
    return pi;
  };
  std::vector<double> pi = solve_from(0);
  const auto heaviest =
      static_cast<std::size_t>(std::max_element(pi.begin(), pi.end()) - pi.begin());
  if (heaviest != 0) pi = solve_from(heaviest);

  ProbabilityVector out = ProbabilityVector(std::move(pi)).normalized();
  const double residual = balance_residual(q, out);
  if (residual > 1e-10 * std::max(1.0, q.max_total_rate())) {
    fail(ErrorKind::kNumericalFailure,
         "stationary balance residual " + std::to_string(residual) + " too large");
  }
  return out;
}

ProbabilityVector transient_distribution(const SparseGenerator& q,
                                         const ProbabilityVector& init, double t) {
  const std::size_t n = q.size();
  if (!(t >= 0.0) || !std::isfinite(t)) {
    fail(ErrorKind::kInvalidInput, "transient time must be finite and nonnegative");
  }
  if (init.size() > n) {
    fail(ErrorKind::kInvalidInput, "initial law has more states than the chain");
  }
  const double rate = q.max_total_rate();
  if (t == 0.0 || rate == 0.0) {
    // Every law is stationary for the zero generator.
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < init.size(); ++i) v[i] = init.values()[i];
    return ProbabilityVector(std::move(v), init.cemetery());
  }

  // Uniformized jump matrix on C u {0}, cemetery stored last; kept transposed
  // so that a step is a column product.
  const auto dim = static_cast<Eigen::Index>(n + 1);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    const StateIndex k = StateIndex::from_pos(i);
    const auto col = static_cast<Eigen::Index>(i);
    const double stay = 1.0 - q.total_rate(k) / rate;
    if (stay > 0.0) triplets.emplace_back(col, col, stay);
    for (const Edge& e : q.row(k)) {
      const auto r = e.to.is_cemetery() ? dim - 1 : static_cast<Eigen::Index>(e.to.pos());
      triplets.emplace_back(r, col, e.rate / rate);
    }
  }
  triplets.emplace_back(dim - 1, dim - 1, 1.0);
  Eigen::SparseMatrix<double> step_t(dim, dim);
  step_t.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < init.size(); ++i) v(static_cast<Eigen::Index>(i)) = init.values()[i];
  v(dim - 1) = init.cemetery();

  const PoissonWindow window = poisson_window(rate * t, 1e-12);
  for (std::size_t k = 0; k < window.left; ++k) v = step_t * v;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  double used = 0.0;
  for (std::size_t j = 0; j < window.weights.size(); ++j) {
    if (j > 0) v = step_t * v;
    acc += window.weights[j] * v;
    used += window.weights[j];
  }
  acc /= used;

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, acc(static_cast<Eigen::Index>(i)));
  return ProbabilityVector(std::move(out), std::max(0.0, acc(dim - 1)));
}

}  // namespace quasieq::ctmc
