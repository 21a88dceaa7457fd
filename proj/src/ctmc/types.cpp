#include "quasieq/ctmc/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "quasieq/error.hpp"

namespace quasieq::ctmc {

namespace {

double clean_probability(double v, const char* what) {
  if (!std::isfinite(v) || v < -1e-12) {
    fail(ErrorKind::kInvalidDistribution,
         std::string(what) + ": entry " + std::to_string(v) +
             " is not a probability");
  }
  return std::max(v, 0.0);
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> over_c, double cemetery)
    : values_(std::move(over_c)),
      cemetery_(clean_probability(cemetery, "cemetery mass")) {
  for (double& v : values_) v = clean_probability(v, "probability vector");
}

ProbabilityVector ProbabilityVector::point_mass(std::size_t n, StateIndex s) {
  if (s.is_cemetery()) return ProbabilityVector(std::vector<double>(n, 0.0), 1.0);
  if (s.id > n) {
    fail(ErrorKind::kInvalidInput,
         "point mass at state " + std::to_string(s.id) + " outside C");
  }
  std::vector<double> v(n, 0.0);
  v[s.pos()] = 1.0;
  return ProbabilityVector(std::move(v));
}

ProbabilityVector ProbabilityVector::uniform(std::size_t n) {
  if (n == 0) fail(ErrorKind::kInvalidInput, "uniform law on an empty set");
  return ProbabilityVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double ProbabilityVector::operator[](StateIndex state) const {
  if (state.is_cemetery()) return cemetery_;
  return state.id <= values_.size() ? values_[state.pos()] : 0.0;
}

double ProbabilityVector::total() const {
  return std::accumulate(values_.begin(), values_.end(), cemetery_);
}

double ProbabilityVector::mass(std::span<const StateIndex> states) const {
  double m = 0.0;
  for (StateIndex k : states) m += (*this)[k];
  return m;
}

ProbabilityVector ProbabilityVector::normalized() const {
  const double z = total();
  if (!(z > 0.0)) fail(ErrorKind::kInvalidDistribution, "cannot normalize zero mass");
  std::vector<double> v(values_);
  for (double& x : v) x /= z;
  return ProbabilityVector(std::move(v), cemetery_ / z);
}

ProbabilityVector ProbabilityVector::conditioned_on(
    std::span<const StateIndex> states) const {
  std::vector<double> v(values_.size(), 0.0);
  double c = 0.0;
  for (StateIndex k : states) {
    if (k.is_cemetery()) {
      c = cemetery_;
    } else if (k.id <= v.size()) {
      v[k.pos()] = values_[k.pos()];
    }
  }
  return ProbabilityVector(std::move(v), c).normalized();
}

ReturnDistribution::ReturnDistribution(std::size_t n,
                                       const std::map<StateIndex, double>& weights)
    : weights_(n, 0.0) {
  for (const auto& [state, w] : weights) {
    if (state.is_cemetery() || state.id > n) {
      fail(ErrorKind::kInvalidDistribution,
           "return law places mass on state " + std::to_string(state.id) +
               " outside C = {1.." + std::to_string(n) + "}");
    }
    weights_[state.pos()] += w;
  }
  validate();
}

ReturnDistribution::ReturnDistribution(std::vector<double> weights_over_c)
    : weights_(std::move(weights_over_c)) {
  validate();
}

void ReturnDistribution::validate() const {
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      fail(ErrorKind::kInvalidDistribution, "return law has a negative weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    fail(ErrorKind::kInvalidDistribution,
         "return law weights sum to " + std::to_string(sum));
  }
}

ReturnDistribution ReturnDistribution::point_mass(std::size_t n, StateIndex s) {
  return ReturnDistribution(n, {{s, 1.0}});
}

ReturnDistribution ReturnDistribution::uniform(std::size_t n, StateIndex first,
                                               StateIndex last) {
  const std::size_t lo = std::max<std::size_t>(first.id, 1);
  const std::size_t hi = std::min(last.id, n);
  if (lo > hi) fail(ErrorKind::kInvalidDistribution, "empty uniform return range");
  std::vector<double> w(n, 0.0);
  const double each = 1.0 / static_cast<double>(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) w[k - 1] = each;
  // Exact sums are not guaranteed for every range length.
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= z;
  return ReturnDistribution(std::move(w));
}

double ReturnDistribution::operator[](StateIndex state) const {
  if (state.is_cemetery() || state.id > weights_.size()) return 0.0;
  return weights_[state.pos()];
}

std::vector<StateIndex> ReturnDistribution::support() const {
  std::vector<StateIndex> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) out.push_back(StateIndex::from_pos(i));
  }
  return out;
}

double ReturnDistribution::expectation(std::span<const double> f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size() && i < f.size(); ++i) {
    if (weights_[i] > 0.0) acc += weights_[i] * f[i];
  }
  return acc;
}

double total_variation(const ProbabilityVector& a, const ProbabilityVector& b) {
  const std::size_t n = std::max(a.size(), b.size());
  double l1 = std::abs(a.cemetery() - b.cemetery());
  for (std::size_t i = 0; i < n; ++i) {
    const StateIndex k = StateIndex::from_pos(i);
    l1 += std::abs(a[k] - b[k]);
  }
  return std::min(1.0, 0.5 * l1);
}

}  // namespace quasieq::ctmc
