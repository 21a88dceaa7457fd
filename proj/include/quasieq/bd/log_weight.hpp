#pragma once

#include <cmath>
#include <limits>

namespace quasieq::bd {

/// Nonnegative number stored as its natural logarithm, so that products of
/// thousands of rates neither overflow nor underflow.
struct LogWeight {
  double log = -std::numeric_limits<double>::infinity();
  bool zero = true;

  static LogWeight one() { return {0.0, false}; }
  static LogWeight from_log(double l) {
    if (l == -std::numeric_limits<double>::infinity()) return {};
    return {l, false};
  }
  /// v must be >= 0.
  static LogWeight from(double v) { return v == 0.0 ? LogWeight{} : LogWeight{std::log(v), false}; }

  double value() const { return zero ? 0.0 : std::exp(log); }

  friend LogWeight operator*(LogWeight a, LogWeight b) {
    if (a.zero || b.zero) return {};
    return {a.log + b.log, false};
  }
  /// b must be nonzero.
  friend LogWeight operator/(LogWeight a, LogWeight b) {
    if (a.zero) return {};
    return {a.log - b.log, false};
  }
  friend LogWeight operator+(LogWeight a, LogWeight b) {
    if (a.zero) return b;
    if (b.zero) return a;
    const double hi = std::max(a.log, b.log);
    const double lo = std::min(a.log, b.log);
    return {hi + std::log1p(std::exp(lo - hi)), false};
  }
  LogWeight& operator+=(LogWeight o) { return *this = *this + o; }
  LogWeight& operator*=(LogWeight o) { return *this = *this * o; }

  LogWeight inverse() const { return {-log, false}; }

  /// Ratio a/b as an ordinary double; b must be nonzero.
  friend double ratio(LogWeight a, LogWeight b) { return a.zero ? 0.0 : std::exp(a.log - b.log); }
};

}  // namespace quasieq::bd
