#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quasieq/ctmc/hitting.hpp"
#include "quasieq/ctmc/truncation.hpp"

namespace quasieq::bounds {

/// Quantities entering the total-variation bounds for one truncation.
struct BoundInputs {
  double p = 0.0;            // inf_k p_k
  double p_s = 0.0;
  double T_s = 0.0;
  double T_zeta_plus = 0.0;
  double zeta = 0.0;
  double M = 1.0;            // mu(T) <= M T_s for the return laws considered
  double r_zeta = 0.0;
  double q_s = 0.0;          // total jump rate at s
  double D = 1.0;            // constant of the long-time bounds, user supplied

  double B_zeta() const { return T_zeta_plus * q_s / p; }
};

/// Throws kInvalidInput unless 0 < p <= p_s <= 1, T_s > 0, T_zeta_plus > 0,
/// zeta > 0, 0 <= r_zeta <= 1, q_s > 0 and D > 0.
void validate(const BoundInputs& in);

/// Bound on the stationary mass outside C_zeta: (1 - p_s)(zeta + M/p).
double epsilon_bound(const BoundInputs& in);

/// 2 (1 - p_s) (T_zeta_plus/(p T_s) + zeta + M/p). Throws kPrecondition
/// when M < 1.
double tv_bound_main(const BoundInputs& in);

/// (1 - r)(2t/T_s + zeta + 1/p) + D B sqrt(T_zeta_plus/(p t)) + (2/e)^{p t/(16 T_zeta_plus)}.
/// Throws kBoundInapplicable when t < 16 T_zeta_plus/p or epsilon(zeta, 1) > 1/2.
double eta_bound(const BoundInputs& in, double t);

/// (1 - r~)(t/T~_s) + D T~+ q_s sqrt(T~+/t) + (2/e)^{t/(16 T~+)} for the
/// accelerated return process. Throws kBoundInapplicable when t < 16 T~+.
double tilde_bound(double T_tilde_plus, double T_tilde_s, double r_tilde, double q_s, double D,
                   double t);

/// zeta q_zeta T_s (1 - p_s).
double crude_r_bound(double zeta, double q_zeta, double T_s, double p_s);

/// Informal range B^2 T_zeta_plus/p << t << T_s/(1 - r_zeta); t_high is
/// infinite when r_zeta = 1.
struct Window {
  double t_low = 0.0;
  double t_high = 0.0;
  bool empty() const { return !(t_low < t_high); }
};
Window informal_window(const BoundInputs& in);

BoundInputs make_inputs(const ctmc::HittingStats& stats, const ctmc::TruncationPlan& plan,
                        double M, double D);

struct TimePoint {
  double t = 0.0;
  std::optional<double> eta;
  std::optional<double> tilde;
  std::string eta_note;    // why eta is absent
  std::string tilde_note;  // why tilde is absent
};

struct BoundReport {
  BoundInputs inputs;
  ctmc::TruncationPlan plan;
  double epsilon = 0.0;
  double tv_bound = 0.0;
  double crude_r = 0.0;
  Window window;
  // Accelerated return process on the members of the plan.
  double T_tilde_plus = 0.0;
  double T_tilde_s = 0.0;
  double r_tilde = 0.0;
  std::vector<TimePoint> times;
};

BoundReport build_report(const ctmc::HittingStats& stats, const ctmc::TruncationPlan& plan,
                         double M, double D, const std::vector<double>& t_grid);

/// 32 log-spaced points spanning [1e-4, 10].
std::vector<double> default_zeta_grid();

struct ZetaSearch {
  double zeta = 0.0;
  BoundReport report;
  std::vector<std::pair<double, double>> evaluated;  // (zeta, tv_bound)
};

/// Grid search for the zeta minimizing tv_bound_main; ties go to the
/// smaller zeta.
ZetaSearch optimize_zeta(const ctmc::HittingStats& stats, double M,
                         const std::vector<double>& t_grid, double D = 1.0,
                         const std::vector<double>& zeta_grid = default_zeta_grid());

nlohmann::json to_json(const BoundReport& report);
std::string csv_header();
/// One row per time point, or a single row with empty time columns.
std::vector<std::string> csv_rows(const BoundReport& report);

}  // namespace quasieq::bounds
