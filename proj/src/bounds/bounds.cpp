#include "quasieq/bounds/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "quasieq/error.hpp"

namespace quasieq::bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// (2/e)^x, written as an exponential so that huge x underflows cleanly.
double two_over_e_pow(double x) { return std::exp(x * (std::log(2.0) - 1.0)); }

}  // namespace

void validate(const BoundInputs& in) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::kInvalidInput, "bound inputs: " + what);
  };
  require(in.p > 0.0, "p > 0 (got " + num(in.p) + ")");
  require(in.p <= in.p_s * (1 + 1e-12), "p <= p_s");
  require(in.p_s <= 1.0, "p_s <= 1");
  require(in.T_s > 0.0 && std::isfinite(in.T_s), "T_s > 0");
  require(in.T_zeta_plus > 0.0 && std::isfinite(in.T_zeta_plus), "T_zeta_plus > 0");
  require(in.zeta > 0.0, "zeta > 0");
  require(in.r_zeta >= 0.0 && in.r_zeta <= 1.0, "0 <= r_zeta <= 1");
  require(in.q_s > 0.0, "q_s > 0");
  require(in.D > 0.0, "D > 0");
  require(std::isfinite(in.M), "M finite");
}

double epsilon_bound(const BoundInputs& in) {
  validate(in);
  return (1.0 - in.p_s) * (in.zeta + in.M / in.p);
}

double tv_bound_main(const BoundInputs& in) {
  validate(in);
  if (in.M < 1.0) {
    fail(ErrorKind::kPrecondition, "M = " + num(in.M) + " < 1, so delta_s is not admissible");
  }
  return 2.0 * (1.0 - in.p_s) * (in.T_zeta_plus / (in.p * in.T_s) + in.zeta + in.M / in.p);
}

double eta_bound(const BoundInputs& in, double t) {
  validate(in);
  const double t_min = 16.0 * in.T_zeta_plus / in.p;
  if (!(t >= t_min)) {
    fail(ErrorKind::kBoundInapplicable,
         "t >= 16 T_zeta_plus / p fails: t = " + num(t) + " < " + num(t_min));
  }
  BoundInputs unit = in;
  unit.M = 1.0;
  const double eps = epsilon_bound(unit);
  if (eps > 0.5) {
    fail(ErrorKind::kBoundInapplicable, "epsilon(zeta, 1) <= 1/2 fails: epsilon = " + num(eps));
  }
  return (1.0 - in.r_zeta) * (2.0 * t / in.T_s + in.zeta + 1.0 / in.p) +
         in.D * in.B_zeta() * std::sqrt(in.T_zeta_plus / (in.p * t)) +
         two_over_e_pow(in.p * t / (16.0 * in.T_zeta_plus));
}

double tilde_bound(double T_tilde_plus, double T_tilde_s, double r_tilde, double q_s, double D,
                   double t) {
  if (!(T_tilde_plus >= 0.0) || !(T_tilde_s > 0.0) || !(r_tilde >= 0.0 && r_tilde <= 1.0) ||
      !(q_s > 0.0) || !(D > 0.0)) {
    fail(ErrorKind::kInvalidInput, "accelerated bound inputs out of range");
  }
  if (!(t >= 16.0 * T_tilde_plus) || !(t > 0.0)) {
    fail(ErrorKind::kBoundInapplicable, "t >= 16 T~+ fails: t = " + num(t) + " < " +
                                            num(16.0 * T_tilde_plus));
  }
  double value = (1.0 - r_tilde) * t / T_tilde_s;
  if (T_tilde_plus > 0.0) {
    value += D * T_tilde_plus * q_s * std::sqrt(T_tilde_plus / t) +
             two_over_e_pow(t / (16.0 * T_tilde_plus));
  }
  return value;
}

double crude_r_bound(double zeta, double q_zeta, double T_s, double p_s) {
  return zeta * q_zeta * T_s * (1.0 - p_s);
}

Window informal_window(const BoundInputs& in) {
  validate(in);
  const double B = in.B_zeta();
  const double one_minus_r = 1.0 - in.r_zeta;
  return {B * B * in.T_zeta_plus / in.p, one_minus_r > 0.0 ? in.T_s / one_minus_r : kInf};
}

BoundInputs make_inputs(const ctmc::HittingStats& stats, const ctmc::TruncationPlan& plan,
                        double M, double D) {
  BoundInputs in;
  in.p = stats.p_min;
  in.p_s = stats.p_s;
  in.T_s = stats.T_s;
  in.T_zeta_plus = plan.T_zeta_plus;
  in.zeta = plan.zeta;
  in.M = M;
  in.r_zeta = plan.r_zeta;
  in.q_s = stats.q_s;
  in.D = D;
  return in;
}

BoundReport build_report(const ctmc::HittingStats& stats, const ctmc::TruncationPlan& plan,
                         double M, double D, const std::vector<double>& t_grid) {
  BoundReport r;
  r.inputs = make_inputs(stats, plan, M, D);
  r.plan = plan;
  r.epsilon = epsilon_bound(r.inputs);
  r.tv_bound = tv_bound_main(r.inputs);
  r.crude_r = crude_r_bound(plan.zeta, plan.q_zeta, stats.T_s, stats.p_s);
  r.window = informal_window(r.inputs);

  const auto acc = ctmc::accelerated_stats(*stats.generator, plan.members, stats.s);
  r.T_tilde_plus = acc.T_plus;
  r.T_tilde_s = acc.T_s;
  r.r_tilde = acc.r;

  for (double t : t_grid) {
    TimePoint tp;
    tp.t = t;
    try {
      tp.eta = eta_bound(r.inputs, t);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kBoundInapplicable) throw;
      tp.eta_note = e.what();
    }
    try {
      tp.tilde = tilde_bound(acc.T_plus, acc.T_s, acc.r, stats.q_s, D, t);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kBoundInapplicable) throw;
      tp.tilde_note = e.what();
    }
    r.times.push_back(std::move(tp));
  }
  return r;
}

std::vector<double> default_zeta_grid() {
  constexpr int kPoints = 32;
  std::vector<double> grid(kPoints);
  const double lo = std::log(1e-4);
  const double hi = std::log(10.0);
  for (int i = 0; i < kPoints; ++i) grid[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
  return grid;
}

ZetaSearch optimize_zeta(const ctmc::HittingStats& stats, double M,
                         const std::vector<double>& t_grid, double D,
                         const std::vector<double>& zeta_grid) {
  if (zeta_grid.empty()) fail(ErrorKind::kInvalidInput, "empty zeta grid");
  ZetaSearch out;
  double best = kInf;
  ctmc::TruncationPlan best_plan;
  for (double zeta : zeta_grid) {
    const ctmc::TruncationPlan plan = ctmc::select_truncation(stats, zeta);
    const double tv = tv_bound_main(make_inputs(stats, plan, M, D));
    out.evaluated.emplace_back(zeta, tv);
    if (tv < best) {
      best = tv;
      best_plan = plan;
      out.zeta = zeta;
    }
  }
  out.report = build_report(stats, best_plan, M, D, t_grid);
  return out;
}

nlohmann::json to_json(const BoundReport& r) {
  using nlohmann::json;
  json members = json::array();
  for (auto k : r.plan.members) members.push_back(k.id);
  json times = json::array();
  for (const auto& tp : r.times) {
    json row{{"t", tp.t}};
    row["eta"] = tp.eta ? json(*tp.eta) : json(nullptr);
    row["tilde_bound"] = tp.tilde ? json(*tp.tilde) : json(nullptr);
    if (!tp.eta_note.empty()) row["eta_note"] = tp.eta_note;
    if (!tp.tilde_note.empty()) row["tilde_note"] = tp.tilde_note;
    times.push_back(std::move(row));
  }
  const auto& in = r.inputs;
  return json{
      {"inputs",
       {{"p", in.p},
        {"p_s", in.p_s},
        {"T_s", in.T_s},
        {"T_zeta_plus", in.T_zeta_plus},
        {"zeta", in.zeta},
        {"M", in.M},
        {"r_zeta", in.r_zeta},
        {"q_s", in.q_s},
        {"D", in.D},
        {"B_zeta", in.B_zeta()}}},
      {"plan",
       {{"members", members},
        {"q_zeta", r.plan.q_zeta},
        {"residual", r.plan.residual},
        {"condition_met", r.plan.condition_met}}},
      {"epsilon", r.epsilon},
      {"tv_bound", r.tv_bound},
      {"crude_r", r.crude_r},
      {"window", {{"t_low", r.window.t_low},
                  {"t_high", std::isfinite(r.window.t_high) ? json(r.window.t_high) : json("inf")}}},
      {"accelerated",
       {{"T_tilde_plus", r.T_tilde_plus}, {"T_tilde_s", r.T_tilde_s}, {"r_tilde", r.r_tilde}}},
      {"times", times},
  };
}

std::string csv_header() {
  return "zeta,M,D,p,p_s,T_s,T_zeta_plus,r_zeta,q_s,q_zeta,members,B_zeta,epsilon,tv_bound,"
         "crude_r,t_low,t_high,T_tilde_plus,T_tilde_s,r_tilde,t,eta,tilde_bound";
}

std::vector<std::string> csv_rows(const BoundReport& r) {
  const auto& in = r.inputs;
  std::ostringstream base;
  base << num(in.zeta) << ',' << num(in.M) << ',' << num(in.D) << ',' << num(in.p) << ','
       << num(in.p_s) << ',' << num(in.T_s) << ',' << num(in.T_zeta_plus) << ','
       << num(in.r_zeta) << ',' << num(in.q_s) << ',' << num(r.plan.q_zeta) << ','
       << r.plan.members.size() << ',' << num(in.B_zeta()) << ',' << num(r.epsilon) << ','
       << num(r.tv_bound) << ',' << num(r.crude_r) << ',' << num(r.window.t_low) << ','
       << num(r.window.t_high) << ',' << num(r.T_tilde_plus) << ',' << num(r.T_tilde_s) << ','
       << num(r.r_tilde) << ',';
  std::vector<std::string> rows;
  if (r.times.empty()) {
    rows.push_back(base.str() + ",,");
    return rows;
  }
  for (const auto& tp : r.times) {
    rows.push_back(base.str() + num(tp.t) + ',' + (tp.eta ? num(*tp.eta) : "") + ',' +
                   (tp.tilde ? num(*tp.tilde) : ""));
  }
  return rows;
}

}  // namespace quasieq::bounds
