#include "quasieq/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "analysis.hpp"
#include "quasieq/ctmc/csv.hpp"
#include "quasieq/ctmc/solvers.hpp"
#include "quasieq/ctmc/truncation.hpp"
#include "quasieq/error.hpp"
#include "quasieq/mpp/mpp.hpp"
#include "quasieq/simulate/simulate.hpp"

namespace quasieq::cli {

using namespace detail;
using ctmc::ProbabilityVector;
using ctmc::ReturnDistribution;
using ctmc::StateIndex;

namespace {

constexpr double kSoundTol = 1e-9;  // relative slack on soundness checks

std::string distribution_csv(const ProbabilityVector& pv) {
  std::ostringstream out;
  ctmc::write_distribution_csv(out, pv);
  return out.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string opt_cell(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

Json header(Command c) {
  return Json{{"tool", "quasieq"}, {"version", tool_version()}, {"command", to_string(c)}};
}

// k, p_k, T_k, T_sk from the birth-death closed forms.
std::string closed_form_table(const ChainModel& chain) {
  const auto& m = *chain.closed_form;
  const std::size_t s = chain.s.id;
  const auto p = m.p_all(s);
  const auto T = m.T_all(s);
  const auto occ = m.occupation_from_s(s);
  std::string out = "k,p_k,T_k,T_sk\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    out += join({std::to_string(k + 1), num(p[k]), num(T[k]), num(occ[k])}) + "\n";
  }
  return out;
}

struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

Check le(std::string name, double lhs, double rhs, double rel = kSoundTol) {
  return {std::move(name), lhs, rhs, lhs <= rhs * (1.0 + rel) + 1e-15};
}

Json checks_json(const std::vector<Check>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  }
  return out;
}

Json curve_json(const std::vector<CurvePoint>& points, double D) {
  Json out = Json::array();
  for (const auto& p : points) {
    Json row{{"t", p.t},
             {"tv_returned", p.tv_returned},
             {"tv_accelerated", p.tv_accelerated},
             {"eta", opt(p.eta)},
             {"tilde_bound", opt(p.tilde)},
             {"eta_D_required", opt(p.eta_D)},
             {"tilde_D_required", opt(p.tilde_D)}};
    if (p.eta) row["eta_covers"] = p.tv_returned <= *p.eta;
    if (p.tilde) row["tilde_covers"] = p.tv_accelerated <= *p.tilde;
    if (!p.eta_note.empty()) row["eta_note"] = p.eta_note;
    if (!p.tilde_note.empty()) row["tilde_note"] = p.tilde_note;
    out.push_back(row);
  }
  // Time-dependent bounds carry the unknown constant D; report the smallest
  // D that covers every computed point instead of a pass/fail.
  std::optional<double> need;
  for (const auto& p : points) {
    for (const auto& d : {p.eta_D, p.tilde_D}) {
      if (d) need = std::max(need.value_or(0.0), *d);
    }
  }
  return Json{{"points", out},
              {"D", D},
              {"D_required", opt(need)},
              {"covered_at_D", !need || *need <= D}};
}

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::string out =
      "t,tv_returned,tv_accelerated,eta,tilde_bound,eta_D_required,tilde_D_required,replicates,"
      "eta_note,tilde_note\n";
  for (const auto& p : points) {
    out += join({num(p.t), num(p.tv_returned), num(p.tv_accelerated), opt_cell(p.eta),
                 opt_cell(p.tilde), opt_cell(p.eta_D), opt_cell(p.tilde_D),
                 std::to_string(p.replicates), csv_safe(p.eta_note), csv_safe(p.tilde_note)}) +
           "\n";
  }
  return out;
}

std::unique_ptr<simulate::JumpModel> jump_model(const ChainModel& chain) {
  if (chain.birth) {
    return std::make_unique<simulate::BirthDeathJumpModel>(chain.birth, chain.death, chain.cap);
  }
  return std::make_unique<simulate::GeneratorJumpModel>(*chain.q);
}

struct MppRun {
  MppSetup setup;
  mpp::GaussianSummary summary;
  mpp::TruncatedProcess process;
  mpp::QuasiEquilibrium qe;
};

MppRun run_mpp(const Json& config, const Overrides& overrides, const Settings& settings,
               std::optional<double> N = std::nullopt) {
  MppSetup setup = build_mpp(config, overrides, N);
  auto summary = mpp::find_equilibrium(setup.model, setup.x0);
  auto process =
      mpp::build_truncated_process(setup.model, summary, setup.radius, setup.point_cap, settings.threads);
  auto qe = mpp::mpp_quasi_equilibrium(process, summary);
  return MppRun{std::move(setup), std::move(summary), std::move(process), std::move(qe)};
}

std::string points_csv(const mpp::TruncatedProcess& tp, const ProbabilityVector* law) {
  const auto d = tp.s_point.size();
  std::vector<std::string> head{"state"};
  for (Eigen::Index i = 0; i < d; ++i) head.push_back("x" + std::to_string(i + 1));
  if (law != nullptr) head.push_back("prob");
  std::string out = join(head) + "\n";
  for (std::size_t k = 0; k < tp.points.size(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1)};
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(std::to_string(tp.points[k](i)));
    if (law != nullptr) row.push_back(num(law->values()[k]));
    out += join(row) + "\n";
  }
  return out;
}

Json summary_json(const mpp::GaussianSummary& g) {
  Json eig = Json::array();
  for (Eigen::Index i = 0; i < g.eigenvalues.size(); ++i) {
    eig.push_back({g.eigenvalues(i).real(), g.eigenvalues(i).imag()});
  }
  return Json{{"c", vector_json(g.c)},
              {"A", matrix_json(g.A)},
              {"sigma2", matrix_json(g.sigma2)},
              {"Sigma", matrix_json(g.Sigma)},
              {"eigenvalues", eig},
              {"drift_residual", g.drift_residual},
              {"lyapunov_residual", g.lyapunov_residual},
              {"jacobian_check", g.jacobian_check},
              {"newton_iterations", g.newton_iterations}};
}

// ----------------------------------------------------------------- solve ---

CommandResult solve_mpp(const Json& config, const Overrides& overrides, const Settings& settings) {
  const Section solve(Section(config, "config").raw("solve"), "solve");
  solve.allow_only({"irreducibility_samples", "irreducibility_steps"});
  const MppRun run = run_mpp(config, overrides, settings);
  const auto samples = static_cast<std::size_t>(solve.integer("irreducibility_samples", 200));
  const auto steps = static_cast<std::size_t>(solve.integer("irreducibility_steps", 4));
  const auto irr =
      mpp::check_local_irreducibility(run.setup.model, run.process, samples, steps, settings.seed);

  Json report = header(Command::kSolve);
  report["model"] = Json{{"kind", "mpp"},
                         {"dimension", run.setup.model.dimension()},
                         {"N", run.setup.model.N()},
                         {"radius", run.setup.radius},
                         {"symbolic_jacobian", run.setup.model.symbolic_jacobian()}};
  report["equilibrium"] = summary_json(run.summary);
  report["comparison"] = Json::parse(mpp::to_json(run.qe.comparison));
  report["truncation"] = Json{{"states", run.process.points.size()},
                              {"redirected_edges", run.process.redirected_edges},
                              {"q_s", run.process.q_s},
                              {"balance_residual",
                               ctmc::balance_residual(run.process.generator, run.qe.pi)}};
  report["local_irreducibility"] = Json{{"samples", irr.samples},
                                        {"pairs_checked", irr.pairs_checked},
                                        {"failures", irr.failures},
                                        {"worst_steps", irr.worst_steps},
                                        {"ok", irr.ok()}};
  CommandResult out;
  out.files.push_back({"report.json", dump(report)});
  out.files.push_back({"gaussian.json", dump(Json::parse(mpp::to_json(run.qe.comparison)))});
  out.files.push_back({"pi_tilde.csv", points_csv(run.process, &run.qe.pi)});
  out.summary = "solve: " + std::to_string(run.process.points.size()) +
                " lattice states, TV to lattice Gaussian " + num(run.qe.comparison.tv_to_gaussian);
  return out;
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "solve") return Command::kSolve;
  if (name == "bounds") return Command::kBounds;
  if (name == "window") return Command::kWindow;
  if (name == "sweep") return Command::kSweep;
  if (name == "simulate") return Command::kSimulate;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::kSolve: return "solve";
    case Command::kBounds: return "bounds";
    case Command::kWindow: return "window";
    case Command::kSweep: return "sweep";
    case Command::kSimulate: return "simulate";
  }
  return "unknown";
}

CommandResult cmd_solve(const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir) {
  const Settings settings = read_settings(config, overrides);
  if (model_kind(config) == ModelKind::kMpp) return solve_mpp(config, overrides, settings);

  const Section solve(Section(config, "config").raw("solve"), "solve");
  solve.allow_only({"zeta"});
  const ChainModel chain = build_chain(config, overrides, base_dir);
  const auto mu = build_return(config, chain);
  const ChainContext ctx = analyze_chain(chain, mu, settings, {});
  const auto& q = *chain.q;
  const std::size_t n = q.size();

  const ctmc::TruncationPlan plan = solve.has("zeta")
                                        ? ctmc::select_truncation(ctx.stats, solve.number("zeta"))
                                        : ctx.search.report.plan;
  const auto pi_mu = returned_law(q, mu);
  const auto pi_s = returned_law(q, ReturnDistribution::point_mass(n, chain.s));
  const auto pi_tilde = accelerated_law(q, plan.members, chain.s);

  double flux = 0.0;
  for (std::size_t i = 0; i < n; ++i) flux += pi_s.values()[i] * q.exit_rate(StateIndex::from_pos(i));

  Json report = header(Command::kSolve);
  report["model"] = model_json(chain);
  report["hitting"] = hitting_json(ctx);
  report["truncation"] = Json{{"zeta", plan.zeta},
                              {"members", plan.members.size()},
                              {"first", plan.members.front().id},
                              {"last", plan.members.back().id},
                              {"T_zeta_plus", plan.T_zeta_plus},
                              {"r_zeta", plan.r_zeta},
                              {"condition_met", plan.condition_met}};
  report["laws"] = Json{
      {"balance_residual_mu", ctmc::balance_residual(ctmc::build_returned_generator(q, mu), pi_mu)},
      {"tv_mu_delta_s", ctmc::total_variation(pi_mu, pi_s)},
      {"tv_tilde_delta_s", ctmc::total_variation(pi_tilde, pi_s)},
      {"mass_outside_truncation_mu", mass_outside(pi_mu, plan)},
      {"renewal_flux_times_T_s", flux * ctx.stats.T_s},
      {"one_minus_p_s", ctx.one_minus_p_s}};
  report["cap_stability"] = cap_stability(ctx, config, overrides, base_dir);

  CommandResult out;
  out.files.push_back({"report.json", dump(report)});
  out.files.push_back({"pi_mu.csv", distribution_csv(pi_mu)});
  out.files.push_back({"pi_delta_s.csv", distribution_csv(pi_s)});
  out.files.push_back({"pi_tilde.csv", distribution_csv(pi_tilde)});
  if (chain.closed_form) out.files.push_back({"bd_table.csv", closed_form_table(chain)});
  out.summary = "solve: " + std::to_string(n) + " states, TV(pi_mu, pi_delta_s) = " +
                num(ctmc::total_variation(pi_mu, pi_s));
  return out;
}

CommandResult cmd_bounds(const Json& config, const Overrides& overrides,
                         const std::filesystem::path& base_dir) {
  const Settings settings = read_settings(config, overrides);
  const ChainModel chain = build_chain(config, overrides, base_dir);
  const auto mu = build_return(config, chain);
  const ChainContext ctx = analyze_chain(chain, mu, settings, settings.t_grid);
  const auto& rep = ctx.search.report;
  const auto& st = ctx.stats;
  const auto& q = *chain.q;
  const std::size_t n = q.size();

  const auto pi_mu = returned_law(q, mu);
  const auto pi_s = returned_law(q, ReturnDistribution::point_mass(n, chain.s));
  const double tv = ctmc::total_variation(pi_mu, pi_s);

  const auto times = ctmc::returned_hitting_times(q, mu, chain.s);
  const double e_mu = mu.expectation(times);
  const double mu_T = st.mean_T(mu);
  double flux = 0.0;
  for (std::size_t i = 0; i < n; ++i) flux += pi_s.values()[i] * q.exit_rate(StateIndex::from_pos(i));
  const double crude = bounds::crude_r_bound(rep.plan.zeta, rep.plan.q_zeta, st.T_s, st.p_s);

  std::vector<Check> checks;
  checks.push_back(le("mass_outside_truncation <= epsilon(zeta, M)", mass_outside(pi_mu, rep.plan),
                      rep.epsilon));
  checks.push_back(le("tv(pi_mu, pi_delta_s) <= main tv bound", tv, rep.tv_bound));
  checks.push_back(le("mu(T) <= E^mu tau_s", mu_T, e_mu, 1e-8));
  checks.push_back(le("E^mu tau_s <= mu(T) / p", e_mu, mu_T / st.p_min, 1e-8));
  checks.push_back({"|T_s sum_k pi_delta_s(k) q_k0 - (1 - p_s)| <= 1e-8 (1 - p_s)",
                    std::abs(st.T_s * flux - ctx.one_minus_p_s), 1e-8 * ctx.one_minus_p_s,
                    std::abs(st.T_s * flux - ctx.one_minus_p_s) <= 1e-8 * ctx.one_minus_p_s});
  checks.push_back(le("1 - r_zeta <= crude bound + (1 - p_s)", 1.0 - rep.plan.r_zeta,
                      crude + ctx.one_minus_p_s));
  bool hard_ok = true;
  for (const auto& c : checks) hard_ok = hard_ok && c.holds;

  const auto curve = exact_curve(ctx, settings.t_grid, settings.D);

  Json search = Json::array();
  std::string zeta_csv = "zeta,tv_bound\n";
  for (const auto& [z, b] : ctx.search.evaluated) {
    search.push_back({z, b});
    zeta_csv += join({num(z), num(b)}) + "\n";
  }

  Json report = header(Command::kBounds);
  report["model"] = model_json(chain);
  report["hitting"] = hitting_json(ctx);
  report["bounds"] = bounds::to_json(rep);
  report["zeta_search"] = search;
  report["exact"] = Json{{"tv_mu_delta_s", tv},
                         {"mass_outside_truncation", mass_outside(pi_mu, rep.plan)},
                         {"E_mu_tau_s", e_mu},
                         {"renewal_flux_times_T_s", flux * st.T_s}};
  report["checks"] = checks_json(checks);
  report["hard_checks_pass"] = hard_ok;
  report["time_dependent"] = curve_json(curve, settings.D);
  report["T_zeta_plus_vs_log_A"] =
      chain.density ? Json{{"T_zeta_plus", rep.plan.T_zeta_plus}, {"log_A", std::log(chain.density->A)}}
                    : Json(nullptr);
  report["cap_stability"] = cap_stability(ctx, config, overrides, base_dir);

  std::string bounds_csv = bounds::csv_header() + "\n";
  for (const auto& row : bounds::csv_rows(rep)) bounds_csv += row + "\n";

  CommandResult out;
  out.files.push_back({"report.json", dump(report)});
  out.files.push_back({"bounds.csv", bounds_csv});
  out.files.push_back({"zeta_search.csv", zeta_csv});
  out.files.push_back({"time_checks.csv", curve_csv(curve)});
  if (chain.closed_form) out.files.push_back({"bd_table.csv", closed_form_table(chain)});
  out.ok = hard_ok;
  out.summary = "bounds: zeta " + num(rep.plan.zeta) + ", tv bound " + num(rep.tv_bound) +
                ", exact tv " + num(tv) + (hard_ok ? ", all inequalities hold" : ", VIOLATION");
  return out;
}

CommandResult cmd_window(const Json& config, const Overrides& overrides,
                         const std::filesystem::path& base_dir) {
  const Settings settings = read_settings(config, overrides);
  const Section win(Section(config, "config").raw("window"), "window");
  win.allow_only({"t_grid", "method", "replicates"});
  const std::string method = win.string("method", "exact");
  if (method != "exact" && method != "simulate") {
    fail(ErrorKind::kConfig, "window.method must be exact or simulate");
  }
  const auto replicates = static_cast<std::size_t>(win.integer("replicates", 10000));

  std::optional<std::vector<double>> grid;
  if (overrides.t_grid) {
    grid = *overrides.t_grid;
  } else if (win.has("t_grid")) {
    grid = grid_from_json(*win.raw("t_grid"), win.where("t_grid"));
  }
  if (grid) {
    for (double t : *grid) {
      if (!(t > 0.0)) fail(ErrorKind::kConfig, "time grid values must be positive");
    }
  }

  if (model_kind(config) == ModelKind::kMpp) {
    if (method != "exact") fail(ErrorKind::kConfig, "mpp windows are exact only");
    const MppRun run = run_mpp(config, overrides, settings);
    const auto& q = run.process.generator;
    std::vector<double> ts = grid ? *grid : parse_grid("log:0.01:100:25");
    std::sort(ts.begin(), ts.end());
    const auto laws = transient_path(q, ProbabilityVector::point_mass(q.size(), run.process.s), ts);
    std::vector<CurvePoint> points(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      points[i].t = ts[i];
      points[i].tv_returned = std::nan("");
      points[i].tv_accelerated = ctmc::total_variation(laws[i], run.qe.pi);
      points[i].eta_note = points[i].tilde_note = "not evaluated for mpp models";
    }
    CommandResult out;
    out.files.push_back({"window.csv", curve_csv(points)});
    out.summary = "window: " + std::to_string(points.size()) + " times";
    return out;
  }

  const ChainModel chain = build_chain(config, overrides, base_dir);
  const auto mu = build_return(config, chain);
  const ChainContext ctx = analyze_chain(chain, mu, settings, {});
  const double Tp = ctx.search.report.plan.T_zeta_plus;
  const std::vector<double> ts_raw =
      grid ? *grid : parse_grid("log:" + num(Tp / 10) + ":" + num(1000 * Tp) + ":25");

  std::vector<CurvePoint> points;
  if (method == "exact") {
    points = exact_curve(ctx, ts_raw, settings.D);
  } else {
    std::vector<double> ts = ts_raw;
    std::sort(ts.begin(), ts.end());
    const auto& q = *chain.q;
    const std::size_t n = q.size();
    const auto pi_s = returned_law(q, ReturnDistribution::point_mass(n, chain.s));
    const auto pi_tilde = accelerated_law(q, ctx.search.report.plan.members, chain.s);
    const auto model = jump_model(chain);
    for (double t : ts) {
      const auto law = simulate::empirical_law_at(*model, chain.s, t, replicates, settings.seed,
                                                  simulate::Absorbing{}, {settings.threads});
      CurvePoint p;
      p.t = t;
      p.tv_returned = ctmc::total_variation(law.law, pi_s);
      p.tv_accelerated = ctmc::total_variation(law.law, pi_tilde);
      p.replicates = law.replicates;
      points.push_back(p);
    }
    attach_bounds(ctx, settings.D, points);
  }
  CommandResult out;
  out.files.push_back({"window.csv", curve_csv(points)});
  Json meta = header(Command::kWindow);
  meta["method"] = method;
  meta["model"] = model_json(chain);
  meta["hitting"] = hitting_json(ctx);
  meta["bounds"] = bounds::to_json(ctx.search.report);
  meta["time_dependent"] = curve_json(points, settings.D);
  out.files.push_back({"report.json", dump(meta)});
  out.summary = "window: " + std::to_string(points.size()) + " times, " + method;
  return out;
}

CommandResult cmd_simulate(const Json& config, const Overrides& overrides,
                           const std::filesystem::path& base_dir) {
  const Settings settings = read_settings(config, overrides);
  const Section sim(Section(config, "config").raw("simulate"), "simulate");
  sim.allow_only({"mode", "init", "t_max", "trajectories", "replicates", "hitting_states",
                  "law_times", "occupation_replicates", "zeta"});
  const simulate::ParallelOptions par{settings.threads};
  const auto n_paths = static_cast<std::size_t>(sim.integer("trajectories", 1));
  const auto replicates = static_cast<std::size_t>(sim.integer("replicates", 10000));
  const auto occ_reps = static_cast<std::size_t>(sim.integer("occupation_replicates", 200));

  CommandResult out;
  Json est = header(Command::kSimulate);
  est["seed"] = settings.seed;

  auto write_paths = [&](const simulate::JumpModel& model, StateIndex init, double t_max,
                         const simulate::Mode& mode) {
    for (std::size_t i = 0; i < n_paths; ++i) {
      const auto path = simulate::simulate(model, init, t_max, settings.seed, mode, i);
      std::ostringstream csv;
      simulate::write_trajectory_csv(csv, path);
      out.files.push_back({"trajectory_" + std::to_string(i) + ".csv", csv.str()});
    }
  };

  if (model_kind(config) == ModelKind::kMpp) {
    const MppRun run = run_mpp(config, overrides, settings);
    const auto& q = run.process.generator;
    const simulate::GeneratorJumpModel model(q);
    const double t_max = sim.number("t_max", 10.0);
    write_paths(model, run.process.s, t_max, simulate::Absorbing{});
    const auto occ = simulate::occupation_fractions(model, run.process.s, t_max, occ_reps,
                                                    settings.seed, simulate::Absorbing{}, par);
    est["mode"] = "accelerated (truncated lattice process)";
    est["occupation"] = Json{{"replicates", occ.replicates},
                             {"t_max", t_max},
                             {"tv_to_quasi_equilibrium", ctmc::total_variation(occ.law, run.qe.pi)}};
    out.files.push_back({"points.csv", points_csv(run.process, nullptr)});
    out.files.push_back({"estimates.json", dump(est)});
    out.summary = "simulate: " + std::to_string(n_paths) + " trajectories";
    return out;
  }

  const ChainModel chain = build_chain(config, overrides, base_dir);
  const auto mu = build_return(config, chain);
  const ChainContext ctx = analyze_chain(chain, mu, settings, {});
  const auto& q = *chain.q;
  const std::size_t n = q.size();
  const auto model = jump_model(chain);

  const StateIndex init =
      sim.has("init") ? StateIndex{static_cast<std::size_t>(sim.integer("init"))} : chain.s;
  if (init.id < 1 || init.id > n) fail(ErrorKind::kConfig, "simulate.init is outside the chain");
  const double t_max = sim.number("t_max", 10.0 * ctx.stats.T_s);
  const std::string mode_name = sim.string("mode", "absorbing");
  const auto plan = sim.has("zeta") ? ctmc::select_truncation(ctx.stats, sim.number("zeta"))
                                    : ctx.search.report.plan;

  simulate::Mode mode = simulate::Absorbing{};
  ctmc::SparseGenerator target_q;   // chain whose exact law the estimates follow
  std::optional<ctmc::RestrictedGenerator> restricted;
  if (mode_name == "absorbing") {
    target_q = q;
  } else if (mode_name == "returned") {
    mode = simulate::Returned{mu};
    target_q = ctmc::build_returned_generator(q, mu);
  } else if (mode_name == "accelerated") {
    mode = simulate::Accelerated{plan.members, chain.s};
    restricted = ctmc::accelerated_return_generator(q, plan.members, chain.s);
  } else {
    fail(ErrorKind::kConfig, "simulate.mode must be absorbing, returned or accelerated");
  }
  est["mode"] = mode_name;
  est["init"] = init.id;
  est["t_max"] = t_max;

  write_paths(*model, init, t_max, mode);

  // Hitting estimates always use the absorbing chain.
  std::vector<std::int64_t> ks{static_cast<std::int64_t>(chain.s.id)};
  if (sim.has("hitting_states")) ks = sim.integers("hitting_states");
  Json hits = Json::array();
  for (const auto k64 : ks) {
    if (k64 < 1 || static_cast<std::size_t>(k64) > n) {
      fail(ErrorKind::kConfig, "simulate.hitting_states has a state outside the chain");
    }
    const StateIndex k{static_cast<std::size_t>(k64)};
    const auto h = simulate::estimate_hitting(*model, chain.s, k, replicates,
                                              settings.seed + k.id, par);
    const double p_exact = k == chain.s ? ctx.stats.p_s : ctx.stats.p_at(k);
    const double T_exact = ctx.stats.T_at(k);
    auto z = [](const simulate::EstimatorResult& r, double exact) {
      return r.standard_error > 0 ? (r.estimate - exact) / r.standard_error
                                  : (r.estimate == exact ? 0.0 : INFINITY);
    };
    Json row = Json::parse(simulate::to_json(h));
    row["p_exact"] = p_exact;
    row["T_exact"] = T_exact;
    row["p_z"] = z(h.p, p_exact);
    row["T_z"] = z(h.T, T_exact);
    hits.push_back(row);
  }
  est["hitting"] = hits;

  Json laws = Json::array();
  if (sim.has("law_times")) {
    for (double t : sim.numbers("law_times")) {
      const auto emp = simulate::empirical_law_at(*model, init, t, std::max<std::size_t>(replicates, 1000),
                                                  settings.seed, mode, par);
      ProbabilityVector exact;
      if (restricted) {
        exact = restricted->lift(
            ctmc::transient_distribution(restricted->generator,
                                         ProbabilityVector::point_mass(restricted->states.size(),
                                                                       restricted->local(init)),
                                         t),
            n);
      } else {
        exact = ctmc::transient_distribution(target_q, ProbabilityVector::point_mass(n, init), t);
      }
      laws.push_back({{"t", t},
                      {"replicates", emp.replicates},
                      {"cap_exceeded", emp.cap_exceeded},
                      {"tv_to_exact", ctmc::total_variation(emp.law, exact)}});
    }
  }
  est["laws"] = laws;

  if (mode_name != "absorbing") {
    const auto occ = simulate::occupation_fractions(*model, init, t_max, occ_reps, settings.seed,
                                                    mode, par);
    const ProbabilityVector stationary =
        restricted ? restricted->lift(ctmc::stationary_distribution(restricted->generator), n)
                   : ctmc::stationary_distribution(target_q);
    est["occupation"] = Json{{"replicates", occ.replicates},
                             {"cap_exceeded", occ.cap_exceeded},
                             {"tv_to_stationary", ctmc::total_variation(occ.law, stationary)}};
  }
  out.files.push_back({"estimates.json", dump(est)});
  out.summary = "simulate: " + std::to_string(n_paths) + " trajectories, " +
                std::to_string(ks.size()) + " hitting estimates";
  return out;
}

CommandResult run_command(Command command, const Json& config, const Overrides& overrides,
                          const std::filesystem::path& base_dir) {
  switch (command) {
    case Command::kSolve: return cmd_solve(config, overrides, base_dir);
    case Command::kBounds: return cmd_bounds(config, overrides, base_dir);
    case Command::kWindow: return cmd_window(config, overrides, base_dir);
    case Command::kSweep: return cmd_sweep(config, overrides, base_dir);
    case Command::kSimulate: return cmd_simulate(config, overrides, base_dir);
  }
  fail(ErrorKind::kConfig, "unknown command");
}

}  // namespace quasieq::cli
