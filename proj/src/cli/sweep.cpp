#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "quasieq/cli/commands.hpp"
#include "quasieq/ctmc/types.hpp"
#include "quasieq/error.hpp"
#include "quasieq/mpp/mpp.hpp"

namespace quasieq::cli {

using namespace detail;

namespace {

const char* kChainHeader =
    "A,cap,s,c,p_s,one_minus_p_s,log_one_minus_p_s,T_s,log_T_s,T_zeta_plus,log_A,zeta,epsilon,"
    "tv_bound,tv_exact,log_tv_exact,relative_tail";

const char* kMppHeader =
    "N,states,q_sN,tv_to_gaussian,shell_mass,max_mean_offset_over_sqrt_N,max_cov_relative_error";

std::string chain_row(const Json& config, const Overrides& overrides,
                      const std::filesystem::path& base_dir, const Settings& settings, double A,
                      double cap_factor) {
  const ChainModel chain = build_chain(config, overrides, base_dir, A, cap_factor);
  const auto mu = build_return(config, chain);
  const ChainContext ctx = analyze_chain(chain, mu, settings, {});
  const auto& rep = ctx.search.report;
  const auto& q = *chain.q;
  const double tv = ctmc::total_variation(
      returned_law(q, mu), returned_law(q, ctmc::ReturnDistribution::point_mass(q.size(), chain.s)));
  return join({num(A), std::to_string(chain.cap), std::to_string(chain.s.id), num(chain.c),
               num(ctx.stats.p_s), num(ctx.one_minus_p_s), num(std::log(ctx.one_minus_p_s)),
               num(ctx.stats.T_s), num(std::log(ctx.stats.T_s)), num(rep.plan.T_zeta_plus),
               num(std::log(A)), num(rep.plan.zeta), num(rep.epsilon), num(rep.tv_bound), num(tv),
               num(std::log(tv)), num(chain.closed_form->tail().relative_tail)});
}

std::string mpp_row(const Json& config, const Overrides& overrides, double N) {
  MppSetup setup = build_mpp(config, overrides, N);
  const auto g = mpp::find_equilibrium(setup.model, setup.x0);
  const auto tp = mpp::build_truncated_process(setup.model, g, setup.radius, setup.point_cap, 1);  // the grid is already spread over threads
  const auto qe = mpp::mpp_quasi_equilibrium(tp, g);
  const auto& cmp = qe.comparison;
  const double offset = ((cmp.mean_pi - N * g.c).cwiseAbs().maxCoeff()) / std::sqrt(N);
  const Eigen::VectorXd sd = g.Sigma.diagonal().cwiseSqrt();
  const Eigen::MatrixXd rel = (cmp.cov_pi / N - g.Sigma).cwiseQuotient(sd * sd.transpose());
  return join({num(N), std::to_string(cmp.states), num(cmp.q_sN), num(cmp.tv_to_gaussian),
               num(cmp.shell_mass), num(offset), num(rel.cwiseAbs().maxCoeff())});
}

}  // namespace

CommandResult cmd_sweep(const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir) {
  const Settings settings = read_settings(config, overrides);
  const Section sweep(Section(config, "config").raw("sweep"), "sweep");
  sweep.allow_only({"parameter", "grid", "cap_factor"});
  const bool is_mpp = model_kind(config) == ModelKind::kMpp;
  const std::string parameter = sweep.string("parameter", is_mpp ? "N" : "A");
  if (is_mpp ? parameter != "N" : parameter != "A") {
    fail(ErrorKind::kConfig, std::string("sweep.parameter must be ") + (is_mpp ? "N" : "A") +
                                 " for this model kind");
  }
  if (!is_mpp && model_kind(config) != ModelKind::kBirthDeathFamily) {
    fail(ErrorKind::kConfig, "sweeps need a birth-death-family or mpp model");
  }
  const std::vector<double> grid =
      sweep.has("grid") ? grid_from_json(*sweep.raw("grid"), sweep.where("grid"))
                        : std::vector<double>{};
  for (double v : grid) {
    if (!(v > 0.0)) fail(ErrorKind::kConfig, "sweep grid values must be positive");
  }
  const double cap_factor = sweep.number("cap_factor", 6.0);
  if (!(cap_factor > 1.0)) fail(ErrorKind::kConfig, "sweep.cap_factor must exceed 1");

  std::vector<std::string> rows(grid.size());
  parallel_for(grid.size(), settings.threads, [&](std::size_t i) {
    rows[i] = is_mpp ? mpp_row(config, overrides, grid[i])
                     : chain_row(config, overrides, base_dir, settings, grid[i], cap_factor);
  });

  std::string csv = std::string(is_mpp ? kMppHeader : kChainHeader) + "\n";
  for (const auto& r : rows) csv += r + "\n";
  CommandResult out;
  out.files.push_back({"sweep.csv", csv});
  out.summary = "sweep: " + std::to_string(grid.size()) + " points over " + parameter;
  return out;
}

}  // namespace quasieq::cli
