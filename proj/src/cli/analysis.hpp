#pragma once

// Pieces shared by the command implementations.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "quasieq/bounds/bounds.hpp"
#include "quasieq/cli/config.hpp"
#include "quasieq/cli/setup.hpp"
#include "quasieq/ctmc/hitting.hpp"
#include "quasieq/ctmc/types.hpp"

namespace quasieq::cli::detail {

struct Settings {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double D = 1.0;
  std::optional<double> M;  // from [bounds]; otherwise max(1, mu(T)/T_s)
  std::vector<double> zeta_grid;
  std::vector<double> t_grid;  // [bounds] times, or the --t-grid flag
};

/// Checks the top-level keys and collects the shared settings.
Settings read_settings(const Json& config, const Overrides& overrides);

/// Shortest text that reads back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string num(double v);
std::string join(const std::vector<std::string>& cells);

struct ChainContext {
  ChainModel chain;
  ctmc::ReturnDistribution mu;
  ctmc::HittingStats stats;
  double one_minus_p_s = 0.0;  // closed form when available
  double M = 1.0;
  bounds::ZetaSearch search;
};

ChainContext analyze_chain(const ChainModel& chain, const ctmc::ReturnDistribution& mu,
                           const Settings& settings, const std::vector<double>& t_grid);

ctmc::ProbabilityVector returned_law(const ctmc::SparseGenerator& q,
                                     const ctmc::ReturnDistribution& mu);
/// Stationary law of the accelerated return process on `members`, lifted
/// back onto C.
ctmc::ProbabilityVector accelerated_law(const ctmc::SparseGenerator& q,
                                        const std::vector<ctmc::StateIndex>& members,
                                        ctmc::StateIndex s);
double mass_outside(const ctmc::ProbabilityVector& pi, const ctmc::TruncationPlan& plan);

/// L_init(X(t)) at each time of an ascending grid, propagated from one time
/// to the next.
std::vector<ctmc::ProbabilityVector> transient_path(const ctmc::SparseGenerator& q,
                                                    const ctmc::ProbabilityVector& init,
                                                    const std::vector<double>& ascending);

/// Smallest D for which a bound that is affine in D reaches `exact`;
/// nullopt when the bound does not depend on D.
std::optional<double> calibrate_D(const std::function<double(double)>& bound_at_D, double exact);

/// One time point of the quasi-equilibrium curve.
struct CurvePoint {
  double t = 0.0;
  double tv_returned = 0.0;     // d_TV(L_s(X(t)), pi^{delta_s})
  double tv_accelerated = 0.0;  // d_TV(L_s(X(t)), pi~ on the plan members)
  std::optional<double> eta;
  std::optional<double> tilde;
  std::optional<double> eta_D;    // D needed for eta to cover tv_returned
  std::optional<double> tilde_D;  // D needed for tilde to cover tv_accelerated
  std::string eta_note;
  std::string tilde_note;
  std::size_t replicates = 0;     // simulated curves only
};

/// Exact curve by uniformization over `t_grid` (sorted here).
std::vector<CurvePoint> exact_curve(const ChainContext& ctx, const std::vector<double>& t_grid,
                                    double D);

/// Fills eta, tilde and the calibration fields of points whose TV columns
/// are already set.
void attach_bounds(const ChainContext& ctx, double D, std::vector<CurvePoint>& points);

Json hitting_json(const ChainContext& ctx);
Json model_json(const ChainModel& chain);

/// Family models only: the same summary with the cap doubled.
Json cap_stability(const ChainContext& ctx, const Json& config, const Overrides& overrides,
                   const std::filesystem::path& base_dir);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
/// Each index is handled by exactly one call, so results stored per index
/// do not depend on the thread count. The first failure by index is
/// rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace quasieq::cli::detail
