#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::mpp {

/// One jump X -> X + J at rate N alpha_J(X / N).
struct JumpSpec {
  std::vector<int> J;
  std::string rate;  // expression in x (d = 1) or x1..xd
};

/// Density-dependent population process on Z_+^d.
class PopulationModel {
 public:
  /// Throws kModel for a malformed jump or an expression that does not
  /// parse, references an unknown parameter or is missing a parameter value.
  PopulationModel(std::size_t d, std::vector<JumpSpec> jumps,
                  std::map<std::string, double> params, double N);

  std::size_t dimension() const { return d_; }
  std::size_t jump_count() const { return jumps_.size(); }
  const std::vector<int>& jump(std::size_t i) const { return jumps_[i].J; }
  const std::string& rate_text(std::size_t i) const { return jumps_[i].text; }
  double N() const { return N_; }
  const std::map<std::string, double>& params() const { return params_; }
  const std::vector<std::string>& variable_names() const { return variables_; }
  /// max |J| (Euclidean) over the jump set.
  double max_jump_norm() const { return j_star_; }

  /// alpha_J(x) for jump i. Throws kModel when the value is negative or not
  /// finite, or when evaluation fails.
  double rate(std::size_t i, const Eigen::VectorXd& x) const;

  /// F(x) = sum_J J alpha_J(x). Requires x >= 0 componentwise.
  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  /// DF(x), from symbolic derivatives of the rate expressions when they are
  /// all smooth and from central differences otherwise.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian_fd(const Eigen::VectorXd& x) const;
  bool symbolic_jacobian() const { return symbolic_; }
  /// sigma^2(x) = sum_J J J^T alpha_J(x).
  Eigen::MatrixXd sigma2(const Eigen::VectorXd& x) const;

 private:
  struct Jump {
    std::vector<int> J;
    std::string text;
    ratexpr::Expr alpha;
    std::vector<ratexpr::Expr> grad;  // d alpha / d x_j, empty if not smooth
  };

  void require_orthant(const Eigen::VectorXd& x) const;

  std::size_t d_;
  std::vector<Jump> jumps_;
  std::map<std::string, double> params_;
  std::vector<std::string> variables_;
  double N_;
  double j_star_ = 0.0;
  bool symbolic_ = true;
};

struct GaussianSummary {
  Eigen::VectorXd c;       // equilibrium density
  Eigen::MatrixXd A;       // DF(c)
  Eigen::MatrixXd sigma2;  // sigma^2(c)
  Eigen::MatrixXd Sigma;   // solves A Sigma + Sigma A^T + sigma^2 = 0
  Eigen::VectorXcd eigenvalues;
  double drift_residual = 0.0;     // max |F(c)|
  double lyapunov_residual = 0.0;  // max |A Sigma + Sigma A^T + sigma^2|
  double jacobian_check = 0.0;     // max relative gap, analytic vs differences
  int newton_iterations = 0;
};

struct NewtonOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;  // on max |F|, relative to the rate scale
};

/// Damped Newton from x0, then stability and Lyapunov. Throws
/// kNoEquilibrium when Newton fails or leaves the orthant, kStability with
/// the eigenvalues when DF(c) is not stable, kNumericalFailure when the
/// analytic Jacobian disagrees with finite differences.
GaussianSummary find_equilibrium(const PopulationModel& model, const Eigen::VectorXd& x0,
                                 const NewtonOptions& options = {});

/// Solves A Sigma + Sigma A^T + sigma2 = 0 through the Kronecker system
/// (d <= 10). Throws kPrecondition for an unstable A and kInvalidInput for a
/// sigma2 that is not symmetric positive semidefinite.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& sigma2);
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& sigma2,
                         const Eigen::MatrixXd& Sigma);

/// Accelerated return process on the lattice ellipsoid
/// (X - Nc)^T Sigma^{-1} (X - Nc) <= radius^2 N, restricted to Z_+^d and
/// without points at which every rate vanishes.
struct TruncatedProcess {
  ctmc::SparseGenerator generator;   // conservative, no cemetery
  std::vector<Eigen::VectorXi> points;  // points[i] is state i + 1
  ctmc::StateIndex s;                // nearest lattice point to Nc
  Eigen::VectorXi s_point;
  double q_s = 0.0;                  // N sum_J alpha_J(s_N / N)
  double N = 0.0;
  double radius = 0.0;

  /// sqrt((X - Nc)^T Sigma^{-1} (X - Nc) / N) for each member, zero based.
  std::vector<double> scaled_radius;
  std::size_t redirected_edges = 0;  // jumps that leave the set

  /// Index of a lattice point, or the cemetery when it is not a member.
  ctmc::StateIndex index_of(const Eigen::VectorXi& x) const;

 private:
  friend TruncatedProcess build_truncated_process(const PopulationModel&,
                                                  const GaussianSummary&, double, std::size_t,
                                                  unsigned);
  std::unordered_map<std::string, std::size_t> lookup_;  // packed point -> state id
};

/// Throws kTruncationTooLarge (with the size or an estimate) when the set
/// holds more than `cap` points, kInvalidTruncation when s_N falls outside
/// it.
TruncatedProcess build_truncated_process(const PopulationModel& model,
                                         const GaussianSummary& summary, double radius,
                                         std::size_t cap = 2'000'000, unsigned threads = 0);

/// Nearest lattice point to y; halves round down so ties go to the
/// lexicographically smallest candidate.
Eigen::VectorXi nearest_lattice_point(const Eigen::VectorXd& y);

struct GaussianComparison {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::MatrixXd Sigma;
  double N = 0.0;
  double radius = 0.0;
  std::size_t states = 0;
  Eigen::VectorXd mean_pi;
  Eigen::MatrixXd cov_pi;
  double tv_to_gaussian = 0.0;  // against the lattice Gaussian on the same set
  double q_sN = 0.0;            // bound on 1 / T~ for the truncated process
  double shell_mass = 0.0;      // pi mass with scaled radius in [0.9 r, r]
  Eigen::VectorXi s_N;
};

struct QuasiEquilibrium {
  ctmc::ProbabilityVector pi;
  GaussianComparison comparison;
};

QuasiEquilibrium mpp_quasi_equilibrium(const TruncatedProcess& process,
                                       const GaussianSummary& summary);

/// Sampled check that lattice neighbours X +- e_i inside the set can be
/// reached from X by positive-rate jumps within `max_steps` steps.
struct IrreducibilityReport {
  std::size_t samples = 0;
  std::size_t pairs_checked = 0;
  std::size_t failures = 0;
  std::size_t worst_steps = 0;
  bool ok() const { return failures == 0; }
};

IrreducibilityReport check_local_irreducibility(const PopulationModel& model,
                                                const TruncatedProcess& process,
                                                std::size_t samples, std::size_t max_steps,
                                                std::uint64_t seed);

/// {c, A, Sigma, mean_pi, cov_pi, tv_to_gaussian, q_sN, ...} as JSON text.
std::string to_json(const GaussianComparison& g);

}  // namespace quasieq::mpp
