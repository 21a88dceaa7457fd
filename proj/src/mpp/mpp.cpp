#include "quasieq/mpp/mpp.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "quasieq/ctmc/solvers.hpp"
#include "quasieq/error.hpp"

namespace quasieq::mpp {

namespace {

std::string vec_text(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out.precision(10);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x(i);
  out << ')';
  return out.str();
}

std::string eig_text(const Eigen::VectorXcd& ev) {
  std::ostringstream out;
  out.precision(6);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    out << (i ? ", " : "") << ev(i).real();
    if (ev(i).imag() != 0.0) out << (ev(i).imag() > 0 ? "+" : "") << ev(i).imag() << "i";
  }
  return out.str();
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::string pack(const Eigen::VectorXi& x) {
  return std::string(reinterpret_cast<const char*>(x.data()),
                     static_cast<std::size_t>(x.size()) * sizeof(int));
}

unsigned worker_count(unsigned requested, std::size_t work) {
  unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(1, work / 256)));
}

}  // namespace

// ------------------------------------------------------------ the model ---

PopulationModel::PopulationModel(std::size_t d, std::vector<JumpSpec> jumps,
                                 std::map<std::string, double> params, double N)
    : d_(d), params_(std::move(params)), N_(N) {
  if (d_ == 0) fail(ErrorKind::kModel, "dimension must be at least 1");
  if (!(N_ > 0.0) || !std::isfinite(N_)) fail(ErrorKind::kModel, "N must be positive");
  if (jumps.empty()) fail(ErrorKind::kModel, "model has no jumps");
  if (d_ == 1) {
    variables_ = {"x"};
  } else {
    for (std::size_t i = 1; i <= d_; ++i) variables_.push_back("x" + std::to_string(i));
  }
  ratexpr::Symbols symbols;
  symbols.variables = variables_;
  for (const auto& [name, value] : params_) {
    if (!std::isfinite(value)) fail(ErrorKind::kModel, "parameter " + name + " is not finite");
    symbols.parameters.push_back(name);
  }
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    JumpSpec& spec = jumps[i];
    if (spec.J.size() != d_) {
      fail(ErrorKind::kModel, "jump " + std::to_string(i + 1) + " has " +
                                  std::to_string(spec.J.size()) + " components, expected " +
                                  std::to_string(d_));
    }
    if (std::all_of(spec.J.begin(), spec.J.end(), [](int v) { return v == 0; })) {
      fail(ErrorKind::kModel, "jump " + std::to_string(i + 1) + " is the zero vector");
    }
    Jump jump;
    jump.J = spec.J;
    jump.text = spec.rate;
    try {
      jump.alpha = ratexpr::parse(spec.rate, symbols);
    } catch (const Error& e) {
      fail(ErrorKind::kModel, "rate of jump " + std::to_string(i + 1) + ": " + e.what());
    }
    if (ratexpr::is_smooth(jump.alpha)) {
      for (const std::string& v : variables_) jump.grad.push_back(ratexpr::diff(jump.alpha, v));
    } else {
      symbolic_ = false;
    }
    double norm = 0.0;
    for (int v : jump.J) norm += static_cast<double>(v) * v;
    j_star_ = std::max(j_star_, std::sqrt(norm));
    jumps_.push_back(std::move(jump));
  }
}

void PopulationModel::require_orthant(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != d_) {
    fail(ErrorKind::kInvalidInput, "point has the wrong dimension");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= 0.0) || !std::isfinite(x(i))) {
      fail(ErrorKind::kInvalidInput, "point " + vec_text(x) + " is outside the positive orthant");
    }
  }
}

double PopulationModel::rate(std::size_t i, const Eigen::VectorXd& x) const {
  const ratexpr::Bindings b{std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                            &params_};
  double v = 0.0;
  try {
    v = ratexpr::eval(jumps_[i].alpha, b);
  } catch (const Error& e) {
    fail(ErrorKind::kModel, "rate of jump " + std::to_string(i + 1) + " at " + vec_text(x) +
                                ": " + e.what());
  }
  if (!(v >= 0.0)) {
    fail(ErrorKind::kModel, "rate of jump " + std::to_string(i + 1) + " is negative at " +
                                vec_text(x));
  }
  return v;
}

Eigen::VectorXd PopulationModel::drift(const Eigen::VectorXd& x) const {
  require_orthant(x);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_));
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    const double a = rate(i, x);
    for (std::size_t k = 0; k < d_; ++k) f(static_cast<Eigen::Index>(k)) += jumps_[i].J[k] * a;
  }
  return f;
}

Eigen::MatrixXd PopulationModel::jacobian_fd(const Eigen::VectorXd& x) const {
  require_orthant(x);
  const auto d = static_cast<Eigen::Index>(d_);
  Eigen::MatrixXd jac(d, d);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (Eigen::Index j = 0; j < d; ++j) {
    double h = base * std::max(1.0, std::abs(x(j)));
    if (x(j) > 0.0) h = std::min(h, 0.5 * x(j));
    Eigen::VectorXd up = x;
    Eigen::VectorXd dn = x;
    up(j) += h;
    dn(j) -= h;
    if (dn(j) < 0.0) {
      // One-sided at the boundary of the orthant.
      dn(j) = x(j);
      jac.col(j) = (drift(up) - drift(dn)) / h;
    } else {
      jac.col(j) = (drift(up) - drift(dn)) / (2.0 * h);
    }
  }
  return jac;
}

Eigen::MatrixXd PopulationModel::jacobian(const Eigen::VectorXd& x) const {
  if (!symbolic_) return jacobian_fd(x);
  require_orthant(x);
  const auto d = static_cast<Eigen::Index>(d_);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d);
  const ratexpr::Bindings b{std::span<const double>(x.data(), d_), &params_};
  for (const Jump& jump : jumps_) {
    for (std::size_t j = 0; j < d_; ++j) {
      double g = 0.0;
      try {
        g = ratexpr::eval(jump.grad[j], b);
      } catch (const Error& e) {
        fail(ErrorKind::kModel, "derivative of " + jump.text + ": " + e.what());
      }
      for (std::size_t k = 0; k < d_; ++k) {
        jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) += jump.J[k] * g;
      }
    }
  }
  return jac;
}

Eigen::MatrixXd PopulationModel::sigma2(const Eigen::VectorXd& x) const {
  require_orthant(x);
  const auto d = static_cast<Eigen::Index>(d_);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    const double a = rate(i, x);
    Eigen::VectorXd j(d);
    for (Eigen::Index k = 0; k < d; ++k) j(k) = jumps_[i].J[static_cast<std::size_t>(k)];
    s += a * j * j.transpose();
  }
  return s;
}

// -------------------------------------------------- equilibrium, Lyapunov ---

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& sigma2,
                         const Eigen::MatrixXd& Sigma) {
  return max_abs(A * Sigma + Sigma * A.transpose() + sigma2);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& sigma2) {
  const Eigen::Index d = A.rows();
  if (d == 0 || A.cols() != d || sigma2.rows() != d || sigma2.cols() != d) {
    fail(ErrorKind::kInvalidInput, "solve_lyapunov: A and sigma2 must be square of equal size");
  }
  if (d > 10) fail(ErrorKind::kInvalidInput, "solve_lyapunov handles d <= 10");
  const Eigen::VectorXcd ev = A.eigenvalues();
  if (!(ev.real().maxCoeff() < 0.0)) {
    fail(ErrorKind::kPrecondition, "A is not stable; eigenvalues " + eig_text(ev));
  }
  const double scale = std::max(1.0, max_abs(sigma2));
  if (max_abs(sigma2 - sigma2.transpose()) > 1e-12 * scale) {
    fail(ErrorKind::kInvalidInput, "sigma2 is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(sigma2);
  if (se.eigenvalues().minCoeff() < -1e-12 * scale) {
    fail(ErrorKind::kInvalidInput, "sigma2 is not positive semidefinite");
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd K = Eigen::kroneckerProduct(I, A) + Eigen::kroneckerProduct(A, I);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(sigma2.data(), d * d);
  Eigen::VectorXd v = lu.solve(rhs);
  v += lu.solve(rhs - K * v);  // one refinement step
  Eigen::MatrixXd Sigma = Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
  Sigma = (0.5 * (Sigma + Sigma.transpose())).eval();
  const double res = lyapunov_residual(A, sigma2, Sigma);
  if (!(res <= 1e-10 * scale)) {
    fail(ErrorKind::kNumericalFailure,
         "Lyapunov residual " + std::to_string(res) + " exceeds tolerance");
  }
  return Sigma;
}

GaussianSummary find_equilibrium(const PopulationModel& model, const Eigen::VectorXd& x0,
                                 const NewtonOptions& options) {
  const auto d = static_cast<Eigen::Index>(model.dimension());
  if (x0.size() != d) fail(ErrorKind::kInvalidInput, "starting point has the wrong dimension");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(x0(i) > 0.0)) fail(ErrorKind::kInvalidInput, "starting point must be strictly positive");
  }

  // Every coordinate of a population drift usually carries a factor x_i, so
  // 0 is a root that plain Newton is drawn to. Iterating on the per-capita
  // drift H_i = F_i / x_i in y = log x removes that root and keeps x > 0.
  auto rate_scale = [&](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.jump_count(); ++i) s += model.rate(i, x);
    return std::max(s, 1e-300);
  };
  auto per_capita = [](const Eigen::VectorXd& f, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(f.array() / x.array());
  };

  Eigen::VectorXd y = x0.array().log();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd f = model.drift(x);
  Eigen::VectorXd h = per_capita(f, x);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (f.cwiseAbs().maxCoeff() <= std::min(options.tolerance * rate_scale(x), 1e-11)) break;
    const double hn = h.cwiseAbs().maxCoeff();
    // dH_i/dy_j = J_ij x_j / x_i - delta_ij H_i.
    Eigen::MatrixXd jh = x.cwiseInverse().asDiagonal() * model.jacobian(x) * x.asDiagonal();
    jh.diagonal() -= h;
    const Eigen::VectorXd step = jh.completeOrthogonalDecomposition().solve(-h);
    if (!step.allFinite() || step.cwiseAbs().maxCoeff() == 0.0) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, lambda *= 0.5) {
      const Eigen::VectorXd ty = y + lambda * step;
      const Eigen::VectorXd tx = ty.array().exp();
      if (!tx.allFinite() || (tx.array() <= 0.0).any()) continue;
      Eigen::VectorXd tf;
      try {
        tf = model.drift(tx);
      } catch (const Error&) {
        continue;
      }
      const Eigen::VectorXd th = per_capita(tf, tx);
      if (th.cwiseAbs().maxCoeff() < (1.0 - 1e-4 * lambda) * hn || halving == 59) {
        y = ty;
        x = tx;
        f = tf;
        h = th;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fail(ErrorKind::kNoEquilibrium, "damped Newton found no admissible step near " + vec_text(x));
    }
    if ((lambda * step).cwiseAbs().maxCoeff() <= 1e-15) break;
  }

  GaussianSummary out;
  out.c = x;
  out.newton_iterations = it;
  out.drift_residual = f.cwiseAbs().maxCoeff();
  if (!(out.drift_residual <= 1e-10)) {
    fail(ErrorKind::kNoEquilibrium, "Newton did not converge from " + vec_text(x0) +
                                        "; |F| = " + std::to_string(out.drift_residual) +
                                        " at " + vec_text(x));
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(x(i) > 1e-9 * std::max(1.0, x0.cwiseAbs().maxCoeff()))) {
      fail(ErrorKind::kNoEquilibrium,
           "Newton converged to the boundary point " + vec_text(x) + ", not an interior equilibrium");
    }
  }
  out.A = model.jacobian(x);
  if (model.symbolic_jacobian()) {
    const Eigen::MatrixXd fd = model.jacobian_fd(x);
    out.jacobian_check = max_abs(out.A - fd) / std::max(max_abs(out.A), 1e-300);
    if (out.jacobian_check > 1e-6) {
      fail(ErrorKind::kNumericalFailure, "symbolic Jacobian disagrees with finite differences (" +
                                             std::to_string(out.jacobian_check) + ")");
    }
  }
  out.eigenvalues = out.A.eigenvalues();
  if (!(out.eigenvalues.real().maxCoeff() < 0.0)) {
    fail(ErrorKind::kStability,
         "equilibrium " + vec_text(x) + " is not stable; eigenvalues " + eig_text(out.eigenvalues));
  }
  out.sigma2 = model.sigma2(x);
  out.Sigma = solve_lyapunov(out.A, out.sigma2);
  out.lyapunov_residual = lyapunov_residual(out.A, out.sigma2, out.Sigma);
  return out;
}

// ----------------------------------------------------- lattice truncation ---

Eigen::VectorXi nearest_lattice_point(const Eigen::VectorXd& y) {
  Eigen::VectorXi p(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double fl = std::floor(y(i));
    p(i) = static_cast<int>(y(i) - fl > 0.5 ? fl + 1.0 : fl);
  }
  return p;
}

ctmc::StateIndex TruncatedProcess::index_of(const Eigen::VectorXi& x) const {
  const auto it = lookup_.find(pack(x));
  return it == lookup_.end() ? ctmc::kCemetery : ctmc::StateIndex{it->second};
}

TruncatedProcess build_truncated_process(const PopulationModel& model,
                                         const GaussianSummary& summary, double radius,
                                         std::size_t cap, unsigned threads) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::kInvalidInput, "radius multiplier must be positive");
  }
  const auto d = static_cast<Eigen::Index>(model.dimension());
  const double N = model.N();
  const Eigen::VectorXd center = N * summary.c;
  const Eigen::LLT<Eigen::MatrixXd> llt(summary.Sigma);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::kNumericalFailure, "Sigma is not positive definite");
  }
  const double limit = radius * radius * N;

  Eigen::VectorXi lo(d);
  Eigen::VectorXi hi(d);
  double box = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = radius * std::sqrt(N * summary.Sigma(i, i));
    lo(i) = static_cast<int>(std::max(0.0, std::ceil(center(i) - h)));
    hi(i) = static_cast<int>(std::floor(center(i) + h));
    box *= std::max(0, hi(i) - lo(i) + 1);
  }
  // Lattice points inside the ellipsoid, roughly its volume.
  const double volume = std::pow(std::numbers::pi, 0.5 * static_cast<double>(d)) /
                        std::tgamma(0.5 * static_cast<double>(d) + 1.0) *
                        std::pow(radius * std::sqrt(N), static_cast<double>(d)) *
                        std::sqrt(summary.Sigma.determinant());
  if (std::min(box, volume) > static_cast<double>(cap) * 1.5 || box > 2e8) {
    fail(ErrorKind::kTruncationTooLarge,
         "truncation set would hold about " + std::to_string(static_cast<long long>(volume)) +
             " states, over the cap of " + std::to_string(cap));
  }

  // Lattice points where nothing can happen (extinction) are left out; a jump
  // into one counts as leaving the set.
  auto absorbing = [&](const Eigen::VectorXi& p) {
    const Eigen::VectorXd density = p.cast<double>() / N;
    for (std::size_t j = 0; j < model.jump_count(); ++j) {
      if (model.rate(j, density) > 0.0) return false;
    }
    return true;
  };

  TruncatedProcess out;
  out.N = N;
  out.radius = radius;
  if (box >= 1.0) {
    Eigen::VectorXi p = lo;
    for (;;) {
      const Eigen::VectorXd y = llt.matrixL().solve((p.cast<double>() - center).eval());
      const double q = y.squaredNorm();
      if (q <= limit && !absorbing(p)) {
        out.points.push_back(p);
        out.scaled_radius.push_back(std::sqrt(q / N));
        out.lookup_.emplace(pack(p), out.points.size());
        if (out.points.size() > cap) {
          fail(ErrorKind::kTruncationTooLarge,
               "truncation set exceeds the cap of " + std::to_string(cap) + " states (estimate " +
                   std::to_string(static_cast<long long>(volume)) + ")");
        }
      }
      Eigen::Index k = d - 1;
      while (k >= 0 && p(k) == hi(k)) {
        p(k) = lo(k);
        --k;
      }
      if (k < 0) break;
      ++p(k);
    }
  }
  out.s_point = nearest_lattice_point(center);
  out.s = out.index_of(out.s_point);
  if (out.s.is_cemetery()) {
    fail(ErrorKind::kInvalidTruncation, "nearest lattice point to Nc lies outside the ellipsoid");
  }

  Eigen::VectorXd s_density = out.s_point.cast<double>() / N;
  for (std::size_t i = 0; i < model.jump_count(); ++i) out.q_s += N * model.rate(i, s_density);

  // Rows are independent; each worker fills a contiguous block.
  const std::size_t n = out.points.size();
  const unsigned workers = worker_count(threads, n);
  std::vector<std::vector<ctmc::Transition>> rows(workers);
  std::vector<std::size_t> redirected(workers, 0);
  std::vector<std::exception_ptr> errors(workers);
  auto fill = [&](unsigned w) {
    try {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      for (std::size_t i = begin; i < end; ++i) {
        const Eigen::VectorXi& x = out.points[i];
        const Eigen::VectorXd density = x.cast<double>() / N;
        for (std::size_t j = 0; j < model.jump_count(); ++j) {
          const double r = N * model.rate(j, density);
          if (r == 0.0) continue;
          Eigen::VectorXi y = x;
          for (Eigen::Index k = 0; k < d; ++k) y(k) += model.jump(j)[static_cast<std::size_t>(k)];
          ctmc::StateIndex to = out.index_of(y);
          if (to.is_cemetery()) {
            ++redirected[w];
            to = out.s;
          }
          if (to.id == i + 1) continue;
          rows[w].push_back({ctmc::StateIndex{i + 1}, to, r});
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    fill(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(fill, w);
    for (auto& t : pool) t.join();
  }
  std::vector<ctmc::Transition> all;
  for (unsigned w = 0; w < workers; ++w) {
    if (errors[w]) std::rethrow_exception(errors[w]);
    all.insert(all.end(), rows[w].begin(), rows[w].end());
    out.redirected_edges += redirected[w];
  }
  out.generator = ctmc::SparseGenerator(n, all);
  return out;
}

QuasiEquilibrium mpp_quasi_equilibrium(const TruncatedProcess& process,
                                       const GaussianSummary& summary) {
  QuasiEquilibrium out;
  out.pi = ctmc::stationary_distribution(process.generator);
  const std::size_t n = process.points.size();
  const Eigen::Index d = summary.c.size();
  const auto pi = out.pi.values();

  GaussianComparison& g = out.comparison;
  g.c = summary.c;
  g.A = summary.A;
  g.Sigma = summary.Sigma;
  g.N = process.N;
  g.radius = process.radius;
  g.states = n;
  g.q_sN = process.q_s;
  g.s_N = process.s_point;

  g.mean_pi = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i) g.mean_pi += pi[i] * process.points[i].cast<double>();
  g.cov_pi = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd y = process.points[i].cast<double>() - g.mean_pi;
    g.cov_pi += pi[i] * y * y.transpose();
  }

  std::vector<double> gauss(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = process.scaled_radius[i];
    gauss[i] = std::exp(-0.5 * rho * rho);
    z += gauss[i];
  }
  for (double& w : gauss) w /= z;
  g.tv_to_gaussian = ctmc::total_variation(out.pi, ctmc::ProbabilityVector(gauss));

  for (std::size_t i = 0; i < n; ++i) {
    if (process.scaled_radius[i] >= 0.9 * process.radius) g.shell_mass += pi[i];
  }
  return out;
}

IrreducibilityReport check_local_irreducibility(const PopulationModel& model,
                                                const TruncatedProcess& process,
                                                std::size_t samples, std::size_t max_steps,
                                                std::uint64_t seed) {
  IrreducibilityReport rep;
  const std::size_t n = process.points.size();
  if (n == 0) return rep;
  const Eigen::Index d = static_cast<Eigen::Index>(model.dimension());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  // Positive-rate jumps that stay inside the set.
  auto neighbours = [&](std::size_t i, std::vector<std::size_t>& out) {
    out.clear();
    const Eigen::VectorXd density = process.points[i].cast<double>() / process.N;
    for (std::size_t j = 0; j < model.jump_count(); ++j) {
      if (!(model.rate(j, density) > 0.0)) continue;
      Eigen::VectorXi y = process.points[i];
      for (Eigen::Index k = 0; k < d; ++k) y(k) += model.jump(j)[static_cast<std::size_t>(k)];
      const ctmc::StateIndex to = process.index_of(y);
      if (!to.is_cemetery()) out.push_back(to.pos());
    }
  };

  std::vector<std::size_t> buf;
  for (std::size_t draw = 0; draw < std::min(samples, n); ++draw) {
    const std::size_t from = samples >= n ? draw : pick(rng);
    ++rep.samples;
    for (Eigen::Index axis = 0; axis < d; ++axis) {
      for (int sign : {-1, 1}) {
        Eigen::VectorXi target = process.points[from];
        target(axis) += sign;
        const ctmc::StateIndex t = process.index_of(target);
        if (t.is_cemetery()) continue;
        ++rep.pairs_checked;
        // Breadth-first search limited to max_steps jumps.
        std::unordered_set<std::size_t> seen{from};
        std::deque<std::pair<std::size_t, std::size_t>> queue{{from, 0}};
        std::size_t found = 0;
        while (!queue.empty() && !found) {
          const auto [at, depth] = queue.front();
          queue.pop_front();
          if (depth == max_steps) continue;
          neighbours(at, buf);
          for (std::size_t nb : buf) {
            if (nb == t.pos()) {
              found = depth + 1;
              break;
            }
            if (seen.insert(nb).second) queue.push_back({nb, depth + 1});
          }
        }
        if (found) {
          rep.worst_steps = std::max(rep.worst_steps, found);
        } else {
          ++rep.failures;
        }
      }
    }
  }
  return rep;
}

std::string to_json(const GaussianComparison& g) {
  auto vec = [](const auto& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      a.push_back(row);
    }
    return a;
  };
  const nlohmann::json j{
      {"c", vec(g.c)},
      {"A", mat(g.A)},
      {"Sigma", mat(g.Sigma)},
      {"N", g.N},
      {"radius", g.radius},
      {"states", g.states},
      {"s_N", vec(g.s_N)},
      {"mean_pi", vec(g.mean_pi)},
      {"cov_pi", mat(g.cov_pi)},
      {"tv_to_gaussian", g.tv_to_gaussian},
      {"q_sN", g.q_sN},
      {"shell_mass", g.shell_mass},
      // The error-bound exponents exist only as proof constants.
      {"exponents", {{"alpha", "symbolic"}, {"beta_1", "symbolic"}, {"beta_2", "symbolic"}}},
  };
  return j.dump(2);
}

}  // namespace quasieq::mpp
