#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "quasieq/bd/density.hpp"
#include "quasieq/bd/model.hpp"
#include "quasieq/cli/config.hpp"
#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"
#include "quasieq/mpp/mpp.hpp"

namespace quasieq::cli {

enum class ModelKind { kBirthDeathFamily, kBirthDeathExplicit, kGeneralCtmc, kMpp };

ModelKind model_kind(const Json& config);  // reads model.kind; throws kConfig
std::string to_string(ModelKind kind);

/// A chain on {0} u C built from the [model] table (every kind but mpp).
struct ChainModel {
  ModelKind kind = ModelKind::kGeneralCtmc;
  std::shared_ptr<const ctmc::SparseGenerator> q;
  ctmc::StateIndex s;
  std::size_t cap = 0;  // number of states in C

  // Birth-death kinds only.
  std::optional<bd::BirthDeathModel> closed_form;
  // Family kind only.
  std::optional<bd::DensitySpec> density;
  double c = 0.0;
  std::function<double(std::size_t)> birth;  // untruncated rates, for simulation
  std::function<double(std::size_t)> death;
};

/// `A_override` replaces model.A (sweeps); the cap then defaults to
/// ceil(cap_factor A max(1, c)) unless the command line fixes it.
ChainModel build_chain(const Json& config, const Overrides& overrides,
                       const std::filesystem::path& base_dir,
                       std::optional<double> A_override = std::nullopt,
                       double cap_factor = 6.0);

/// Return law from the [return] table; point mass at s when absent.
///   kind = "point"    state (default s)
///   kind = "uniform"  first, last   or  first, last_per_A (family kind)
///   kind = "weights"  weights = [w_1, ..., w_n] (normalized here)
ctmc::ReturnDistribution build_return(const Json& config, const ChainModel& chain);

struct MppSetup {
  mpp::PopulationModel model;
  Eigen::VectorXd x0;      // Newton starting point
  double radius = 4.0;
  std::size_t point_cap = 2'000'000;
};

MppSetup build_mpp(const Json& config, const Overrides& overrides,
                   std::optional<double> N_override = std::nullopt);

}  // namespace quasieq::cli
