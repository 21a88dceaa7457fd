#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "quasieq/bd/model.hpp"

namespace quasieq::bd {

enum class Family { kRicker, kVerhulst, kBevertonHolt, kHassell, kMaynardSmithSlatkin, kCustom };

Family parse_family(std::string_view name);  // throws kModel
std::string_view to_string(Family f);

/// Density-dependent population: b_j = j beta(j/A), d_j = j delta(j/A).
///
///   ricker                 beta = b exp(-alpha x)        delta = d
///   verhulst               beta = b                      delta = d + c x
///   beverton-holt          beta = b / (1 + x/m)          delta = d
///   hassell                beta = b / (1 + x/m)^c        delta = d
///   maynard-smith-slatkin  beta = b / (1 + (x/m)^c)      delta = d
///   custom-expression      beta, delta given as expressions in x
struct DensitySpec {
  Family family = Family::kRicker;
  std::map<std::string, double> params;
  double A = 1.0;
  std::string birth_expr;  // custom-expression only
  std::string death_expr;
};

/// Per-capita rate expressions for a spec (the fixed forms above, or the
/// user's expressions for custom-expression).
std::pair<std::string, std::string> per_capita_expressions(const DensitySpec& spec);

/// Positive root c of beta(c) = delta(c). Closed form for Ricker, bisection
/// to 1e-12 otherwise. Throws kNoEquilibrium if there is none.
double equilibrium_density(const DensitySpec& spec);

struct DensityInstance {
  BirthDeathModel model;
  double c;        // equilibrium density
  std::size_t s;   // suggested center max(1, floor(A c))
};

/// Throws kModel for missing or invalid parameters.
DensityInstance make_density_model(const DensitySpec& spec, std::size_t cap);

}  // namespace quasieq::bd
