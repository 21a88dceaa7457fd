#include "quasieq/bd/density.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "quasieq/error.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::bd {

namespace {

struct FamilyInfo {
  Family family;
  std::string_view name;
  std::string_view birth;
  std::string_view death;
  std::array<std::string_view, 4> required;
};

constexpr std::array<FamilyInfo, 6> kFamilies{{
    {Family::kRicker, "ricker", "b*exp(-alpha*x)", "d", {"b", "d", "alpha", ""}},
    {Family::kVerhulst, "verhulst", "b", "d + c*x", {"b", "d", "c", ""}},
    {Family::kBevertonHolt, "beverton-holt", "b/(1 + x/m)", "d", {"b", "d", "m", ""}},
    {Family::kHassell, "hassell", "b/(1 + x/m)^c", "d", {"b", "d", "m", "c"}},
    {Family::kMaynardSmithSlatkin, "maynard-smith-slatkin", "b/(1 + (x/m)^c)", "d",
     {"b", "d", "m", "c"}},
    {Family::kCustom, "custom-expression", "", "", {"", "", "", ""}},
}};

const FamilyInfo& info(Family f) {
  for (const auto& fi : kFamilies) {
    if (fi.family == f) return fi;
  }
  fail(ErrorKind::kModel, "unknown family");
}

// Compiled per-capita rates for one spec.
class PerCapita {
 public:
  explicit PerCapita(const DensitySpec& spec) : params_(spec.params) {
    const auto [b, d] = per_capita_expressions(spec);
    ratexpr::Symbols symbols{{"x"}, {}};
    for (const auto& [name, value] : params_) symbols.parameters.push_back(name);
    birth_ = ratexpr::parse(b, symbols);
    death_ = ratexpr::parse(d, symbols);
  }

  double birth(double x) const { return eval(birth_, x); }
  double death(double x) const { return eval(death_, x); }

 private:
  double eval(const ratexpr::Expr& e, double x) const {
    const double v[1] = {x};
    return ratexpr::eval(e, ratexpr::Bindings{v, &params_});
  }

  std::map<std::string, double> params_;
  ratexpr::Expr birth_, death_;
};

void validate(const DensitySpec& spec) {
  if (!(spec.A > 0.0) || !std::isfinite(spec.A)) {
    fail(ErrorKind::kModel, "scale A must be positive");
  }
  const FamilyInfo& fi = info(spec.family);
  for (std::string_view name : fi.required) {
    if (name.empty()) continue;
    auto it = spec.params.find(std::string(name));
    if (it == spec.params.end()) {
      fail(ErrorKind::kModel, std::string(fi.name) + " needs parameter '" + std::string(name) + "'");
    }
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      fail(ErrorKind::kModel, "parameter '" + std::string(name) + "' must be positive");
    }
  }
  if (spec.family == Family::kCustom && (spec.birth_expr.empty() || spec.death_expr.empty())) {
    fail(ErrorKind::kModel, "custom-expression needs both birth and death expressions");
  }
}

}  // namespace

Family parse_family(std::string_view name) {
  for (const auto& fi : kFamilies) {
    if (fi.name == name) return fi.family;
  }
  fail(ErrorKind::kModel, "unknown model family '" + std::string(name) + "'");
}

std::string_view to_string(Family f) { return info(f).name; }

std::pair<std::string, std::string> per_capita_expressions(const DensitySpec& spec) {
  if (spec.family == Family::kCustom) return {spec.birth_expr, spec.death_expr};
  const FamilyInfo& fi = info(spec.family);
  return {std::string(fi.birth), std::string(fi.death)};
}

double equilibrium_density(const DensitySpec& spec) {
  validate(spec);
  if (spec.family == Family::kRicker) {
    const double b = spec.params.at("b");
    const double d = spec.params.at("d");
    if (b <= d) fail(ErrorKind::kNoEquilibrium, "ricker needs b > d for a positive equilibrium");
    return std::log(b / d) / spec.params.at("alpha");
  }
  const PerCapita rates(spec);
  auto gap = [&](double x) { return rates.birth(x) - rates.death(x); };
  if (!(gap(0.0) > 0.0)) {
    fail(ErrorKind::kNoEquilibrium, "birth does not exceed death at zero density");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (gap(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) {
      fail(ErrorKind::kNoEquilibrium, "birth exceeds death up to density 1e12");
    }
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, lo); ++iter) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DensityInstance make_density_model(const DensitySpec& spec, std::size_t cap) {
  const double c = equilibrium_density(spec);
  auto rates = std::make_shared<const PerCapita>(spec);
  const double A = spec.A;
  auto birth = [rates, A](std::size_t j) {
    const double x = static_cast<double>(j);
    return x * rates->birth(x / A);
  };
  auto death = [rates, A](std::size_t j) {
    const double x = static_cast<double>(j);
    return x * rates->death(x / A);
  };
  const auto s = static_cast<std::size_t>(std::max(1.0, std::floor(A * c)));
  if (s > cap) {
    fail(ErrorKind::kModel, "cap " + std::to_string(cap) + " lies below the suggested center " +
                                std::to_string(s));
  }
  return DensityInstance{BirthDeathModel(birth, death, cap), c, s};
}

}  // namespace quasieq::bd
