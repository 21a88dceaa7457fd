#include "quasieq/cli/setup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <vector>

#include "quasieq/ctmc/csv.hpp"
#include "quasieq/error.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::cli {

namespace {

using ctmc::StateIndex;

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::kConfig, what); }

std::map<std::string, double> read_params(const Section& model) {
  std::map<std::string, double> params;
  const Section table = model.child("params");
  if (!table.present()) return params;
  for (const auto& [key, value] : table.node()->items()) params[key] = table.number(key);
  return params;
}

std::size_t positive_size(std::int64_t v, const std::string& where) {
  if (v < 1) config_error(where + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

StateIndex state_in_range(std::int64_t v, std::size_t n, const std::string& where) {
  if (v < 1 || static_cast<std::size_t>(v) > n) {
    config_error(where + " = " + std::to_string(v) + " is outside 1.." + std::to_string(n));
  }
  return StateIndex{static_cast<std::size_t>(v)};
}

// j beta(j / A) and j delta(j / A) evaluated without a cap.
std::pair<std::function<double(std::size_t)>, std::function<double(std::size_t)>>
untruncated_rates(const bd::DensitySpec& spec) {
  const auto [b, d] = bd::per_capita_expressions(spec);
  ratexpr::Symbols symbols{{"x"}, {}};
  for (const auto& [name, value] : spec.params) symbols.parameters.push_back(name);
  auto params = std::make_shared<const std::map<std::string, double>>(spec.params);
  auto make = [&](const std::string& text) {
    auto e = ratexpr::parse(text, symbols);
    const double A = spec.A;
    return std::function<double(std::size_t)>([e, params, A](std::size_t j) {
      const double x[1] = {static_cast<double>(j) / A};
      return static_cast<double>(j) * ratexpr::eval(e, ratexpr::Bindings{x, params.get()});
    });
  };
  return {make(b), make(d)};
}

ChainModel family_chain(const Section& model, const Overrides& overrides,
                        std::optional<double> A_override, double cap_factor) {
  model.allow_only({"kind", "family", "A", "params", "birth", "death", "cap", "s"});
  bd::DensitySpec spec;
  spec.family = bd::parse_family(model.string("family"));
  spec.params = read_params(model);
  spec.A = A_override ? *A_override : model.number("A");
  if (spec.family == bd::Family::kCustom) {
    spec.birth_expr = model.string("birth");
    spec.death_expr = model.string("death");
  } else if (model.has("birth") || model.has("death")) {
    config_error(model.path() + ": birth/death expressions are only read for custom-expression");
  }
  const double c = bd::equilibrium_density(spec);

  std::size_t cap = 0;
  if (overrides.cap) {
    cap = *overrides.cap;
  } else if (model.has("cap") && !A_override) {
    cap = positive_size(model.integer("cap"), model.where("cap"));
  } else {
    cap = static_cast<std::size_t>(std::ceil(cap_factor * spec.A * std::max(1.0, c)));
  }
  auto instance = bd::make_density_model(spec, cap);

  ChainModel out;
  out.kind = ModelKind::kBirthDeathFamily;
  out.cap = cap;
  out.s = StateIndex{instance.s};
  if (model.has("s") && !A_override) out.s = state_in_range(model.integer("s"), cap, model.where("s"));
  out.q = std::make_shared<const ctmc::SparseGenerator>(instance.model.generator());
  out.closed_form.emplace(std::move(instance.model));
  out.density = spec;
  out.c = c;
  std::tie(out.birth, out.death) = untruncated_rates(spec);
  return out;
}

ChainModel explicit_chain(const Section& model) {
  model.allow_only({"kind", "birth", "death", "s"});
  const auto b = model.numbers("birth");
  const auto d = model.numbers("death");
  if (b.empty() || b.size() != d.size()) {
    config_error(model.path() + ": birth and death must be nonempty arrays of equal length");
  }
  ChainModel out;
  out.kind = ModelKind::kBirthDeathExplicit;
  out.cap = b.size();
  out.closed_form.emplace(bd::BirthDeathModel::from_sequences(b, d));
  out.q = std::make_shared<const ctmc::SparseGenerator>(out.closed_form->generator());
  out.s = state_in_range(model.integer("s"), out.cap, model.where("s"));
  const auto rb = std::make_shared<const std::vector<double>>(b);
  const auto rd = std::make_shared<const std::vector<double>>(d);
  const std::size_t n = b.size();
  // The last birth rate is ignored by the closed forms; the simulator sees
  // the same finite chain.
  out.birth = [rb, n](std::size_t j) { return j >= 1 && j < n ? (*rb)[j - 1] : 0.0; };
  out.death = [rd, n](std::size_t j) { return j >= 1 && j <= n ? (*rd)[j - 1] : 0.0; };
  return out;
}

ChainModel general_chain(const Section& model, const std::filesystem::path& base_dir) {
  model.allow_only({"kind", "n", "transitions", "generator_csv", "s"});
  const bool has_list = model.has("transitions");
  const bool has_file = model.has("generator_csv");
  if (has_list == has_file) {
    config_error(model.path() + " needs exactly one of transitions or generator_csv");
  }
  const std::size_t n_given =
      model.has("n") ? positive_size(model.integer("n"), model.where("n")) : 0;
  ctmc::SparseGenerator q;
  if (has_list) {
    const Json& list = *model.raw("transitions");
    if (!list.is_array()) config_error(model.where("transitions") + " must be an array");
    std::vector<ctmc::Transition> entries;
    std::size_t n = n_given;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Json& row = list[i];
      const std::string where = model.where("transitions") + "[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != 3 || !row[0].is_number_integer() ||
          !row[1].is_number_integer() || !row[2].is_number()) {
        config_error(where + " must be [from, to, rate]");
      }
      const auto from = row[0].get<std::int64_t>();
      const auto to = row[1].get<std::int64_t>();
      if (from < 1 || to < 0) config_error(where + ": states are 1.. (0 is the cemetery)");
      entries.push_back({StateIndex{static_cast<std::size_t>(from)},
                         StateIndex{static_cast<std::size_t>(to)}, row[2].get<double>()});
      n = std::max({n, static_cast<std::size_t>(from), static_cast<std::size_t>(to)});
    }
    if (n == 0) config_error(model.path() + " describes an empty chain");
    q = ctmc::SparseGenerator(n, entries);
  } else {
    std::filesystem::path file = model.string("generator_csv");
    if (file.is_relative()) file = base_dir / file;
    std::ifstream in(file);
    if (!in) config_error("cannot open generator file " + file.string());
    q = ctmc::read_generator_csv(in, n_given);
  }
  ChainModel out;
  out.kind = ModelKind::kGeneralCtmc;
  out.cap = q.size();
  out.s = state_in_range(model.integer("s"), out.cap, model.where("s"));
  out.q = std::make_shared<const ctmc::SparseGenerator>(std::move(q));
  return out;
}

}  // namespace

ModelKind model_kind(const Json& config) {
  const Section model(Section(config, "config").raw("model"), "model");
  if (!model.present()) config_error("missing [model] table");
  const std::string kind = model.string("kind");
  if (kind == "birth-death-family") return ModelKind::kBirthDeathFamily;
  if (kind == "birth-death-explicit") return ModelKind::kBirthDeathExplicit;
  if (kind == "general-ctmc") return ModelKind::kGeneralCtmc;
  if (kind == "mpp") return ModelKind::kMpp;
  config_error("model.kind '" + kind +
               "' is not one of birth-death-family, birth-death-explicit, general-ctmc, mpp");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBirthDeathFamily: return "birth-death-family";
    case ModelKind::kBirthDeathExplicit: return "birth-death-explicit";
    case ModelKind::kGeneralCtmc: return "general-ctmc";
    case ModelKind::kMpp: return "mpp";
  }
  return "unknown";
}

ChainModel build_chain(const Json& config, const Overrides& overrides,
                       const std::filesystem::path& base_dir, std::optional<double> A_override,
                       double cap_factor) {
  const Section model(Section(config, "config").raw("model"), "model");
  switch (model_kind(config)) {
    case ModelKind::kBirthDeathFamily:
      return family_chain(model, overrides, A_override, cap_factor);
    case ModelKind::kBirthDeathExplicit:
      return explicit_chain(model);
    case ModelKind::kGeneralCtmc:
      return general_chain(model, base_dir);
    case ModelKind::kMpp:
      break;
  }
  config_error("this command needs a chain model, not kind = mpp");
}

ctmc::ReturnDistribution build_return(const Json& config, const ChainModel& chain) {
  const Section ret(Section(config, "config").raw("return"), "return");
  const std::size_t n = chain.cap;
  if (!ret.present()) return ctmc::ReturnDistribution::point_mass(n, chain.s);
  ret.allow_only({"kind", "state", "first", "last", "last_per_A", "weights"});
  const std::string kind = ret.string("kind", "point");
  if (kind == "point") {
    const StateIndex at = ret.has("state")
                              ? state_in_range(ret.integer("state"), n, ret.where("state"))
                              : chain.s;
    return ctmc::ReturnDistribution::point_mass(n, at);
  }
  if (kind == "uniform") {
    const StateIndex first = state_in_range(ret.integer("first", 1), n, ret.where("first"));
    std::int64_t last = 0;
    if (ret.has("last_per_A")) {
      if (!chain.density) config_error(ret.where("last_per_A") + " needs a birth-death-family model");
      last = static_cast<std::int64_t>(std::llround(ret.number("last_per_A") * chain.density->A));
    } else {
      last = ret.integer("last");
    }
    const StateIndex last_state = state_in_range(last, n, ret.where("last"));
    if (last_state < first) config_error(ret.path() + ": last lies below first");
    return ctmc::ReturnDistribution::uniform(n, first, last_state);
  }
  if (kind == "weights") {
    auto w = ret.numbers("weights");
    if (w.size() != n) {
      config_error(ret.where("weights") + " needs " + std::to_string(n) + " entries");
    }
    double total = 0.0;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) config_error(ret.where("weights") + " must be nonnegative");
      total += v;
    }
    if (!(total > 0.0)) config_error(ret.where("weights") + " has zero mass");
    for (double& v : w) v /= total;
    return ctmc::ReturnDistribution(std::move(w));
  }
  config_error("return.kind '" + kind + "' is not one of point, uniform, weights");
}

MppSetup build_mpp(const Json& config, const Overrides& overrides,
                   std::optional<double> N_override) {
  const Section model(Section(config, "config").raw("model"), "model");
  if (model_kind(config) != ModelKind::kMpp) config_error("this command needs kind = mpp");
  model.allow_only({"kind", "dimension", "N", "params", "jumps", "x0", "radius", "point_cap"});
  const std::size_t d = positive_size(model.integer("dimension"), model.where("dimension"));
  const Json* jumps = model.raw("jumps");
  if (jumps == nullptr || !jumps->is_array() || jumps->empty()) {
    config_error(model.where("jumps") + " must be a nonempty array of {J, rate} tables");
  }
  std::vector<mpp::JumpSpec> specs;
  for (std::size_t i = 0; i < jumps->size(); ++i) {
    const Section jump(&(*jumps)[i], model.where("jumps") + "[" + std::to_string(i) + "]");
    jump.allow_only({"J", "rate"});
    mpp::JumpSpec spec;
    for (auto v : jump.integers("J")) spec.J.push_back(static_cast<int>(v));
    spec.rate = jump.string("rate");
    specs.push_back(std::move(spec));
  }
  const double N = N_override ? *N_override : model.number("N");
  MppSetup out{mpp::PopulationModel(d, std::move(specs), read_params(model), N),
               Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d))};
  if (model.has("x0")) {
    const auto x0 = model.numbers("x0");
    if (x0.size() != d) config_error(model.where("x0") + " needs " + std::to_string(d) + " entries");
    for (std::size_t i = 0; i < d; ++i) out.x0(static_cast<Eigen::Index>(i)) = x0[i];
  }
  out.radius = overrides.radius ? *overrides.radius : model.number("radius", 4.0);
  if (!(out.radius > 0.0)) config_error("radius must be positive");
  if (overrides.cap) {
    out.point_cap = *overrides.cap;
  } else if (model.has("point_cap")) {
    out.point_cap = positive_size(model.integer("point_cap"), model.where("point_cap"));
  }
  return out;
}

}  // namespace quasieq::cli
