#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "quasieq/error.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::ratexpr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void eval_error(const Node& n, const std::string& what) {
  fail(ErrorKind::kEval, "evaluation error at byte " + std::to_string(n.offset) + ": " + what);
}

double checked(const Node& n, double v) {
  if (!std::isfinite(v)) eval_error(n, "non-finite result");
  return v;
}

double eval_node(const Expr& e, const Bindings& b) {
  const Node& n = *e;
  return std::visit(
      overloaded{
          [](const Number& x) { return x.value; },
          [&](const Parameter& p) {
            if (b.parameters == nullptr) eval_error(n, "parameter '" + p.name + "' is unbound");
            auto it = b.parameters->find(p.name);
            if (it == b.parameters->end()) eval_error(n, "parameter '" + p.name + "' is unbound");
            return it->second;
          },
          [&](const Variable& v) {
            if (v.index >= b.variables.size()) {
              eval_error(n, "variable '" + v.name + "' is unbound");
            }
            return b.variables[v.index];
          },
          [&](const Negate& x) { return -eval_node(x.arg, b); },
          [&](const Binary& x) {
            const double l = eval_node(x.lhs, b);
            const double r = eval_node(x.rhs, b);
            switch (x.op) {
              case BinaryOp::kAdd: return checked(n, l + r);
              case BinaryOp::kSub: return checked(n, l - r);
              case BinaryOp::kMul: return checked(n, l * r);
              case BinaryOp::kDiv:
                if (r == 0.0) eval_error(n, "division by zero");
                return checked(n, l / r);
              case BinaryOp::kPow: return checked(n, std::pow(l, r));
            }
            return 0.0;
          },
          [&](const Call& c) {
            std::vector<double> a;
            a.reserve(c.args.size());
            for (const auto& arg : c.args) a.push_back(eval_node(arg, b));
            switch (c.fn) {
              case Function::kExp: return checked(n, std::exp(a[0]));
              case Function::kLog:
                if (a[0] <= 0.0) eval_error(n, "log of a nonpositive number");
                return checked(n, std::log(a[0]));
              case Function::kPow: return checked(n, std::pow(a[0], a[1]));
              case Function::kMin: return *std::min_element(a.begin(), a.end());
              case Function::kMax: return *std::max_element(a.begin(), a.end());
            }
            return 0.0;
          },
      },
      n.kind);
}

template <class F>
void walk(const Expr& e, F&& f) {
  f(*e);
  std::visit(overloaded{
                 [&](const Negate& x) { walk(x.arg, f); },
                 [&](const Binary& x) {
                   walk(x.lhs, f);
                   walk(x.rhs, f);
                 },
                 [&](const Call& c) {
                   for (const auto& a : c.args) walk(a, f);
                 },
                 [](const auto&) {},
             },
             e->kind);
}

}  // namespace

double eval(const Expr& e, const Bindings& bindings) {
  return eval_node(e, bindings);
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a->kind.index() != b->kind.index()) return false;
  return std::visit(
      overloaded{
          [&](const Number& x) { return x.value == std::get<Number>(b->kind).value; },
          [&](const Parameter& x) { return x.name == std::get<Parameter>(b->kind).name; },
          [&](const Variable& x) {
            const auto& y = std::get<Variable>(b->kind);
            return x.name == y.name && x.index == y.index;
          },
          [&](const Negate& x) {
            return structurally_equal(x.arg, std::get<Negate>(b->kind).arg);
          },
          [&](const Binary& x) {
            const auto& y = std::get<Binary>(b->kind);
            return x.op == y.op && structurally_equal(x.lhs, y.lhs) &&
                   structurally_equal(x.rhs, y.rhs);
          },
          [&](const Call& x) {
            const auto& y = std::get<Call>(b->kind);
            if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i) {
              if (!structurally_equal(x.args[i], y.args[i])) return false;
            }
            return true;
          },
      },
      a->kind);
}

bool depends_on(const Expr& e, std::string_view variable) {
  bool found = false;
  walk(e, [&](const Node& n) {
    if (const auto* v = std::get_if<Variable>(&n.kind); v && v->name == variable) found = true;
  });
  return found;
}

bool is_smooth(const Expr& e) {
  bool smooth = true;
  walk(e, [&](const Node& n) {
    if (const auto* c = std::get_if<Call>(&n.kind);
        c && (c->fn == Function::kMin || c->fn == Function::kMax)) {
      smooth = false;
    }
  });
  return smooth;
}

std::vector<std::string> referenced_parameters(const Expr& e) {
  std::set<std::string> names;
  walk(e, [&](const Node& n) {
    if (const auto* p = std::get_if<Parameter>(&n.kind)) names.insert(p->name);
  });
  return {names.begin(), names.end()};
}

}  // namespace quasieq::ratexpr
