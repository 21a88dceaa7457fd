#include <cmath>
#include <string>

#include "quasieq/error.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::ratexpr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

const Number* as_number(const Expr& e) { return std::get_if<Number>(&e->kind); }

bool is_value(const Expr& e, double v) {
  const Number* n = as_number(e);
  return n != nullptr && n->value == v;
}

// Negative constants are built as Negate(Number) so that printed text parses
// back to the same tree.
Expr num(double v) {
  if (v < 0) {
    return std::make_shared<const Node>(
        Node{Negate{std::make_shared<const Node>(Node{Number{-v}, 0})}, 0});
  }
  return std::make_shared<const Node>(Node{Number{v}, 0});
}

Expr neg(const Expr& a) {
  if (const Number* n = as_number(a)) return num(-n->value);
  if (const auto* inner = std::get_if<Negate>(&a->kind)) return inner->arg;
  return std::make_shared<const Node>(Node{Negate{a}, 0});
}

Expr bin(BinaryOp op, const Expr& a, const Expr& b) {
  const Number* x = as_number(a);
  const Number* y = as_number(b);
  switch (op) {
    case BinaryOp::kAdd:
      if (x && y) return num(x->value + y->value);
      if (is_value(a, 0.0)) return b;
      if (is_value(b, 0.0)) return a;
      break;
    case BinaryOp::kSub:
      if (x && y) return num(x->value - y->value);
      if (is_value(b, 0.0)) return a;
      if (is_value(a, 0.0)) return neg(b);
      break;
    case BinaryOp::kMul:
      if (x && y) return num(x->value * y->value);
      if (is_value(a, 0.0) || is_value(b, 0.0)) return num(0.0);
      if (is_value(a, 1.0)) return b;
      if (is_value(b, 1.0)) return a;
      break;
    case BinaryOp::kDiv:
      if (is_value(a, 0.0)) return num(0.0);
      if (is_value(b, 1.0)) return a;
      break;
    case BinaryOp::kPow:
      if (is_value(b, 1.0)) return a;
      if (is_value(b, 0.0)) return num(1.0);
      break;
  }
  return std::make_shared<const Node>(Node{Binary{op, a, b}, 0});
}

Expr call(Function fn, std::vector<Expr> args) {
  return std::make_shared<const Node>(Node{Call{fn, std::move(args)}, 0});
}

// d/dx a^b for general a, b.
Expr power_rule(const Expr& a, const Expr& b, const Expr& da, const Expr& db,
                const Expr& whole) {
  if (is_value(db, 0.0)) {
    return bin(BinaryOp::kMul, bin(BinaryOp::kMul, b, bin(BinaryOp::kPow, a, bin(BinaryOp::kSub, b, num(1.0)))), da);
  }
  const Expr inner = bin(BinaryOp::kAdd, bin(BinaryOp::kMul, db, call(Function::kLog, {a})),
                         bin(BinaryOp::kDiv, bin(BinaryOp::kMul, b, da), a));
  return bin(BinaryOp::kMul, whole, inner);
}

Expr d(const Expr& e, std::string_view x) {
  return std::visit(
      overloaded{
          [](const Number&) { return num(0.0); },
          [](const Parameter&) { return num(0.0); },
          [&](const Variable& v) { return num(v.name == x ? 1.0 : 0.0); },
          [&](const Negate& n) { return neg(d(n.arg, x)); },
          [&](const Binary& b) {
            const Expr da = d(b.lhs, x);
            const Expr db = d(b.rhs, x);
            switch (b.op) {
              case BinaryOp::kAdd: return bin(BinaryOp::kAdd, da, db);
              case BinaryOp::kSub: return bin(BinaryOp::kSub, da, db);
              case BinaryOp::kMul:
                return bin(BinaryOp::kAdd, bin(BinaryOp::kMul, da, b.rhs),
                           bin(BinaryOp::kMul, b.lhs, db));
              case BinaryOp::kDiv:
                return bin(BinaryOp::kDiv,
                           bin(BinaryOp::kSub, bin(BinaryOp::kMul, da, b.rhs),
                               bin(BinaryOp::kMul, b.lhs, db)),
                           bin(BinaryOp::kPow, b.rhs, num(2.0)));
              case BinaryOp::kPow: return power_rule(b.lhs, b.rhs, da, db, e);
            }
            return num(0.0);
          },
          [&](const Call& c) {
            switch (c.fn) {
              case Function::kExp: return bin(BinaryOp::kMul, e, d(c.args[0], x));
              case Function::kLog: return bin(BinaryOp::kDiv, d(c.args[0], x), c.args[0]);
              case Function::kPow:
                return power_rule(c.args[0], c.args[1], d(c.args[0], x), d(c.args[1], x), e);
              case Function::kMin:
              case Function::kMax:
                break;
            }
            fail(ErrorKind::kDomain, "min/max at byte " + std::to_string(e->offset) +
                                         " has no derivative everywhere");
          },
      },
      e->kind);
}

}  // namespace

Expr diff(const Expr& e, std::string_view variable) {
  if (!is_smooth(e)) {
    fail(ErrorKind::kDomain, "cannot differentiate an expression that uses min or max");
  }
  return d(e, variable);
}

}  // namespace quasieq::ratexpr
