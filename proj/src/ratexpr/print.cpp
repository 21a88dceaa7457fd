#include <array>
#include <charconv>
#include <string>

#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::ratexpr {

namespace {

// Binding strength, matching the grammar levels.
enum Level { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

int level(const Expr& e) {
  return std::visit(overloaded{
                        [](const Number& n) { return n.value < 0 ? int{kUnary} : int{kAtom}; },
                        [](const Parameter&) { return int{kAtom}; },
                        [](const Variable&) { return int{kAtom}; },
                        [](const Negate&) { return int{kUnary}; },
                        [](const Binary& b) {
                          switch (b.op) {
                            case BinaryOp::kAdd:
                            case BinaryOp::kSub: return int{kSum};
                            case BinaryOp::kMul:
                            case BinaryOp::kDiv: return int{kProduct};
                            case BinaryOp::kPow: return int{kPower};
                          }
                          return int{kAtom};
                        },
                        [](const Call&) { return int{kAtom}; },
                    },
                    e->kind);
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  if (v < 0) return "(" + s + ")";
  return s;
}

std::string wrap(const Expr& e, bool parens) {
  return parens ? "(" + print(e) + ")" : print(e);
}

const char* function_name(Function fn) {
  switch (fn) {
    case Function::kExp: return "exp";
    case Function::kLog: return "log";
    case Function::kPow: return "pow";
    case Function::kMin: return "min";
    case Function::kMax: return "max";
  }
  return "?";
}

}  // namespace

std::string print(const Expr& e) {
  return std::visit(
      overloaded{
          [](const Number& n) { return format_number(n.value); },
          [](const Parameter& p) { return p.name; },
          [](const Variable& v) { return v.name; },
          [](const Negate& n) { return "-" + wrap(n.arg, level(n.arg) < kUnary); },
          [](const Binary& b) {
            switch (b.op) {
              case BinaryOp::kAdd:
                return wrap(b.lhs, level(b.lhs) < kSum) + " + " + wrap(b.rhs, level(b.rhs) <= kSum);
              case BinaryOp::kSub:
                return wrap(b.lhs, level(b.lhs) < kSum) + " - " + wrap(b.rhs, level(b.rhs) <= kSum);
              case BinaryOp::kMul:
                return wrap(b.lhs, level(b.lhs) < kProduct) + "*" +
                       wrap(b.rhs, level(b.rhs) <= kProduct);
              case BinaryOp::kDiv:
                return wrap(b.lhs, level(b.lhs) < kProduct) + "/" +
                       wrap(b.rhs, level(b.rhs) <= kProduct);
              case BinaryOp::kPow:
                // The base binds tighter than '^'; the exponent is parsed as
                // a unary expression.
                return wrap(b.lhs, level(b.lhs) <= kPower) + "^" +
                       wrap(b.rhs, level(b.rhs) < kUnary);
            }
            return std::string();
          },
          [](const Call& c) {
            std::string out = std::string(function_name(c.fn)) + "(";
            for (std::size_t i = 0; i < c.args.size(); ++i) {
              if (i) out += ", ";
              out += print(c.args[i]);
            }
            return out + ")";
          },
      },
      e->kind);
}

}  // namespace quasieq::ratexpr
