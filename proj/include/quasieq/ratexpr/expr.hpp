#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace quasieq::ratexpr {

// Small expression language for rate functions such as b*exp(-alpha*x).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | identifier | call | '(' expr ')'
//   call    := ('exp' | 'log' | 'pow' | 'min' | 'max') '(' expr (',' expr)* ')'
//
// Identifiers must be declared as variables or parameters.

struct Node;
using Expr = std::shared_ptr<const Node>;

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };
enum class Function { kExp, kLog, kPow, kMin, kMax };

struct Number {
  double value;
};
struct Parameter {
  std::string name;
};
struct Variable {
  std::string name;
  std::size_t index;
};
struct Negate {
  Expr arg;
};
struct Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
struct Call {
  Function fn;
  std::vector<Expr> args;
};

struct Node {
  std::variant<Number, Parameter, Variable, Negate, Binary, Call> kind;
  std::size_t offset = 0;  // byte offset in the source text
};

struct Symbols {
  std::vector<std::string> variables;  // variable i binds to values[i]
  std::vector<std::string> parameters;
};

struct Bindings {
  std::span<const double> variables;
  const std::map<std::string, double>* parameters = nullptr;
};

/// Throws Error(kParse) with the byte offset of the problem.
Expr parse(std::string_view text, const Symbols& symbols);

/// Canonical text; parse(print(e)) is structurally equal to e.
std::string print(const Expr& e);

/// Throws Error(kEval) on division by zero, log of a nonpositive number,
/// non-finite results or unbound identifiers.
double eval(const Expr& e, const Bindings& bindings);

/// Exact symbolic derivative with light constant folding. Throws
/// Error(kDomain) on min/max, which have no derivative everywhere.
Expr diff(const Expr& e, std::string_view variable);

bool structurally_equal(const Expr& a, const Expr& b);
bool depends_on(const Expr& e, std::string_view variable);
/// False if the expression uses min or max.
bool is_smooth(const Expr& e);

/// Parameter names referenced by the expression, sorted.
std::vector<std::string> referenced_parameters(const Expr& e);

}  // namespace quasieq::ratexpr
