#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>

#include "quasieq/error.hpp"
#include "quasieq/ratexpr/expr.hpp"

namespace quasieq::ratexpr {

namespace {

Expr node(auto kind, std::size_t offset) {
  return std::make_shared<const Node>(Node{std::move(kind), offset});
}

class Parser {
 public:
  Parser(std::string_view text, const Symbols& symbols) : text_(text), symbols_(symbols) {}

  Expr run() {
    skip_space();
    if (pos_ == text_.size()) error("empty expression");
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::kParse, "parse error at byte " + std::to_string(pos_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = node(Binary{BinaryOp::kAdd, lhs, term()}, at);
      } else if (accept('-')) {
        lhs = node(Binary{BinaryOp::kSub, lhs, term()}, at);
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = node(Binary{BinaryOp::kMul, lhs, unary()}, at);
      } else if (accept('/')) {
        lhs = node(Binary{BinaryOp::kDiv, lhs, unary()}, at);
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    skip_space();
    const std::size_t at = pos_;
    if (accept('-')) return node(Negate{unary()}, at);
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_space();
    const std::size_t at = pos_;
    if (accept('^')) return node(Binary{BinaryOp::kPow, base, unary()}, at);
    return base;
  }

  Expr primary() {
    skip_space();
    if (pos_ == text_.size()) error("unexpected end of input");
    const std::size_t at = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
        ++end;
      }
      const std::string name(text_.substr(pos_, end - pos_));
      pos_ = end;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') return call(name, at);
      const auto& vars = symbols_.variables;
      if (auto it = std::find(vars.begin(), vars.end(), name); it != vars.end()) {
        return node(Variable{name, static_cast<std::size_t>(it - vars.begin())}, at);
      }
      const auto& params = symbols_.parameters;
      if (std::find(params.begin(), params.end(), name) != params.end()) {
        return node(Parameter{name}, at);
      }
      pos_ = at;
      error("unknown identifier '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    };
    digits();
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      digits();
    }
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
      if (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) {
        end = e;
        digits();
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + at, text_.data() + end, value);
    if (ec != std::errc() || ptr != text_.data() + end) error("malformed number");
    pos_ = end;
    return node(Number{value}, at);
  }

  Expr call(const std::string& name, std::size_t at) {
    Function fn;
    std::size_t arity = 1;
    if (name == "exp") {
      fn = Function::kExp;
    } else if (name == "log") {
      fn = Function::kLog;
    } else if (name == "pow") {
      fn = Function::kPow;
      arity = 2;
    } else if (name == "min") {
      fn = Function::kMin;
      arity = 0;
    } else if (name == "max") {
      fn = Function::kMax;
      arity = 0;
    } else {
      pos_ = at;
      error("unknown function '" + name + "'");
    }
    expect('(');
    std::vector<Expr> args{expr()};
    while (accept(',')) args.push_back(expr());
    expect(')');
    if (arity != 0 && args.size() != arity) {
      pos_ = at;
      error(name + " takes " + std::to_string(arity) + " argument(s)");
    }
    if (arity == 0 && args.size() < 2) {
      pos_ = at;
      error(name + " takes at least 2 arguments");
    }
    return node(Call{fn, std::move(args)}, at);
  }

  std::string_view text_;
  const Symbols& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const Symbols& symbols) {
  return Parser(text, symbols).run();
}

}  // namespace quasieq::ratexpr
