#include "nilpotentizer/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/polynomial.hpp"

namespace nilpotentizer {

class ExpressionParser {
 public:
  ExpressionParser(Expression& e, std::string_view text, const std::vector<std::string>& variables)
      : e_(e), text_(text), variables_(variables) {}

  void run() {
    skipSpace();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    e_.root_ = parseSum();
    skipSpace();
    if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
  }

 private:
  using Kind = Expression::Kind;

  int add(Expression::Node node) {
    e_.nodes_.push_back(std::move(node));
    return static_cast<int>(e_.nodes_.size()) - 1;
  }

  int binary(Kind kind, int a, int b, std::size_t position) {
    Expression::Node node;
    node.kind = kind;
    node.a = a;
    node.b = b;
    node.position = position;
    return add(std::move(node));
  }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int parseSum() {
    int left = parseProduct();
    while (true) {
      skipSpace();
      const std::size_t at = pos_;
      if (accept('+')) {
        left = binary(Kind::Add, left, parseProduct(), at);
      } else if (accept('-')) {
        left = binary(Kind::Sub, left, parseProduct(), at);
      } else {
        return left;
      }
    }
  }

  int parseProduct() {
    int left = parseUnary();
    while (true) {
      skipSpace();
      const std::size_t at = pos_;
      if (accept('*')) {
        left = binary(Kind::Mul, left, parseUnary(), at);
      } else if (accept('/')) {
        left = binary(Kind::Div, left, parseUnary(), at);
      } else {
        return left;
      }
    }
  }

  int parseUnary() {
    skipSpace();
    const std::size_t at = pos_;
    if (accept('-')) {
      Expression::Node node;
      node.kind = Kind::Neg;
      node.a = parseUnary();
      node.position = at;
      return add(std::move(node));
    }
    if (accept('+')) return parseUnary();
    return parsePower();
  }

  int parsePower() {
    int base = parsePrimary();
    skipSpace();
    const std::size_t at = pos_;
    if (accept('^')) return binary(Kind::Pow, base, parseUnary(), at);
    return base;
  }

  int parsePrimary() {
    skipSpace();
    if (pos_ >= text_.size()) throw ParseError("expected operand", pos_);
    const std::size_t start = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parseSum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parseNumber();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) {
          Expression::Node node;
          node.kind = Kind::Variable;
          node.variable = static_cast<int>(i);
          node.position = start;
          return add(std::move(node));
        }
      }
      if (name == "pi") {
        Expression::Node node;
        node.kind = Kind::Call;
        node.function = "pi";
        node.position = start;
        node.value = std::numbers::pi;
        return add(std::move(node));
      }
      static const char* functions[] = {"sqrt", "exp", "log", "sin", "cos", "abs"};
      for (const char* f : functions) {
        if (name == f) {
          if (!accept('(')) throw ParseError("expected '(' after " + name, pos_);
          Expression::Node node;
          node.kind = Kind::Call;
          node.function = name;
          node.a = parseSum();
          node.position = start;
          if (!accept(')')) throw ParseError("expected ')'", pos_);
          return add(std::move(node));
        }
      }
      throw ParseError("unknown identifier '" + name + "'", start);
    }
    throw ParseError(std::string("expected operand, found '") + c + "'", pos_);
  }

  int parseNumber() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    Expression::Node node;
    node.kind = Kind::Number;
    node.position = start;
    try {
      node.number = parseRational(text_.substr(start, pos_ - start));
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed number", start);
    }
    node.value = node.number.get_d();
    return add(std::move(node));
  }

  Expression& e_;
  std::string_view text_;
  const std::vector<std::string>& variables_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = std::string(text);
  ExpressionParser(e, e.text_, variables).run();
  return e;
}

double Expression::evaluate(std::span<const double> values) const { return eval(root_, values); }

double Expression::eval(int id, std::span<const double> values) const {
  const Node& n = nodes_[id];
  switch (n.kind) {
    case Kind::Number:
      return n.value;
    case Kind::Variable:
      return values[n.variable];
    case Kind::Add:
      return eval(n.a, values) + eval(n.b, values);
    case Kind::Sub:
      return eval(n.a, values) - eval(n.b, values);
    case Kind::Mul:
      return eval(n.a, values) * eval(n.b, values);
    case Kind::Div:
      return eval(n.a, values) / eval(n.b, values);
    case Kind::Pow: {
      const double base = eval(n.a, values);
      Rational e;
      if (constantValue(n.b, e) && e.get_den() == 1) return std::pow(base, static_cast<int>(e.get_num().get_si()));
      return std::pow(base, eval(n.b, values));
    }
    case Kind::Neg:
      return -eval(n.a, values);
    case Kind::Call: {
      if (n.function == "pi") return n.value;
      const double x = eval(n.a, values);
      if (n.function == "sqrt") return std::sqrt(x);
      if (n.function == "exp") return std::exp(x);
      if (n.function == "log") return std::log(x);
      if (n.function == "sin") return std::sin(x);
      if (n.function == "cos") return std::cos(x);
      return std::abs(x);
    }
  }
  return 0.0;
}

bool Expression::constantValue(int id, Rational& out) const {
  const Node& n = nodes_[id];
  Rational a, b;
  switch (n.kind) {
    case Kind::Number:
      out = n.number;
      return true;
    case Kind::Neg:
      if (!constantValue(n.a, a)) return false;
      out = -a;
      return true;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
      if (!constantValue(n.a, a) || !constantValue(n.b, b)) return false;
      if (n.kind == Kind::Add) out = a + b;
      if (n.kind == Kind::Sub) out = a - b;
      if (n.kind == Kind::Mul) out = a * b;
      if (n.kind == Kind::Div) {
        if (sgn(b) == 0) return false;
        out = a / b;
      }
      return true;
    default:
      return false;
  }
}

Polynomial Expression::toPolynomial(int numVars) const { return poly(root_, numVars); }

Polynomial Expression::poly(int id, int numVars) const {
  const Node& n = nodes_[id];
  switch (n.kind) {
    case Kind::Number:
      return Polynomial::constant(numVars, n.number);
    case Kind::Variable:
      return Polynomial::variable(numVars, n.variable);
    case Kind::Add:
      return poly(n.a, numVars) + poly(n.b, numVars);
    case Kind::Sub:
      return poly(n.a, numVars) - poly(n.b, numVars);
    case Kind::Mul:
      return poly(n.a, numVars) * poly(n.b, numVars);
    case Kind::Neg:
      return -poly(n.a, numVars);
    case Kind::Div: {
      Rational d;
      if (!constantValue(n.b, d) || sgn(d) == 0)
        throw ParseError("division is only allowed by a nonzero constant", n.position);
      return poly(n.a, numVars) * Rational(1 / d);
    }
    case Kind::Pow: {
      Rational e;
      if (!constantValue(n.b, e) || e.get_den() != 1 || sgn(e) < 0 || e > 64)
        throw ParseError("exponent must be a constant non-negative integer", n.position);
      Polynomial base = poly(n.a, numVars);
      Polynomial result = Polynomial::constant(numVars, 1);
      for (long k = 0; k < e.get_num().get_si(); ++k) result = result * base;
      return result;
    }
    case Kind::Call:
      throw ParseError("function '" + n.function + "' is not polynomial", n.position);
  }
  return Polynomial(numVars);
}

}  // namespace nilpotentizer
