#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nilpotentizer/rational.hpp"

namespace nilpotentizer {

class Polynomial;

/// Arithmetic expression over named variables: + - * / ^, parentheses,
/// sqrt exp log sin cos abs, and the constant pi. Numbers are kept exactly.
class Expression {
 public:
  /// Throws ParseError (with character position) on malformed input.
  static Expression parse(std::string_view text, const std::vector<std::string>& variables);

  double evaluate(std::span<const double> values) const;
  /// Exact polynomial form; throws ParseError if the expression is not a polynomial.
  Polynomial toPolynomial(int numVars) const;
  const std::string& text() const { return text_; }

 private:
  enum class Kind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };
  struct Node {
    Kind kind = Kind::Number;
    Rational number;
    double value = 0.0;
    int variable = -1;
    int a = -1;
    int b = -1;
    std::string function;
    std::size_t position = 0;
  };
  friend class ExpressionParser;

  double eval(int id, std::span<const double> values) const;
  Polynomial poly(int id, int numVars) const;
  bool constantValue(int id, Rational& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string text_;
};

}  // namespace nilpotentizer
