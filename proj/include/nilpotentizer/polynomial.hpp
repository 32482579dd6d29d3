#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nilpotentizer/rational.hpp"

namespace nilpotentizer {

/// Multivariate polynomial with exact rational coefficients. Zero coefficients are never stored.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int numVars = 0) : numVars_(numVars) {}
  static Polynomial constant(int numVars, const Rational& c);
  static Polynomial variable(int numVars, int index);
  /// Parses strings such as "x0^2*x1 - 3*x1". Names default to x0..x{n-1}.
  static Polynomial parse(std::string_view text, int numVars, const std::vector<std::string>& names = {});

  int numVars() const { return numVars_; }
  const std::map<Exponents, Rational>& terms() const { return terms_; }
  bool isZero() const { return terms_.empty(); }
  int degree() const;

  void addTerm(const Exponents& exponents, const Rational& c);
  Polynomial derivative(int var) const;
  double evaluate(const double* x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(const Rational& c) const;
  bool operator==(const Polynomial& o) const { return numVars_ == o.numVars_ && terms_ == o.terms_; }

  std::string toString(const std::vector<std::string>& names = {}) const;

 private:
  void requireSame(const Polynomial& o) const;

  int numVars_;
  std::map<Exponents, Rational> terms_;
};

std::vector<std::string> defaultVariableNames(int n);

}  // namespace nilpotentizer
