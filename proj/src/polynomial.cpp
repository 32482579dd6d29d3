#include "nilpotentizer/polynomial.hpp"

#include <cmath>
#include <sstream>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/expr.hpp"

namespace nilpotentizer {

std::vector<std::string> defaultVariableNames(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

Polynomial Polynomial::constant(int numVars, const Rational& c) {
  Polynomial p(numVars);
  p.addTerm(Exponents(numVars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int numVars, int index) {
  Polynomial p(numVars);
  Exponents e(numVars, 0);
  e.at(index) = 1;
  p.addTerm(e, 1);
  return p;
}

Polynomial Polynomial::parse(std::string_view text, int numVars, const std::vector<std::string>& names) {
  std::vector<std::string> vars = defaultVariableNames(numVars);
  if (!names.empty()) {
    if (static_cast<int>(names.size()) != numVars) throw std::invalid_argument("one name per variable is required");
    // Accept both the declared names and x0..x{n-1}.
    vars.insert(vars.end(), names.begin(), names.end());
  }
  Expression e = Expression::parse(text, vars);
  Polynomial p = e.toPolynomial(static_cast<int>(vars.size()));
  if (names.empty()) return p;
  Polynomial folded(numVars);
  for (const auto& [exps, c] : p.terms()) {
    Exponents f(numVars, 0);
    for (std::size_t i = 0; i < exps.size(); ++i) f[i % numVars] += exps[i];
    folded.addTerm(f, c);
  }
  return folded;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int x : e) s += x;
    d = std::max(d, s);
  }
  return d;
}

void Polynomial::addTerm(const Exponents& exponents, const Rational& c) {
  if (static_cast<int>(exponents.size()) != numVars_) throw DimensionMismatch("exponent length differs from variable count");
  if (sgn(c) == 0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) terms_.erase(it);
  }
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial d(numVars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Exponents f = e;
    --f[var];
    d.addTerm(f, c * e[var]);
  }
  return d;
}

double Polynomial::evaluate(const double* x) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double m = c.get_d();
    for (int i = 0; i < numVars_; ++i)
      if (e[i]) m *= std::pow(x[i], e[i]);
    sum += m;
  }
  return sum;
}

void Polynomial::requireSame(const Polynomial& o) const {
  if (numVars_ != o.numVars_) throw DimensionMismatch("polynomials in different numbers of variables");
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  requireSame(o);
  Polynomial r = *this;
  for (const auto& [e, c] : o.terms_) r.addTerm(e, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  requireSame(o);
  Polynomial r = *this;
  for (const auto& [e, c] : o.terms_) r.addTerm(e, -c);
  return r;
}

Polynomial Polynomial::operator-() const { return *this * Rational(-1); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  requireSame(o);
  Polynomial r(numVars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : o.terms_) {
      Exponents e = ea;
      for (int i = 0; i < numVars_; ++i) e[i] += eb[i];
      r.addTerm(e, ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::operator*(const Rational& c) const {
  Polynomial r(numVars_);
  for (const auto& [e, x] : terms_) r.addTerm(e, x * c);
  return r;
}

std::string Polynomial::toString(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  const std::vector<std::string> vars = names.empty() ? defaultVariableNames(numVars_) : names;
  std::ostringstream out;
  bool first = true;
  // Highest degree first reads more naturally.
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [e, c] = *it;
    Rational mag = abs(c);
    if (first) {
      if (sgn(c) < 0) out << "-";
    } else {
      out << (sgn(c) < 0 ? " - " : " + ");
    }
    first = false;
    bool constantTerm = true;
    for (int x : e) constantTerm = constantTerm && x == 0;
    bool needStar = false;
    if (mag != 1 || constantTerm) {
      out << mag.get_str();
      needStar = true;
    }
    for (int i = 0; i < numVars_; ++i) {
      if (e[i] == 0) continue;
      if (needStar) out << "*";
      out << vars[i];
      if (e[i] > 1) out << "^" << e[i];
      needStar = true;
    }
  }
  return out.str();
}

}  // namespace nilpotentizer
