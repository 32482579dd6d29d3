#include "free_assoc.hpp"

#include <stdexcept>

namespace nilpotentizer::freeassoc {

namespace {

void accumulate(Poly& target, const Word& w, const Rational& c) {
  auto [it, inserted] = target.try_emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) target.erase(it);
  } else if (sgn(c) == 0) {
    target.erase(it);
  }
}

}  // namespace

Poly letter(int a) { return Poly{{Word(1, static_cast<char>(a)), Rational(1)}}; }

Poly one() { return Poly{{Word(), Rational(1)}}; }

Poly add(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [w, c] : b) accumulate(out, w, c);
  return out;
}

Poly subtract(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [w, c] : b) accumulate(out, w, -c);
  return out;
}

Poly scale(const Poly& a, const Rational& c) {
  Poly out;
  if (sgn(c) == 0) return out;
  for (const auto& [w, x] : a) out.emplace(w, x * c);
  return out;
}

Poly multiply(const Poly& a, const Poly& b, int maxLength) {
  Poly out;
  for (const auto& [wa, ca] : a) {
    for (const auto& [wb, cb] : b) {
      if (static_cast<long>(wa.size() + wb.size()) > maxLength) continue;
      accumulate(out, wa + wb, ca * cb);
    }
  }
  return out;
}

Poly exponential(const Poly& x, int maxLength) {
  Poly result = one();
  Poly power = one();
  for (int k = 1; k <= maxLength; ++k) {
    power = scale(multiply(power, x, maxLength), Rational(1, k));
    if (power.empty()) break;
    result = add(result, power);
  }
  return result;
}

Poly logarithm(const Poly& p, int maxLength) {
  auto constant = p.find(Word());
  if (constant == p.end() || constant->second != 1) throw std::invalid_argument("logarithm needs constant term 1");
  Poly z = subtract(p, one());
  Poly result;
  Poly power = one();
  for (int m = 1; m <= maxLength; ++m) {
    power = multiply(power, z, maxLength);
    if (power.empty()) break;
    Rational c(m % 2 == 1 ? 1 : -1, m);
    result = add(result, scale(power, c));
  }
  return result;
}

bool isLyndon(const Word& w) {
  if (w.empty()) return false;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!(w < w.substr(i))) return false;
  return true;
}

std::vector<Word> lyndonWords(int alphabet, int maxLength) {
  std::vector<Word> out;
  if (alphabet < 1 || maxLength < 1) return out;
  std::vector<int> w{-1};
  while (!w.empty()) {
    ++w.back();
    Word word;
    for (int c : w) word.push_back(static_cast<char>(c));
    out.push_back(word);
    const std::size_t m = w.size();
    while (static_cast<int>(w.size()) < maxLength) w.push_back(w[w.size() - m]);
    while (!w.empty() && w.back() == alphabet - 1) w.pop_back();
  }
  return out;
}

std::pair<Word, Word> standardFactorization(const Word& w) {
  for (std::size_t i = 1; i < w.size(); ++i) {
    Word suffix = w.substr(i);
    if (isLyndon(suffix)) return {w.substr(0, i), suffix};
  }
  throw std::invalid_argument("standard factorization needs a Lyndon word of length >= 2");
}

Poly lyndonExpansion(const Word& w) {
  if (w.size() == 1) return Poly{{w, Rational(1)}};
  auto [u, v] = standardFactorization(w);
  Poly pu = lyndonExpansion(u);
  Poly pv = lyndonExpansion(v);
  return subtract(multiply(pu, pv), multiply(pv, pu));
}

std::vector<std::pair<Word, Rational>> lyndonCoordinates(Poly p) {
  std::vector<std::pair<Word, Rational>> out;
  while (!p.empty()) {
    const Word w = p.begin()->first;
    const Rational c = p.begin()->second;
    if (w.empty() || !isLyndon(w)) throw std::logic_error("polynomial is not a Lie element");
    out.emplace_back(w, c);
    p = subtract(p, scale(lyndonExpansion(w), c));
  }
  return out;
}

}  // namespace nilpotentizer::freeassoc
