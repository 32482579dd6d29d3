#include "nilpotentizer/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace nilpotentizer {

Rational parseRational(std::string_view text) {
  std::string s(text);
  auto bad = [&]() { return std::invalid_argument("not a rational number: '" + s + "'"); };
  if (s.empty()) throw bad();
  if (s.find('/') != std::string::npos) {
    Rational q;
    std::string t = s;
    if (!t.empty() && t[0] == '+') t.erase(0, 1);
    if (q.set_str(t, 10) != 0) throw bad();
    if (q.get_den() == 0) throw bad();
    q.canonicalize();
    return q;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  std::string digits;
  long fractionDigits = 0;
  bool seenDigit = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    digits += s[pos++];
    seenDigit = true;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      digits += s[pos++];
      ++fractionDigits;
      seenDigit = true;
    }
  }
  if (!seenDigit) throw bad();
  long exponent = 0;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    ++pos;
    std::size_t used = 0;
    try {
      exponent = std::stol(s.substr(pos), &used);
    } catch (const std::exception&) {
      throw bad();
    }
    pos += used;
  }
  if (pos != s.size()) throw bad();
  mpz_class mantissa(digits, 10);
  long shift = exponent - fractionDigits;
  mpz_class ten = 10;
  mpz_class scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational q = shift >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

std::string toString(const Rational& q) { return q.get_str(); }

}  // namespace nilpotentizer
