#pragma once

// Truncated free associative algebra over the rationals; words are byte strings of letter indices.

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nilpotentizer/rational.hpp"

namespace nilpotentizer::freeassoc {

using Word = std::string;
using Poly = std::map<Word, Rational>;

constexpr int kUnbounded = std::numeric_limits<int>::max();

Poly letter(int a);
Poly one();
Poly add(const Poly& a, const Poly& b);
Poly subtract(const Poly& a, const Poly& b);
Poly scale(const Poly& a, const Rational& c);
/// Product with words longer than maxLength dropped.
Poly multiply(const Poly& a, const Poly& b, int maxLength = kUnbounded);
Poly exponential(const Poly& x, int maxLength);
/// log(p) for p with constant term 1.
Poly logarithm(const Poly& p, int maxLength);

bool isLyndon(const Word& w);
/// All Lyndon words over {0..alphabet-1} of length <= maxLength, in lexicographic order.
std::vector<Word> lyndonWords(int alphabet, int maxLength);
/// w = uv with v the longest proper Lyndon suffix.
std::pair<Word, Word> standardFactorization(const Word& w);
/// Expansion of the standard bracketing of a Lyndon word.
Poly lyndonExpansion(const Word& w);
/// Coordinates of a Lie polynomial in the Lyndon basis; throws if p is not a Lie polynomial.
std::vector<std::pair<Word, Rational>> lyndonCoordinates(Poly p);

}  // namespace nilpotentizer::freeassoc
