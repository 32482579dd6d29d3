#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <vector>

namespace nilpotentizer {

using Rational = mpq_class;
using RVec = std::vector<Rational>;

/// Parses "3", "-1/2", "0.25" or "1e-3" into an exact rational.
Rational parseRational(std::string_view text);

std::string toString(const Rational& q);

inline double toDouble(const Rational& q) { return q.get_d(); }

}  // namespace nilpotentizer
