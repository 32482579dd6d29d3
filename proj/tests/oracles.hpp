#pragma once

// Independent reference computations used by the tests. None of these call into the library.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Number of Lyndon words with the given weighted degree bound, by brute force over all words.
inline int countLyndonWords(const std::vector<int>& letterWeights, int maxWeight) {
  const int k = static_cast<int>(letterWeights.size());
  int minW = letterWeights[0];
  for (int w : letterWeights) minW = std::min(minW, w);
  int count = 0;
  std::function<void(std::vector<int>&, int)> rec = [&](std::vector<int>& word, int weight) {
    if (!word.empty()) {
      // Lyndon: strictly smaller than every proper rotation.
      bool lyndon = true;
      const std::size_t n = word.size();
      for (std::size_t r = 1; r < n && lyndon; ++r) {
        std::vector<int> rot(word.begin() + r, word.end());
        rot.insert(rot.end(), word.begin(), word.begin() + r);
        if (!(word < rot)) lyndon = false;
      }
      if (lyndon) ++count;
    }
    for (int a = 0; a < k; ++a) {
      if (weight + letterWeights[a] > maxWeight) continue;
      word.push_back(a);
      rec(word, weight + letterWeights[a]);
      word.pop_back();
    }
  };
  std::vector<int> word;
  (void)minW;
  rec(word, 0);
  return count;
}

/// Witt's formula: dimension of the degree-l part of the free Lie algebra on k generators.
inline int wittDimension(int k, int l) {
  auto mobius = [](int n) {
    int result = 1;
    for (int p = 2; p * p <= n; ++p) {
      if (n % p == 0) {
        n /= p;
        if (n % p == 0) return 0;
        result = -result;
      }
    }
    if (n > 1) result = -result;
    return result;
  };
  long sum = 0;
  for (int d = 1; d <= l; ++d) {
    if (l % d) continue;
    sum += mobius(d) * static_cast<long>(std::lround(std::pow(k, l / d)));
  }
  return static_cast<int>(sum / l);
}

/// Closed-form time-1 flow of mu d/dx + sum_i lambda_i x^i d/dy on the plane (i = 0..N-1).
inline Eigen::Vector2d grushinFlow(double mu, const std::vector<double>& lambda, double x, double y) {
  double dy = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double p = static_cast<double>(i + 1);
    if (std::abs(mu) < 1e-12) {
      dy += lambda[i] * std::pow(x, static_cast<double>(i));
    } else {
      dy += lambda[i] * (std::pow(x + mu, p) - std::pow(x, p)) / (p * mu);
    }
  }
  return {x + mu, y + dy};
}

/// Gap between two lines spanned by a and b.
inline double lineGap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd u = a.normalized(), v = b.normalized();
  return (u - u.dot(v) * v).norm();
}

}  // namespace oracle
