#pragma once

// Hand-derived data for the generalised Grushin plane, independent of the library's bracket code.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Realization of the free basis for depth 2 and 3: basis element k maps to coeff * x^power d/dy,
/// or to d/dx when power < 0. coeff 0 means the zero field.
struct Monomial {
  double coeff;
  int power;
};

inline std::vector<Monomial> grushinRealization(int depth) {
  if (depth == 2) return {{1, -1}, {1, 1}, {1, 0}};
  // e1 = dx, e2 = x^2 dy, e3 = [e1,e2] = 2x dy, e4 = [e1,e3] = 2 dy, e5 = [e3,e2] = 0
  return {{1, -1}, {1, 2}, {2, 1}, {2, 0}, {0, 0}};
}

inline std::vector<int> grushinWeights(int depth) {
  if (depth == 2) return {1, 1, 2};
  return {1, 1, 2, 3, 3};
}

/// Preimage under natural_{(0,b),0} of the subspace of the osculating algebra at (0,b) that the
/// paper lists for slope lambda (finite) or for a/t -> infinity (infinite = true).
inline Eigen::MatrixXd grushinPreimage(int depth, double lambda, bool infinite) {
  const auto real = grushinRealization(depth);
  const auto weights = grushinWeights(depth);
  const int n = static_cast<int>(real.size());
  // Osculating coordinates: index 0 = [dx]_1, index N - i = [x^i dy]_{N-i} ... stored as index 1 + (N-1-i).
  const int m = depth + 1;
  auto yIndex = [&](int i) { return 1 + (depth - 1 - i); };
  Eigen::MatrixXd evalMap = Eigen::MatrixXd::Zero(m, n);
  for (int k = 0; k < n; ++k) {
    if (real[k].coeff == 0.0) continue;
    if (real[k].power < 0) {
      evalMap(0, k) = real[k].coeff;
    } else if (real[k].power == depth - weights[k]) {
      evalMap(yIndex(real[k].power), k) = real[k].coeff;
    }
  }
  std::vector<Eigen::VectorXd> spanning;
  if (infinite) {
    for (int i = 0; i <= depth - 2; ++i) spanning.push_back(Eigen::VectorXd::Unit(m, yIndex(i)));
  } else {
    for (int i = 1; i <= depth - 1; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
      v(yIndex(i - 1)) = lambda;
      v(yIndex(i)) = -1.0;
      spanning.push_back(v);
    }
  }
  Eigen::MatrixXd l(m, spanning.size());
  for (std::size_t c = 0; c < spanning.size(); ++c) l.col(c) = spanning[c];
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(l);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd perp = q.rightCols(m - l.cols());
  // {v : evalMap v in L} = ker(perp^T evalMap)
  Eigen::MatrixXd constraint = perp.transpose() * evalMap;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(constraint);
  return lu.kernel();
}

}  // namespace oracle
