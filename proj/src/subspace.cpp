#include "nilpotentizer/subspace.hpp"

#include <algorithm>

#include "nilpotentizer/errors.hpp"

namespace nilpotentizer {

Subspace::Subspace(Eigen::MatrixXd orthonormalBasis, double tol) : basis_(std::move(orthonormalBasis)), tol_(tol) {}

Subspace Subspace::span(const Eigen::MatrixXd& vectors, double relTol) {
  const int n = static_cast<int>(vectors.rows());
  if (vectors.cols() == 0) return zero(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vectors, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > relTol * smax && sv(i) > 0.0) ++rank;
  return Subspace(svd.matrixU().leftCols(rank), relTol);
}

Subspace Subspace::zero(int ambientDim) { return Subspace(Eigen::MatrixXd(ambientDim, 0)); }

Subspace Subspace::full(int ambientDim) {
  return Subspace(Eigen::MatrixXd::Identity(ambientDim, ambientDim));
}

Eigen::VectorXd Subspace::project(const Eigen::VectorXd& v) const {
  if (v.size() != ambientDim()) throw DimensionMismatch("vector does not live in the subspace's ambient space");
  return basis_ * (basis_.transpose() * v);
}

Eigen::VectorXd Subspace::projectPerp(const Eigen::VectorXd& v) const { return v - project(v); }

bool Subspace::contains(const Eigen::VectorXd& v, double tol) const { return projectPerp(v).norm() <= tol; }

double gapDistance(const Subspace& a, const Subspace& b) {
  if (a.ambientDim() != b.ambientDim()) throw DimensionMismatch("gap distance: ambient dimensions differ");
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("gap distance: subspace dimensions differ (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
  }
  if (a.dim() == 0 || a.dim() == a.ambientDim()) return 0.0;
  // Equal dimensions: |P_a - P_b| = |(I - P_b) A| for an orthonormal basis A of a.
  Eigen::MatrixXd residual = a.basis() - b.basis() * (b.basis().transpose() * a.basis());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

}  // namespace nilpotentizer
