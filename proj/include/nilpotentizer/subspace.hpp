#pragma once

#include <Eigen/Dense>

namespace nilpotentizer {

/// Linear subspace of a coordinate space, stored by an orthonormal basis (columns).
class Subspace {
 public:
  Subspace() = default;
  /// Trusts that the columns are orthonormal.
  Subspace(Eigen::MatrixXd orthonormalBasis, double tol = 1e-12);

  /// Column span of arbitrary vectors; singular values below relTol * sigma_max are dropped.
  static Subspace span(const Eigen::MatrixXd& vectors, double relTol = 1e-12);
  static Subspace zero(int ambientDim);
  static Subspace full(int ambientDim);

  int ambientDim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  double tol() const { return tol_; }

  Eigen::MatrixXd projector() const { return basis_ * basis_.transpose(); }
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  Eigen::VectorXd projectPerp(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol) const;

 private:
  Eigen::MatrixXd basis_;
  double tol_ = 1e-12;
};

/// Sine of the largest principal angle, i.e. the operator norm of P_a - P_b.
/// Throws DimensionMismatch unless ambient and subspace dimensions agree.
double gapDistance(const Subspace& a, const Subspace& b);

}  // namespace nilpotentizer
