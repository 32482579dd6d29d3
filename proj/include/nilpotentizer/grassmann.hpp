#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/expr.hpp"
#include "nilpotentizer/liealg.hpp"
#include "nilpotentizer/subspace.hpp"
#include "nilpotentizer/vfields.hpp"

namespace nilpotentizer {

/// Orthonormal kernel basis from the SVD; singular values below relTol * sigma_max count as zero.
Subspace kernel(const Eigen::MatrixXd& a, double relTol = 1e-9);

/// alpha_lambda(S): basis scaled by lambda^{w_j}, computed on a weighted echelon form so that
/// large factors do not amplify cancellation.
Subspace dilateSubspace(double lambda, const Subspace& s, const std::vector<int>& weights);

/// Basis vector of a weighted echelon form together with the weight of its leading block.
struct EchelonVector {
  Eigen::VectorXd v;
  int lead = 0;
};

/// Weighted echelon form of the column span of `basis`. With highestFirst the leading block of each
/// vector is its highest-weight nonzero block and leading blocks of equal weight are independent.
std::vector<EchelonVector> weightedEchelon(const Eigen::MatrixXd& basis, const std::vector<int>& weights,
                                           bool highestFirst, double tol = 1e-12);

/// lim_{t->0+} alpha_{1/t} S, spanned by the highest-weight leading parts.
Subspace gradedLimitFixed(const Subspace& s, const std::vector<int>& weights, double tol = 1e-12);
/// Same limit from an exact rational basis (vectors need not be independent).
Subspace gradedLimitExact(const std::vector<RVec>& basis, const std::vector<int>& weights);

/// Curve t -> x(t) given by closed-form components in t, sampled at t0 * rho^k, k = 0..K.
class ApproachPath {
 public:
  ApproachPath(std::string name, const std::vector<std::string>& components, double t0 = 0.1, double rho = 0.5,
               int steps = 40);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(components_.size()); }
  const std::vector<std::string>& componentText() const { return text_; }
  double t0() const { return t0_; }
  double rho() const { return rho_; }
  int steps() const { return steps_; }
  std::vector<double> schedule() const;
  Eigen::VectorXd at(double t) const;

 private:
  std::string name_;
  std::vector<std::string> text_;
  std::vector<Expression> components_;
  double t0_;
  double rho_;
  int steps_;
};

struct LimitOptions {
  double cauchyTol = 1e-7;
  int consecutive = 3;
  double rankTol = 1e-9;
  double subalgebraTol = 1e-8;
};

struct LimitDiagnostics {
  std::vector<double> t;
  /// gaps[k] = gap(S_k, S_{k+1}).
  std::vector<double> gaps;
  int convergedAt = -1;
  double subalgebraResidual = 0.0;
  bool isSubalgebra = false;
  /// Rows "k,t_k,gap".
  std::string csv() const;
};

struct PathLimit {
  Subspace limit;
  LimitDiagnostics diagnostics;
};

class NoConvergence : public NumericFailure {
 public:
  NoConvergence(const std::string& message, LimitDiagnostics diagnostics)
      : NumericFailure(message), diagnostics_(std::move(diagnostics)) {}
  const LimitDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  LimitDiagnostics diagnostics_;
};

/// S_k = alpha_{1/t_k} ker natural_{x(t_k),1}; converged once the consecutive gaps are non-increasing
/// and below cauchyTol for `consecutive` steps. Throws NoConvergence otherwise.
PathLimit limitAlongPath(const NaturalMap& nm, const ApproachPath& path, const LimitOptions& opts = {});

/// S_k for a single t (the kernel of natural_{x,t} written through the dilation).
Subspace dilatedKernel(const NaturalMap& nm, const Eigen::VectorXd& x, double t, double rankTol = 1e-9);

/// Span of Ad_g applied to a basis of S.
Subspace conjugateSubspace(const GradedLieAlgebra& algebra, const Eigen::VectorXd& g, const Subspace& s);

}  // namespace nilpotentizer
