#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/liealg.hpp"
#include "nilpotentizer/subspace.hpp"
#include "nilpotentizer/vfields.hpp"

namespace nilpotentizer {

class NotASubalgebra : public std::invalid_argument {
 public:
  NotASubalgebra(const std::string& message, double residual) : std::invalid_argument(message), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Coset gH, stored by the coordinates of its representative in the complement basis.
struct ConePoint {
  Eigen::VectorXd s;
};

/// Homogeneous space G/H with a linear complement S, g = h + S.
class TangentCone {
 public:
  TangentCone(AlgebraPtr algebra, Subspace h, Eigen::MatrixXd complement, double subalgebraResidual);

  const AlgebraPtr& algebra() const { return algebra_; }
  const Subspace& h() const { return h_; }
  /// Columns span S (coordinate directions where possible).
  const Eigen::MatrixXd& complementBasis() const { return complement_; }
  /// Rows map g to S-coordinates along h.
  const Eigen::MatrixXd& projectS() const { return projectS_; }
  /// Rows map g to h-coordinates (in the orthonormal basis of h) along S.
  const Eigen::MatrixXd& projectH() const { return projectH_; }
  const std::vector<int>& weight1() const { return weight1_; }
  double subalgebraResidual() const { return residual_; }
  int dim() const { return static_cast<int>(complement_.cols()); }

  Eigen::VectorXd rep(const ConePoint& p) const { return complement_ * p.s; }
  ConePoint origin() const { return {Eigen::VectorXd::Zero(dim())}; }

 private:
  AlgebraPtr algebra_;
  Subspace h_;
  Eigen::MatrixXd complement_;
  Eigen::MatrixXd projectS_;
  Eigen::MatrixXd projectH_;
  std::vector<int> weight1_;
  double residual_;
};

/// Picks S from coordinate directions ordered by (weight, index). expectedCodim < 0 skips the check.
TangentCone buildCone(AlgebraPtr algebra, const Subspace& h, int expectedCodim = -1, double subalgebraTol = 1e-8);

struct CanonicalOptions {
  double tol = 1e-12;
  int maxIterations = 50;
  double uniquenessTol = 1e-10;
};

/// The point of S in the coset gH: Newton on projectH(g * exp(a)) = 0 from a = 0 and from a = -projectH(g).
ConePoint canonicalRep(const TangentCone& cone, const Eigen::VectorXd& g, const CanonicalOptions& opts = {});

/// canonicalRep(g * rep(p)).
ConePoint leftTranslate(const TangentCone& cone, const Eigen::VectorXd& g, const ConePoint& p,
                        const CanonicalOptions& opts = {});

/// Column k: d/de canonicalRep(exp(e E_k) * rep(p)) at e = 0 for the k-th weight-1 basis element, in S-coordinates.
Eigen::MatrixXd horizontalFrame(const TangentCone& cone, const ConePoint& p);
/// Same by central differences with step h.
Eigen::MatrixXd horizontalFrameFiniteDifference(const TangentCone& cone, const ConePoint& p, double h = 1e-6);

struct RxReport {
  /// ranks[i-1] = dim ev_x(F^i).
  std::vector<int> ranks;
  /// Preimage of r_x in g, built degree by degree.
  Subspace preimage;
  /// Gap to the graded limit of ker natural_{x,1}.
  double limitGap = 0.0;
};

/// Throws NumericFailure when the degree-N rank is below dim M or when the two constructions disagree beyond 1e-8.
RxReport computeRx(const NaturalMap& nm, const Eigen::VectorXd& x, double rankTol = 1e-9);

}  // namespace nilpotentizer
