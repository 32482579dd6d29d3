#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/rational.hpp"
#include "nilpotentizer/subspace.hpp"

namespace nilpotentizer {

struct StructureConstant {
  int i = 0;
  int j = 0;
  int k = 0;
  Rational value;
};

/// How a basis element arises in a free construction: a generator or [left, right].
struct HallFactor {
  int generator = -1;
  int left = -1;
  int right = -1;
};

struct BchProgram;

/// Finite-dimensional graded nilpotent Lie algebra given by structure constants.
///
/// Group elements are identified with algebra vectors; the product is
///   log(e^u e^v) = u + v - 1/2 [u,v] + ...
/// i.e. the opposite of the usual BCH law, matching composition of flows
/// (v applied first).
class GradedLieAlgebra {
 public:
  /// Entries (i,j,k,c) set c_ij^k. For i < j the mirrored entry -c is filled in
  /// unless (j,i,k) is given explicitly. No validation happens here.
  GradedLieAlgebra(std::vector<int> weights, int depth, const std::vector<StructureConstant>& constants,
                   std::vector<std::string> labels = {}, std::vector<HallFactor> factors = {});
  ~GradedLieAlgebra();

  int dim() const { return static_cast<int>(weights_.size()); }
  int depth() const { return depth_; }
  const std::vector<int>& weights() const { return weights_; }
  int weight(int j) const { return weights_[j]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<HallFactor>& factors() const { return factors_; }
  /// Every stored c_ij^k, both orders.
  const std::vector<StructureConstant>& constants() const { return constants_; }
  std::vector<int> indicesOfWeight(int w) const;

  Eigen::VectorXd bracket(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  RVec bracket(const RVec& u, const RVec& v) const;
  /// Matrix of v -> [g, v].
  Eigen::MatrixXd adMatrix(const Eigen::VectorXd& g) const;

  Eigen::VectorXd bch(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  RVec bch(const RVec& u, const RVec& v) const;
  /// Jacobians of (u,v) -> bch(u,v); either output may be null.
  void bchJacobians(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::MatrixXd* du,
                    Eigen::MatrixXd* dv) const;

  Eigen::VectorXd dilate(double lambda, const Eigen::VectorXd& v) const;
  RVec dilate(const Rational& lambda, const RVec& v) const;

  /// Group conjugation g v g^{-1} = exp(-ad_g) v.
  Eigen::VectorXd adjoint(const Eigen::VectorXd& g, const Eigen::VectorXd& v) const;
  RVec adjoint(const RVec& g, const RVec& v) const;

  /// max_i |v_i|^(1/i) over weight blocks.
  double quasiNorm(const Eigen::VectorXd& v) const;
  /// Euclidean norm of each weight block, index 0 = weight 1.
  std::vector<double> blockNorms(const Eigen::VectorXd& v) const;

  void requireDim(std::size_t n, const char* what) const;

 private:
  template <class T>
  void bracketRaw(const T* u, const T* v, T* out) const;
  template <class T>
  std::vector<T> bchRaw(const T* u, const T* v) const;

  std::vector<int> weights_;
  int depth_;
  std::vector<StructureConstant> constants_;
  std::vector<double> constantsD_;
  std::vector<std::string> labels_;
  std::vector<HallFactor> factors_;
  std::shared_ptr<const BchProgram> bch_;
};

using AlgebraPtr = std::shared_ptr<const GradedLieAlgebra>;

/// Free nilpotent algebra on d weighted generators truncated at weighted degree `depth`.
/// Basis: Lyndon words with standard bracketing, ordered by length then lexicographically.
AlgebraPtr freeNilpotent(int numGenerators, const std::vector<int>& generatorWeights, int depth);

/// Element of a specific algebra.
template <class Coeffs>
class BasicLieVector {
 public:
  BasicLieVector(AlgebraPtr algebra, Coeffs coeffs) : algebra_(std::move(algebra)), coeffs_(std::move(coeffs)) {
    algebra_->requireDim(static_cast<std::size_t>(coeffs_.size()), "LieVector");
  }
  const AlgebraPtr& algebra() const { return algebra_; }
  const Coeffs& coeffs() const { return coeffs_; }

 private:
  AlgebraPtr algebra_;
  Coeffs coeffs_;
};

using LieVector = BasicLieVector<Eigen::VectorXd>;
using ExactLieVector = BasicLieVector<RVec>;

LieVector basisVector(const AlgebraPtr& algebra, int j);
ExactLieVector exactBasisVector(const AlgebraPtr& algebra, int j);

template <class C>
void requireSameAlgebra(const BasicLieVector<C>& a, const BasicLieVector<C>& b) {
  if (a.algebra() != b.algebra()) throw DimensionMismatch("operands belong to different algebras");
}

template <class C>
BasicLieVector<C> bracket(const BasicLieVector<C>& u, const BasicLieVector<C>& v) {
  requireSameAlgebra(u, v);
  return {u.algebra(), u.algebra()->bracket(u.coeffs(), v.coeffs())};
}

template <class C>
BasicLieVector<C> bchProduct(const BasicLieVector<C>& u, const BasicLieVector<C>& v) {
  requireSameAlgebra(u, v);
  return {u.algebra(), u.algebra()->bch(u.coeffs(), v.coeffs())};
}

template <class C>
BasicLieVector<C> adjointConjugate(const BasicLieVector<C>& g, const BasicLieVector<C>& v) {
  requireSameAlgebra(g, v);
  return {g.algebra(), g.algebra()->adjoint(g.coeffs(), v.coeffs())};
}

LieVector negate(const LieVector& v);
ExactLieVector negate(const ExactLieVector& v);
LieVector dilate(double lambda, const LieVector& v);
ExactLieVector dilate(const Rational& lambda, const ExactLieVector& v);
double quasiNorm(const LieVector& v);

struct SubalgebraReport {
  double residual = 0.0;
  bool isSubalgebra = true;
};

/// Residual = max over orthonormal basis pairs (a,b) of |P_perp [a,b]|.
SubalgebraReport isSubalgebra(const GradedLieAlgebra& algebra, const Subspace& s, double tol = 1e-8);

struct AlgebraViolation {
  std::string kind;  // "antisymmetry", "grading", "jacobi", "index"
  int i = -1;
  int j = -1;
  int k = -1;
  double residual = 0.0;
};

struct AlgebraReport {
  std::vector<AlgebraViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Exact checks of antisymmetry, grading and the Jacobi identity.
AlgebraReport validateAlgebra(const GradedLieAlgebra& algebra);

}  // namespace nilpotentizer
