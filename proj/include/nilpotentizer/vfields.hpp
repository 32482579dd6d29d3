#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/liealg.hpp"
#include "nilpotentizer/polynomial.hpp"

namespace nilpotentizer {

/// Polynomial vector field on R^n; component i is the coefficient of d/dx_i.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<Polynomial> components);
  static VectorField zero(int n);
  /// One polynomial string per component.
  static VectorField parse(const std::vector<std::string>& components, const std::vector<std::string>& names = {});

  int dim() const { return static_cast<int>(components_.size()); }
  const Polynomial& operator[](int i) const { return components_[i]; }
  const std::vector<Polynomial>& components() const { return components_; }
  bool isZero() const;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  VectorField operator+(const VectorField& o) const;
  VectorField operator-(const VectorField& o) const;
  VectorField operator*(const Rational& c) const;
  bool operator==(const VectorField& o) const { return components_ == o.components_; }
  std::string toString(const std::vector<std::string>& names = {}) const;

 private:
  std::vector<Polynomial> components_;
};

/// [X,Y] = (X.grad)Y - (Y.grad)X, exact.
VectorField lieBracket(const VectorField& x, const VectorField& y);

/// Fast floating-point evaluation of a fixed family of fields and their Jacobians.
class CompiledFields {
 public:
  CompiledFields() = default;
  explicit CompiledFields(const std::vector<VectorField>& fields);

  int dim() const { return n_; }
  int count() const { return count_; }
  /// values: n x count, one column per field.
  void evaluate(const double* x, Eigen::MatrixXd& values) const;
  /// jacobians: n x (n*count); block k holds d(field k)/dx.
  void evaluateWithJacobians(const double* x, Eigen::MatrixXd& values, Eigen::MatrixXd& jacobians) const;

 private:
  struct Term {
    int target;
    double coeff;
    int exponentOffset;
  };
  void run(const std::vector<Term>& program, const double* x, double* out) const;

  int n_ = 0;
  int count_ = 0;
  int maxDegree_ = 0;
  std::vector<int> exponents_;
  std::vector<Term> valueProgram_;
  std::vector<Term> jacobianProgram_;
};

struct FlowOptions {
  double tol = 1e-10;
  long maxSteps = 1000000;
  double divergenceBound = 1e12;
};

/// Time-1 flow of X from x. Throws FlowEscaped on blow-up or step collapse.
Eigen::VectorXd flow(const VectorField& field, const Eigen::VectorXd& x, const FlowOptions& opts = {});
/// Time-1 flow of sum_j coeffs(j) * field_j.
Eigen::VectorXd flowCombination(const CompiledFields& fields, const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x,
                                const FlowOptions& opts = {});

struct Generator {
  VectorField field;
  int weight = 1;
};

class SubRiemannianStructure {
 public:
  /// gram: positive-definite matrix on the weight-1 generators (empty = identity).
  SubRiemannianStructure(int dim, std::vector<Generator> generators, int depth, Eigen::MatrixXd gram = {},
                         std::vector<std::string> variables = {});

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  const std::vector<Generator>& generators() const { return generators_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const std::vector<std::string>& variables() const { return variables_; }
  /// Indices of weight-1 generators, in declaration order.
  std::vector<int> horizontalGenerators() const;

 private:
  int dim_;
  std::vector<Generator> generators_;
  int depth_;
  Eigen::MatrixXd gram_;
  std::vector<std::string> variables_;
};

/// The free nilpotent algebra on the generators together with its realization by iterated brackets.
class NaturalMap {
 public:
  explicit NaturalMap(const SubRiemannianStructure& structure);

  const SubRiemannianStructure& structure() const { return structure_; }
  const AlgebraPtr& algebra() const { return algebra_; }
  const std::vector<VectorField>& realization() const { return realization_; }
  const CompiledFields& compiled() const { return compiled_; }

  /// Pairs (a,b) with w_a + w_b <= N where the realization fails to be a bracket homomorphism.
  std::vector<std::pair<int, int>> compatibilityFailures() const;

  /// sum_j t^{w_j} v_j natural(e_j)
  VectorField naturalT(const LieVector& v, double t) const;
  /// Column j = t^{w_j} natural(e_j)(x).
  Eigen::MatrixXd naturalAt(const Eigen::VectorXd& x, double t) const;
  /// flow(natural_t(v), x) without building the field symbolically.
  Eigen::VectorXd flowNatural(const Eigen::VectorXd& v, double t, const Eigen::VectorXd& x,
                              const FlowOptions& opts = {}) const;

 private:
  SubRiemannianStructure structure_;
  AlgebraPtr algebra_;
  std::vector<VectorField> realization_;
  CompiledFields compiled_;
};

NaturalMap buildNaturalMap(const SubRiemannianStructure& structure);

struct HormanderPoint {
  Eigen::VectorXd x;
  int rank = 0;
  bool ok = false;
};

struct HormanderReport {
  std::vector<HormanderPoint> points;
  bool ok() const;
};

/// Rank of natural_at(x, 1) at each point; deficient points are flagged.
HormanderReport hormanderCheck(const NaturalMap& nm, const std::vector<Eigen::VectorXd>& points);
HormanderReport hormanderCheck(const SubRiemannianStructure& structure, const std::vector<Eigen::VectorXd>& points);

/// Numerical rank with singular values below relTol * sigma_max treated as zero.
int numericalRank(const Eigen::MatrixXd& a, double relTol = 1e-9);

}  // namespace nilpotentizer
