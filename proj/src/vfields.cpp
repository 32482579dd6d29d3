#include "nilpotentizer/vfields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

namespace nilpotentizer {

VectorField::VectorField(std::vector<Polynomial> components) : components_(std::move(components)) {
  for (const auto& p : components_)
    if (p.numVars() != dim()) throw DimensionMismatch("vector field components must use n variables on R^n");
}

VectorField VectorField::zero(int n) { return VectorField(std::vector<Polynomial>(n, Polynomial(n))); }

VectorField VectorField::parse(const std::vector<std::string>& components, const std::vector<std::string>& names) {
  const int n = static_cast<int>(components.size());
  std::vector<Polynomial> polys;
  for (const auto& c : components) polys.push_back(Polynomial::parse(c, n, names));
  return VectorField(std::move(polys));
}

bool VectorField::isZero() const {
  return std::all_of(components_.begin(), components_.end(), [](const Polynomial& p) { return p.isZero(); });
}

Eigen::VectorXd VectorField::evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DimensionMismatch("point dimension differs from field dimension");
  Eigen::VectorXd out(dim());
  for (int i = 0; i < dim(); ++i) out(i) = components_[i].evaluate(x.data());
  return out;
}

VectorField VectorField::operator+(const VectorField& o) const {
  if (o.dim() != dim()) throw DimensionMismatch("vector fields on different spaces");
  std::vector<Polynomial> c;
  for (int i = 0; i < dim(); ++i) c.push_back(components_[i] + o.components_[i]);
  return VectorField(std::move(c));
}

VectorField VectorField::operator-(const VectorField& o) const { return *this + o * Rational(-1); }

VectorField VectorField::operator*(const Rational& s) const {
  std::vector<Polynomial> c;
  for (const auto& p : components_) c.push_back(p * s);
  return VectorField(std::move(c));
}

std::string VectorField::toString(const std::vector<std::string>& names) const {
  const std::vector<std::string> vars = names.empty() ? defaultVariableNames(dim()) : names;
  std::ostringstream out;
  bool first = true;
  for (int i = 0; i < dim(); ++i) {
    if (components_[i].isZero()) continue;
    if (!first) out << " + ";
    first = false;
    out << "(" << components_[i].toString(vars) << ")*d/d" << vars[i];
  }
  return first ? "0" : out.str();
}

VectorField lieBracket(const VectorField& x, const VectorField& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("lie bracket of fields on different spaces");
  const int n = x.dim();
  std::vector<Polynomial> c(n, Polynomial(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!x[j].isZero()) c[i] = c[i] + x[j] * y[i].derivative(j);
      if (!y[j].isZero()) c[i] = c[i] - y[j] * x[i].derivative(j);
    }
  }
  return VectorField(std::move(c));
}

CompiledFields::CompiledFields(const std::vector<VectorField>& fields) : count_(static_cast<int>(fields.size())) {
  n_ = fields.empty() ? 0 : fields.front().dim();
  auto emit = [&](std::vector<Term>& program, int target, const Polynomial& p) {
    for (const auto& [e, c] : p.terms()) {
      program.push_back({target, c.get_d(), static_cast<int>(exponents_.size())});
      for (int v : e) {
        exponents_.push_back(v);
        maxDegree_ = std::max(maxDegree_, v);
      }
    }
  };
  for (int k = 0; k < count_; ++k) {
    if (fields[k].dim() != n_) throw DimensionMismatch("compiled fields must share a dimension");
    for (int i = 0; i < n_; ++i) {
      const Polynomial& p = fields[k][i];
      emit(valueProgram_, k * n_ + i, p);
      for (int j = 0; j < n_; ++j) emit(jacobianProgram_, (k * n_ + j) * n_ + i, p.derivative(j));
    }
  }
}

void CompiledFields::run(const std::vector<Term>& program, const double* x, double* out) const {
  const int stride = maxDegree_ + 1;
  double powers[64];
  std::vector<double> heap;
  double* pw = powers;
  if (n_ * stride > 64) {
    heap.resize(static_cast<std::size_t>(n_ * stride));
    pw = heap.data();
  }
  for (int v = 0; v < n_; ++v) {
    pw[v * stride] = 1.0;
    for (int e = 1; e <= maxDegree_; ++e) pw[v * stride + e] = pw[v * stride + e - 1] * x[v];
  }
  for (const Term& t : program) {
    double m = t.coeff;
    const int* e = exponents_.data() + t.exponentOffset;
    for (int v = 0; v < n_; ++v)
      if (e[v]) m *= pw[v * stride + e[v]];
    out[t.target] += m;
  }
}

void CompiledFields::evaluate(const double* x, Eigen::MatrixXd& values) const {
  values.setZero(n_, count_);
  run(valueProgram_, x, values.data());
}

void CompiledFields::evaluateWithJacobians(const double* x, Eigen::MatrixXd& values,
                                           Eigen::MatrixXd& jacobians) const {
  values.setZero(n_, count_);
  jacobians.setZero(n_, n_ * count_);
  run(valueProgram_, x, values.data());
  run(jacobianProgram_, x, jacobians.data());
}

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

template <class System>
Eigen::VectorXd integrateToOne(System system, const Eigen::VectorXd& x, const FlowOptions& opts) {
  State state(x.data(), x.data() + x.size());
  auto stepper = odeint::make_controlled(opts.tol, opts.tol, odeint::runge_kutta_dopri5<State>());
  double t = 0.0;
  double dt = 0.05;
  long steps = 0;
  while (1.0 - t > 1e-15) {
    if (++steps > opts.maxSteps) throw FlowEscaped("flow escaped: step limit reached at time " + std::to_string(t));
    double h = std::min(dt, 1.0 - t);
    const auto result = stepper.try_step(system, state, t, h);
    dt = h;
    if (result == odeint::success) {
      for (double s : state) {
        if (!std::isfinite(s) || std::abs(s) > opts.divergenceBound)
          throw FlowEscaped("flow escaped: solution diverged near time " + std::to_string(t));
      }
    } else if (dt < 1e-14) {
      throw FlowEscaped("flow escaped: step size collapsed at time " + std::to_string(t));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
}

}  // namespace

Eigen::VectorXd flow(const VectorField& field, const Eigen::VectorXd& x, const FlowOptions& opts) {
  CompiledFields compiled({field});
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  return flowCombination(compiled, one, x, opts);
}

Eigen::VectorXd flowCombination(const CompiledFields& fields, const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x,
                                const FlowOptions& opts) {
  if (x.size() != fields.dim()) throw DimensionMismatch("flow start point has the wrong dimension");
  if (coeffs.size() != fields.count()) throw DimensionMismatch("one coefficient per field is required");
  if (coeffs.isZero(0.0)) return x;
  Eigen::MatrixXd values;
  auto system = [&](const State& s, State& ds, double) {
    fields.evaluate(s.data(), values);
    Eigen::Map<Eigen::VectorXd>(ds.data(), fields.dim()) = values * coeffs;
  };
  return integrateToOne(system, x, opts);
}

SubRiemannianStructure::SubRiemannianStructure(int dim, std::vector<Generator> generators, int depth,
                                               Eigen::MatrixXd gram, std::vector<std::string> variables)
    : dim_(dim), generators_(std::move(generators)), depth_(depth), gram_(std::move(gram)),
      variables_(std::move(variables)) {
  if (dim_ < 1) throw std::invalid_argument("manifold dimension must be positive");
  if (generators_.empty()) throw std::invalid_argument("at least one generator is required");
  for (const auto& g : generators_) {
    if (g.field.dim() != dim_) throw DimensionMismatch("generator field dimension differs from the manifold");
    if (g.weight < 1) throw std::invalid_argument("generator weights must be at least 1");
    if (g.weight > depth_) throw std::invalid_argument("generator weight exceeds the depth");
  }
  const int h = static_cast<int>(horizontalGenerators().size());
  if (h == 0) throw std::invalid_argument("at least one weight-1 generator is required");
  if (gram_.size() == 0) gram_ = Eigen::MatrixXd::Identity(h, h);
  if (gram_.rows() != h || gram_.cols() != h) throw DimensionMismatch("Gram matrix must match the weight-1 generators");
  if ((gram_ - gram_.transpose()).norm() > 1e-12 * std::max(1.0, gram_.norm()))
    throw std::invalid_argument("Gram matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("Gram matrix must be positive definite");
  if (variables_.empty()) variables_ = defaultVariableNames(dim_);
  if (static_cast<int>(variables_.size()) != dim_) throw DimensionMismatch("one variable name per coordinate");
}

std::vector<int> SubRiemannianStructure::horizontalGenerators() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(generators_.size()); ++i)
    if (generators_[i].weight == 1) out.push_back(i);
  return out;
}

NaturalMap::NaturalMap(const SubRiemannianStructure& structure) : structure_(structure) {
  std::vector<int> weights;
  for (const auto& g : structure_.generators()) weights.push_back(g.weight);
  algebra_ = freeNilpotent(static_cast<int>(weights.size()), weights, structure_.depth());
  for (const auto& f : algebra_->factors()) {
    if (f.generator >= 0) {
      realization_.push_back(structure_.generators()[f.generator].field);
    } else {
      realization_.push_back(lieBracket(realization_[f.left], realization_[f.right]));
    }
  }
  compiled_ = CompiledFields(realization_);
}

std::vector<std::pair<int, int>> NaturalMap::compatibilityFailures() const {
  std::vector<std::pair<int, int>> failures;
  const int n = algebra_->dim();
  const int m = structure_.dim();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (algebra_->weight(a) + algebra_->weight(b) > algebra_->depth()) continue;
      RVec ea(n), eb(n);
      ea[a] = 1;
      eb[b] = 1;
      RVec br = algebra_->bracket(ea, eb);
      VectorField image = VectorField::zero(m);
      for (int k = 0; k < n; ++k)
        if (sgn(br[k]) != 0) image = image + realization_[k] * br[k];
      if (!(image == lieBracket(realization_[a], realization_[b]))) failures.emplace_back(a, b);
    }
  }
  return failures;
}

VectorField NaturalMap::naturalT(const LieVector& v, double t) const {
  if (v.algebra() != algebra_) throw DimensionMismatch("vector does not belong to this natural map's algebra");
  if (t < 0.0) throw std::invalid_argument("natural_t needs t >= 0");
  VectorField out = VectorField::zero(structure_.dim());
  for (int j = 0; j < algebra_->dim(); ++j) {
    const double c = std::pow(t, algebra_->weight(j)) * v.coeffs()(j);
    if (c != 0.0) out = out + realization_[j] * Rational(c);
  }
  return out;
}

Eigen::MatrixXd NaturalMap::naturalAt(const Eigen::VectorXd& x, double t) const {
  if (x.size() != structure_.dim()) throw DimensionMismatch("point dimension differs from the manifold");
  Eigen::MatrixXd values;
  compiled_.evaluate(x.data(), values);
  for (int j = 0; j < algebra_->dim(); ++j) values.col(j) *= std::pow(t, algebra_->weight(j));
  return values;
}

Eigen::VectorXd NaturalMap::flowNatural(const Eigen::VectorXd& v, double t, const Eigen::VectorXd& x,
                                        const FlowOptions& opts) const {
  algebra_->requireDim(v.size(), "flowNatural");
  Eigen::VectorXd coeffs = v;
  for (int j = 0; j < algebra_->dim(); ++j) coeffs(j) *= std::pow(t, algebra_->weight(j));
  return flowCombination(compiled_, coeffs, x, opts);
}

NaturalMap buildNaturalMap(const SubRiemannianStructure& structure) { return NaturalMap(structure); }

int numericalRank(const Eigen::MatrixXd& a, double relTol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > relTol * s(0)) ++r;
  return r;
}

bool HormanderReport::ok() const {
  return std::all_of(points.begin(), points.end(), [](const HormanderPoint& p) { return p.ok; });
}

HormanderReport hormanderCheck(const NaturalMap& nm, const std::vector<Eigen::VectorXd>& points) {
  HormanderReport report;
  for (const auto& x : points) {
    HormanderPoint p;
    p.x = x;
    p.rank = numericalRank(nm.naturalAt(x, 1.0));
    p.ok = p.rank == nm.structure().dim();
    report.points.push_back(p);
  }
  return report;
}

HormanderReport hormanderCheck(const SubRiemannianStructure& structure, const std::vector<Eigen::VectorXd>& points) {
  return hormanderCheck(NaturalMap(structure), points);
}

}  // namespace nilpotentizer
