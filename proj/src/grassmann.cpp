#include "nilpotentizer/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nilpotentizer {

Subspace kernel(const Eigen::MatrixXd& a, double relTol) {
  const int cols = static_cast<int>(a.cols());
  if (a.rows() == 0) return Subspace::full(cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (smax > 0.0 && s(i) > relTol * smax) ++rank;
  return Subspace(svd.matrixV().rightCols(cols - rank), relTol);
}

namespace {

std::vector<int> weightOrder(const std::vector<int>& weights, bool highestFirst) {
  std::set<int> distinct(weights.begin(), weights.end());
  std::vector<int> order(distinct.begin(), distinct.end());
  if (highestFirst) std::reverse(order.begin(), order.end());
  return order;
}

void requireWeights(const Subspace& s, const std::vector<int>& weights) {
  if (static_cast<int>(weights.size()) != s.ambientDim())
    throw DimensionMismatch("one weight per ambient coordinate is required");
}

}  // namespace

std::vector<EchelonVector> weightedEchelon(const Eigen::MatrixXd& basis, const std::vector<int>& weights,
                                           bool highestFirst, double tol) {
  const int n = static_cast<int>(basis.rows());
  Eigen::MatrixXd remaining = basis;
  std::vector<EchelonVector> out;
  for (int w : weightOrder(weights, highestFirst)) {
    if (remaining.cols() == 0) break;
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (weights[i] == w) rows.push_back(i);
    Eigen::MatrixXd block(rows.size(), remaining.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) block.row(r) = remaining.row(rows[r]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
      if (s(i) > tol) ++rank;
    Eigen::MatrixXd rotated = remaining * svd.matrixV();
    for (int c = 0; c < rank; ++c) out.push_back({rotated.col(c), w});
    remaining = rotated.rightCols(rotated.cols() - rank);
    for (int r : rows) remaining.row(r).setZero();
  }
  return out;
}

Subspace dilateSubspace(double lambda, const Subspace& s, const std::vector<int>& weights) {
  requireWeights(s, weights);
  if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  if (lambda == 1.0 || s.dim() == 0 || s.dim() == s.ambientDim()) return s;
  auto echelon = weightedEchelon(s.basis(), weights, lambda > 1.0);
  Eigen::MatrixXd scaled(s.ambientDim(), static_cast<int>(echelon.size()));
  for (std::size_t c = 0; c < echelon.size(); ++c) {
    const auto& e = echelon[c];
    for (int i = 0; i < s.ambientDim(); ++i)
      scaled(i, static_cast<int>(c)) = e.v(i) * std::pow(lambda, weights[i] - e.lead);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(s.ambientDim(), scaled.cols());
  return Subspace(q, s.tol());
}

Subspace gradedLimitFixed(const Subspace& s, const std::vector<int>& weights, double tol) {
  requireWeights(s, weights);
  if (s.dim() == 0 || s.dim() == s.ambientDim()) return s;
  auto echelon = weightedEchelon(s.basis(), weights, true, tol);
  Eigen::MatrixXd leading = Eigen::MatrixXd::Zero(s.ambientDim(), static_cast<int>(echelon.size()));
  for (std::size_t c = 0; c < echelon.size(); ++c)
    for (int i = 0; i < s.ambientDim(); ++i)
      if (weights[i] == echelon[c].lead) leading(i, static_cast<int>(c)) = echelon[c].v(i);
  return Subspace::span(leading);
}

Subspace gradedLimitExact(const std::vector<RVec>& basis, const std::vector<int>& weights) {
  const int n = static_cast<int>(weights.size());
  std::vector<RVec> vectors = basis;
  for (const auto& v : vectors)
    if (static_cast<int>(v.size()) != n) throw DimensionMismatch("basis vector length differs from weights");
  std::vector<RVec> leading;
  for (int w : weightOrder(weights, true)) {
    std::vector<std::pair<int, RVec>> pivots;  // (pivot coordinate, vector)
    std::vector<RVec> rest;
    for (RVec v : vectors) {
      for (const auto& [p, pv] : pivots) {
        if (sgn(v[p]) == 0) continue;
        const Rational f = v[p] / pv[p];
        for (int i = 0; i < n; ++i) v[i] -= f * pv[i];
      }
      int pivot = -1;
      for (int i = 0; i < n && pivot < 0; ++i)
        if (weights[i] == w && sgn(v[i]) != 0) pivot = i;
      if (pivot >= 0) {
        pivots.emplace_back(pivot, v);
      } else {
        rest.push_back(v);
      }
    }
    for (const auto& [p, pv] : pivots) {
      RVec lead(n);
      for (int i = 0; i < n; ++i)
        if (weights[i] == w) lead[i] = pv[i];
      leading.push_back(lead);
    }
    vectors = rest;
  }
  Eigen::MatrixXd m(n, static_cast<int>(leading.size()));
  for (std::size_t c = 0; c < leading.size(); ++c)
    for (int i = 0; i < n; ++i) m(i, static_cast<int>(c)) = leading[c][i].get_d();
  return Subspace::span(m);
}

ApproachPath::ApproachPath(std::string name, const std::vector<std::string>& components, double t0, double rho,
                           int steps)
    : name_(std::move(name)), text_(components), t0_(t0), rho_(rho), steps_(steps) {
  if (!(t0_ > 0.0)) throw std::invalid_argument("path schedule needs t0 > 0");
  if (!(rho_ > 0.0 && rho_ < 1.0)) throw std::invalid_argument("path schedule needs 0 < rho < 1");
  if (steps_ < 1) throw std::invalid_argument("path schedule needs at least one step");
  for (const auto& c : components) components_.push_back(Expression::parse(c, {"t"}));
}

std::vector<double> ApproachPath::schedule() const {
  std::vector<double> t;
  for (int k = 0; k <= steps_; ++k) t.push_back(t0_ * std::pow(rho_, k));
  return t;
}

Eigen::VectorXd ApproachPath::at(double t) const {
  Eigen::VectorXd x(dim());
  const double arg[1] = {t};
  for (int i = 0; i < dim(); ++i) {
    x(i) = components_[i].evaluate(arg);
    if (!std::isfinite(x(i)))
      throw std::domain_error("path '" + name_ + "' is undefined at t = " + std::to_string(t));
  }
  return x;
}

std::string LimitDiagnostics::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "k,t_k,gap\n";
  for (std::size_t k = 0; k < gaps.size(); ++k) out << k << "," << t[k] << "," << gaps[k] << "\n";
  return out.str();
}

Subspace dilatedKernel(const NaturalMap& nm, const Eigen::VectorXd& x, double t, double rankTol) {
  Subspace k1 = kernel(nm.naturalAt(x, 1.0), rankTol);
  return dilateSubspace(1.0 / t, k1, nm.algebra()->weights());
}

PathLimit limitAlongPath(const NaturalMap& nm, const ApproachPath& path, const LimitOptions& opts) {
  if (path.dim() != nm.structure().dim()) throw DimensionMismatch("path dimension differs from the manifold");
  const auto schedule = path.schedule();
  LimitDiagnostics diag;
  Subspace previous;
  int streak = 0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double t = schedule[k];
    Subspace current = dilatedKernel(nm, path.at(t), t, opts.rankTol);
    if (k > 0) {
      if (current.dim() != previous.dim())
        throw NumericFailure("kernel dimension changed along path '" + path.name() + "' at t = " + std::to_string(t));
      const double gap = gapDistance(previous, current);
      const bool nonIncreasing = diag.gaps.empty() || gap <= diag.gaps.back() * (1.0 + 1e-9) + 1e-15;
      diag.t.push_back(schedule[k - 1]);
      diag.gaps.push_back(gap);
      streak = (gap < opts.cauchyTol && nonIncreasing) ? streak + 1 : (gap < opts.cauchyTol ? 1 : 0);
      if (streak >= opts.consecutive) {
        diag.convergedAt = static_cast<int>(k);
        auto report = isSubalgebra(*nm.algebra(), current, opts.subalgebraTol);
        diag.subalgebraResidual = report.residual;
        diag.isSubalgebra = report.isSubalgebra;
        return {current, diag};
      }
    }
    previous = current;
  }
  throw NoConvergence("no convergence detected along path '" + path.name() + "'", diag);
}

Subspace conjugateSubspace(const GradedLieAlgebra& algebra, const Eigen::VectorXd& g, const Subspace& s) {
  if (s.ambientDim() != algebra.dim()) throw DimensionMismatch("subspace does not live in this algebra");
  Eigen::MatrixXd images(s.ambientDim(), s.dim());
  for (int c = 0; c < s.dim(); ++c) images.col(c) = algebra.adjoint(g, s.basis().col(c));
  // Ad_g is invertible, so the image keeps the dimension.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(images);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(s.ambientDim(), s.dim());
  return Subspace(q, s.tol());
}

}  // namespace nilpotentizer
