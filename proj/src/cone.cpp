#include "nilpotentizer/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nilpotentizer/grassmann.hpp"

namespace nilpotentizer {

TangentCone::TangentCone(AlgebraPtr algebra, Subspace h, Eigen::MatrixXd complement, double subalgebraResidual)
    : algebra_(std::move(algebra)), h_(std::move(h)), complement_(std::move(complement)), residual_(subalgebraResidual) {
  const int n = algebra_->dim();
  if (h_.ambientDim() != n || complement_.rows() != n || h_.dim() + complement_.cols() != n)
    throw DimensionMismatch("h and S do not split the algebra");
  Eigen::MatrixXd q(n, n);
  q << complement_, h_.basis();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q);
  if (!lu.isInvertible()) throw std::invalid_argument("S is not a complement of h");
  Eigen::MatrixXd inv = lu.inverse();
  projectS_ = inv.topRows(complement_.cols());
  projectH_ = inv.bottomRows(h_.dim());
  weight1_ = algebra_->indicesOfWeight(1);
}

TangentCone buildCone(AlgebraPtr algebra, const Subspace& h, int expectedCodim, double subalgebraTol) {
  const int n = algebra->dim();
  if (h.ambientDim() != n) throw DimensionMismatch("h does not live in this algebra");
  auto report = isSubalgebra(*algebra, h, subalgebraTol);
  if (!report.isSubalgebra)
    throw NotASubalgebra("not a subalgebra (residual " + std::to_string(report.residual) + ")", report.residual);
  const int codim = n - h.dim();
  if (expectedCodim >= 0 && codim != expectedCodim)
    throw DimensionMismatch("codimension of h is " + std::to_string(codim) + ", expected " +
                            std::to_string(expectedCodim));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return algebra->weight(a) < algebra->weight(b); });
  Eigen::MatrixXd chosen = h.basis();
  std::vector<int> picked;
  for (int j : order) {
    if (static_cast<int>(picked.size()) == codim) break;
    Eigen::MatrixXd trial(n, chosen.cols() + 1);
    trial << chosen, Eigen::VectorXd::Unit(n, j);
    if (numericalRank(trial, 1e-9) == trial.cols()) {
      chosen = trial;
      picked.push_back(j);
    }
  }
  Eigen::MatrixXd complement = Eigen::MatrixXd::Zero(n, codim);
  for (int c = 0; c < codim; ++c) complement(picked[c], c) = 1.0;
  return TangentCone(std::move(algebra), h, complement, report.residual);
}

namespace {

/// Newton for projectH(bch(g, Hb a)) = 0. Returns false without convergence.
bool solveCoset(const TangentCone& cone, const Eigen::VectorXd& g, Eigen::VectorXd& a, const CanonicalOptions& opts,
                double& residual) {
  const auto& alg = *cone.algebra();
  const Eigen::MatrixXd& hb = cone.h().basis();
  const double scale = 1.0 + g.norm();
  Eigen::MatrixXd dv;
  for (int it = 0; it <= opts.maxIterations; ++it) {
    Eigen::VectorXd prod = alg.bch(g, hb * a);
    Eigen::VectorXd f = cone.projectH() * prod;
    residual = f.norm();
    if (residual <= opts.tol * scale) return true;
    if (it == opts.maxIterations) break;
    alg.bchJacobians(g, hb * a, nullptr, &dv);
    Eigen::MatrixXd jac = cone.projectH() * dv * hb;
    Eigen::VectorXd step = jac.fullPivLu().solve(-f);
    if (!step.allFinite()) return false;
    double s = 1.0;
    for (int k = 0; k < 30; ++k, s *= 0.5) {
      Eigen::VectorXd trial = a + s * step;
      if ((cone.projectH() * alg.bch(g, hb * trial)).norm() < residual || k == 29) {
        a = trial;
        break;
      }
    }
  }
  return false;
}

}  // namespace

ConePoint canonicalRep(const TangentCone& cone, const Eigen::VectorXd& g, const CanonicalOptions& opts) {
  cone.algebra()->requireDim(static_cast<std::size_t>(g.size()), "canonicalRep");
  const auto& alg = *cone.algebra();
  if (cone.h().dim() == 0) return {cone.projectS() * g};
  const Eigen::MatrixXd& hb = cone.h().basis();
  Eigen::VectorXd a1 = Eigen::VectorXd::Zero(cone.h().dim());
  Eigen::VectorXd a2 = -(cone.projectH() * g);
  double r1 = 0.0, r2 = 0.0;
  const bool ok1 = solveCoset(cone, g, a1, opts, r1);
  const bool ok2 = solveCoset(cone, g, a2, opts, r2);
  if (!ok1 && !ok2)
    throw NumericFailure("canonical representative did not converge (residual " + std::to_string(std::min(r1, r2)) +
                         ")");
  Eigen::VectorXd s1 = cone.projectS() * alg.bch(g, hb * a1);
  if (ok1 && ok2) {
    Eigen::VectorXd s2 = cone.projectS() * alg.bch(g, hb * a2);
    if ((s1 - s2).norm() > opts.uniquenessTol * (1.0 + s1.norm()))
      throw NumericFailure("canonical representative is not unique: the two Newton starts disagree");
  } else if (!ok1) {
    s1 = cone.projectS() * alg.bch(g, hb * a2);
  }
  return {s1};
}

ConePoint leftTranslate(const TangentCone& cone, const Eigen::VectorXd& g, const ConePoint& p,
                        const CanonicalOptions& opts) {
  return canonicalRep(cone, cone.algebra()->bch(g, cone.rep(p)), opts);
}

Eigen::MatrixXd horizontalFrame(const TangentCone& cone, const ConePoint& p) {
  const auto& alg = *cone.algebra();
  const int n = alg.dim();
  const Eigen::VectorXd rep = cone.rep(p);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  // G(e, a) = bch(bch(e E, rep), Hb a); canonical when projectH G = 0.
  Eigen::MatrixXd dLeft, dRight;
  alg.bchJacobians(zero, rep, &dLeft, nullptr);
  alg.bchJacobians(rep, zero, nullptr, &dRight);
  Eigen::MatrixXd dA = dRight * cone.h().basis();
  Eigen::MatrixXd frame(cone.dim(), static_cast<int>(cone.weight1().size()));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cone.projectH() * dA);
  if (cone.h().dim() > 0 && !lu.isInvertible()) return horizontalFrameFiniteDifference(cone, p);
  for (std::size_t k = 0; k < cone.weight1().size(); ++k) {
    Eigen::VectorXd dE = dLeft.col(cone.weight1()[k]);
    Eigen::VectorXd total = dE;
    if (cone.h().dim() > 0) total += dA * lu.solve(-(cone.projectH() * dE));
    frame.col(static_cast<int>(k)) = cone.projectS() * total;
  }
  return frame;
}

Eigen::MatrixXd horizontalFrameFiniteDifference(const TangentCone& cone, const ConePoint& p, double h) {
  const int n = cone.algebra()->dim();
  Eigen::MatrixXd frame(cone.dim(), static_cast<int>(cone.weight1().size()));
  for (std::size_t k = 0; k < cone.weight1().size(); ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, cone.weight1()[k]);
    Eigen::VectorXd plus = leftTranslate(cone, h * e, p).s;
    Eigen::VectorXd minus = leftTranslate(cone, -h * e, p).s;
    frame.col(static_cast<int>(k)) = (plus - minus) / (2.0 * h);
  }
  return frame;
}

RxReport computeRx(const NaturalMap& nm, const Eigen::VectorXd& x, double rankTol) {
  const auto& alg = *nm.algebra();
  const int m = nm.structure().dim();
  const int depth = alg.depth();
  Eigen::MatrixXd ev = nm.naturalAt(x, 1.0);
  RxReport report;
  std::vector<Eigen::VectorXd> spanning;
  Eigen::MatrixXd lower(m, 0);
  for (int i = 1; i <= depth; ++i) {
    const auto idx = alg.indicesOfWeight(i);
    Eigen::MatrixXd block(m, static_cast<int>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) block.col(static_cast<int>(c)) = ev.col(idx[c]);
    // Weight-i directions whose value at x already lies in ev_x(F^{i-1}).
    Subspace e = lower.cols() ? Subspace::span(lower, rankTol) : Subspace::zero(m);
    Eigen::MatrixXd residual = block - e.projector() * block;
    if (block.cols() > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual, Eigen::ComputeFullV);
      const double scale = std::max(1.0, block.norm());
      int rank = 0;
      for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > rankTol * scale) ++rank;
      Eigen::MatrixXd kern = svd.matrixV().rightCols(block.cols() - rank);
      for (int c = 0; c < kern.cols(); ++c) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(alg.dim());
        for (std::size_t r = 0; r < idx.size(); ++r) v(idx[r]) = kern(static_cast<int>(r), c);
        spanning.push_back(v);
      }
    }
    Eigen::MatrixXd grown(m, lower.cols() + block.cols());
    grown << lower, block;
    lower = grown;
    report.ranks.push_back(lower.cols() ? numericalRank(lower, rankTol) : 0);
  }
  if (report.ranks.empty() || report.ranks.back() < m)
    throw NumericFailure("Hormander violated at x");
  Eigen::MatrixXd basis(alg.dim(), static_cast<int>(spanning.size()));
  for (std::size_t c = 0; c < spanning.size(); ++c) basis.col(static_cast<int>(c)) = spanning[c];
  report.preimage = spanning.empty() ? Subspace::zero(alg.dim()) : Subspace::span(basis);
  Subspace limit = gradedLimitFixed(kernel(ev, rankTol), alg.weights());
  report.limitGap = limit.dim() == report.preimage.dim() ? gapDistance(limit, report.preimage) : 1.0;
  if (report.limitGap > 1e-8)
    throw NumericFailure("r_x construction disagrees with the graded limit of the kernel (gap " +
                         std::to_string(report.limitGap) + ")");
  return report;
}

}  // namespace nilpotentizer
