#include "nilpotentizer/metrics.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "nilpotentizer/grassmann.hpp"

namespace nilpotentizer {

namespace {

Eigen::MatrixXd inverseSqrt(const Eigen::MatrixXd& gram, int m) {
  if (gram.size() == 0) return Eigen::MatrixXd::Identity(m, m);
  if (gram.rows() != m || gram.cols() != m) throw DimensionMismatch("Gram matrix size differs from the control count");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  return es.operatorInverseSqrt();
}

/// (N N^T)^{-1/2}: makes displacements of the natural size O(1) in every direction.
Eigen::MatrixXd preconditioner(const Eigen::MatrixXd& n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n * n.transpose());
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 1e-300) * 1e-28;
  for (int i = 0; i < ev.size(); ++i) ev(i) = 1.0 / std::sqrt(std::max(ev(i), floor));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

ControlOptions controlOptions(const MetricOptions& o) {
  ControlOptions c;
  c.segments = o.segments;
  c.outerIterations = o.outerIterations;
  c.endpointTol = 1e-10;
  return c;
}

DistanceResult zeroDistance(int segments, int m, const Eigen::VectorXd& state) {
  DistanceResult r;
  r.controls = Eigen::MatrixXd::Zero(segments, m);
  r.trajectory = state.transpose().replicate(segments + 1, 1);
  r.history = {0.0};
  r.converged = true;
  return r;
}

Eigen::MatrixXd statesToMatrix(const std::vector<Eigen::VectorXd>& states) {
  if (states.empty()) return {};
  Eigen::MatrixXd out(states.size(), states.front().size());
  for (std::size_t k = 0; k < states.size(); ++k) out.row(static_cast<int>(k)) = states[k].transpose();
  return out;
}

/// Rows of the solver controls w mapped to generator controls factor * T w.
Eigen::MatrixXd toGenerator(const Eigen::MatrixXd& w, const Eigen::MatrixXd& t, double factor) {
  return factor * w * t.transpose();
}

Eigen::MatrixXd fromGenerator(const Eigen::MatrixXd& u, const Eigen::MatrixXd& tInv, double factor) {
  return (u * tInv.transpose()) / factor;
}

}  // namespace

// ---------------------------------------------------------------- manifold

ManifoldMetric::ManifoldMetric(const SubRiemannianStructure& structure, MetricOptions opts)
    : nm_(std::make_shared<NaturalMap>(structure)), opts_(opts), horizontal_(structure.horizontalGenerators()) {
  if (horizontal_.empty()) throw std::invalid_argument("the structure has no weight-1 generators");
  std::vector<VectorField> fields;
  for (int i : horizontal_) fields.push_back(structure.generators()[i].field);
  fields_ = CompiledFields(fields);
  gramInvSqrt_ = inverseSqrt(structure.gram(), static_cast<int>(horizontal_.size()));
}

void ManifoldMetric::step(const Eigen::VectorXd& x0, const Eigen::VectorXd& u, double dt, Eigen::VectorXd& next,
                          Eigen::MatrixXd* a, Eigen::MatrixXd* b) const {
  const int n = static_cast<int>(x0.size());
  const int m = static_cast<int>(u.size());
  const bool derivs = a || b;
  const double h = dt / opts_.substeps;
  // Reused buffers; the solver calls this in tight loops.
  thread_local Eigen::MatrixXd values, jac, fx, d, ds, dk[4];
  thread_local Eigen::VectorXd x, xs, k[4];
  values.resize(n, m);
  x = x0;
  if (derivs) {
    jac.resize(n, n * m);
    fx.resize(n, n);
    d.setZero(n, n + m);
    d.leftCols(n).setIdentity();
  }
  auto stage = [&](int s) {
    if (derivs) {
      fields_.evaluateWithJacobians(xs.data(), values, jac);
      fx.setZero();
      for (int j = 0; j < m; ++j) fx += u(j) * jac.middleCols(j * n, n);
      dk[s].noalias() = fx * ds;
      dk[s].rightCols(m) += values;
    } else {
      fields_.evaluate(xs.data(), values);
    }
    k[s].noalias() = values * u;
  };
  for (int sub = 0; sub < opts_.substeps; ++sub) {
    xs = x;
    if (derivs) ds = d;
    stage(0);
    xs = x + 0.5 * h * k[0];
    if (derivs) ds = d + 0.5 * h * dk[0];
    stage(1);
    xs = x + 0.5 * h * k[1];
    if (derivs) ds = d + 0.5 * h * dk[1];
    stage(2);
    xs = x + h * k[2];
    if (derivs) ds = d + h * dk[2];
    stage(3);
    x += (h / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
    if (derivs) d += (h / 6.0) * (dk[0] + 2.0 * dk[1] + 2.0 * dk[2] + dk[3]);
  }
  next = x;
  if (a) *a = d.leftCols(n);
  if (b) *b = d.rightCols(m);
}

Eigen::VectorXd ManifoldMetric::integrate(const Eigen::VectorXd& x, const Eigen::MatrixXd& controls) const {
  Eigen::VectorXd state = x, next;
  const double dt = 1.0 / static_cast<double>(controls.rows());
  for (int k = 0; k < controls.rows(); ++k) {
    step(state, controls.row(k).transpose(), dt, next, nullptr, nullptr);
    state = next;
  }
  return state;
}

double ManifoldMetric::displacementScale(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  Eigen::MatrixXd n = nm_->naturalAt(x, 1.0);
  Eigen::VectorXd v = n.completeOrthogonalDecomposition().solve(y - x);
  return std::max(nm_->algebra()->quasiNorm(v), 1e-300);
}

ControlProblem ManifoldMetric::problem(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double scale) const {
  const int n = nm_->structure().dim();
  const int m = controlDim();
  if (x.size() != n || y.size() != n) throw DimensionMismatch("point dimension differs from the manifold");
  ControlProblem p;
  p.stateDim = n;
  p.controlDim = m;
  p.constraintDim = n;
  p.initial = x;
  const Eigen::MatrixXd map = scale * gramInvSqrt_;
  p.step = [this, map](const Eigen::VectorXd& s, const Eigen::VectorXd& w, double dt, Eigen::VectorXd& next,
                       Eigen::MatrixXd* a, Eigen::MatrixXd* b) {
    step(s, map * w, dt, next, a, b);
    if (b) *b = *b * map;
  };
  const Eigen::MatrixXd precond = preconditioner(nm_->naturalAt(x, scale));
  p.endpoint = [precond, y](const Eigen::VectorXd& s, Eigen::VectorXd& c, Eigen::MatrixXd* jac) {
    c = precond * (s - y);
    if (jac) *jac = precond;
  };
  return p;
}

DistanceResult ManifoldMetric::distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t,
                                        const std::vector<Eigen::MatrixXd>& warm) const {
  if (!(t > 0.0)) throw std::invalid_argument("d_t needs t > 0");
  const int m = controlDim();
  if ((y - x).norm() == 0.0) return zeroDistance(opts_.segments, m, x);
  const double scale = displacementScale(x, y);
  ControlProblem prob = problem(x, y, scale);
  const Eigen::MatrixXd tInv = gramInvSqrt_.inverse();

  std::vector<Eigen::MatrixXd> starts;
  for (const auto& u : warm) {
    if (u.rows() != opts_.segments || u.cols() != m) throw DimensionMismatch("warm start has the wrong shape");
    starts.push_back(fromGenerator(u * t, tInv, scale));
  }
  Eigen::MatrixXd n = nm_->naturalAt(x, 1.0);
  Eigen::MatrixXd fieldsAtX(x.size(), m);
  for (int j = 0; j < m; ++j) fieldsAtX.col(j) = n.col(horizontal_[j]);
  Eigen::VectorXd straight = fieldsAtX.completeOrthogonalDecomposition().solve(y - x);
  Eigen::MatrixXd straightW = fromGenerator(straight.transpose().replicate(opts_.segments, 1), tInv, scale);
  const int seeded = warm.empty() ? std::max(1, opts_.starts) : opts_.starts;
  for (auto& s : seededStarts(straightW, seeded, 1.0, opts_.seed)) starts.push_back(s);

  ControlSolution sol = solveControl(prob, starts, controlOptions(opts_));
  DistanceResult r;
  Eigen::MatrixXd controls1 = toGenerator(sol.controls, gramInvSqrt_, scale);
  r.residual = (integrate(x, controls1) - y).norm();
  r.converged = sol.feasible && r.residual <= opts_.endpointTol;
  r.value = scale * sol.length / t;
  r.energy = scale * scale * sol.energy / (t * t);
  r.controls = controls1 / t;
  r.trajectory = statesToMatrix(sol.states);
  for (double h : sol.history) r.history.push_back(scale * h / t);
  r.restarts = static_cast<int>(starts.size());
  return r;
}

DistanceResult ccDistanceManifold(const SubRiemannianStructure& structure, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y, double t, const MetricOptions& opts) {
  return ManifoldMetric(structure, opts).distance(x, y, t);
}

// -------------------------------------------------------------------- cone

ConeMetric::ConeMetric(std::shared_ptr<const TangentCone> cone, const Eigen::MatrixXd& gram, MetricOptions opts)
    : cone_(std::move(cone)), opts_(opts) {
  const int m = static_cast<int>(cone_->weight1().size());
  if (m == 0) throw std::invalid_argument("the cone algebra has no weight-1 elements");
  gramInvSqrt_ = inverseSqrt(gram, m);
  e_ = Eigen::MatrixXd::Zero(cone_->algebra()->dim(), m);
  for (int j = 0; j < m; ++j) e_(cone_->weight1()[j], j) = 1.0;
}

double ConeMetric::displacementScale(const ConePoint& p, const ConePoint& q) const {
  const auto& alg = *cone_->algebra();
  return std::max(alg.quasiNorm(alg.bch(cone_->rep(q), -cone_->rep(p))), 1e-300);
}

ControlProblem ConeMetric::problem(const ConePoint& p, const ConePoint& q, double scale) const {
  const auto& alg = *cone_->algebra();
  ControlProblem prob;
  prob.stateDim = alg.dim();
  prob.controlDim = static_cast<int>(e_.cols());
  prob.constraintDim = cone_->dim();
  prob.initial = cone_->rep(p);
  const Eigen::MatrixXd map = scale * e_ * gramInvSqrt_;
  auto algebra = cone_->algebra();
  prob.step = [algebra, map](const Eigen::VectorXd& g, const Eigen::VectorXd& w, double dt, Eigen::VectorXd& next,
                             Eigen::MatrixXd* a, Eigen::MatrixXd* b) {
    const Eigen::VectorXd left = dt * (map * w);
    next = algebra->bch(left, g);
    if (a || b) {
      Eigen::MatrixXd dl, dg;
      algebra->bchJacobians(left, g, &dl, &dg);
      if (a) *a = dg;
      if (b) *b = dt * dl * map;
    }
  };
  // Coordinates of S are rescaled by the dilation so the constraint is O(1).
  Eigen::VectorXd weightScale(cone_->dim());
  for (int c = 0; c < cone_->dim(); ++c) {
    int idx = 0;
    cone_->complementBasis().col(c).cwiseAbs().maxCoeff(&idx);
    weightScale(c) = std::pow(scale, -alg.weight(idx));
  }
  const Eigen::MatrixXd proj = weightScale.asDiagonal() * cone_->projectS();
  const Eigen::VectorXd minusQ = -cone_->rep(q);
  prob.endpoint = [algebra, proj, minusQ](const Eigen::VectorXd& g, Eigen::VectorXd& c, Eigen::MatrixXd* jac) {
    c = proj * algebra->bch(minusQ, g);
    if (jac) {
      Eigen::MatrixXd dg;
      algebra->bchJacobians(minusQ, g, nullptr, &dg);
      *jac = proj * dg;
    }
  };
  return prob;
}

ConePoint ConeMetric::integrate(const ConePoint& p, const Eigen::MatrixXd& controls) const {
  const auto& alg = *cone_->algebra();
  Eigen::VectorXd g = cone_->rep(p);
  const double dt = 1.0 / static_cast<double>(controls.rows());
  for (int k = 0; k < controls.rows(); ++k) {
    Eigen::VectorXd u = controls.row(k).transpose();
    g = alg.bch(dt * (e_ * u), g);
  }
  return canonicalRep(*cone_, g);
}

DistanceResult ConeMetric::distance(const ConePoint& p, const ConePoint& q,
                                    const std::vector<Eigen::MatrixXd>& warm) const {
  const int m = static_cast<int>(e_.cols());
  if (p.s.size() != cone_->dim() || q.s.size() != cone_->dim())
    throw DimensionMismatch("cone point has the wrong dimension");
  if ((p.s - q.s).norm() == 0.0) return zeroDistance(opts_.segments, m, cone_->rep(p));
  const auto& alg = *cone_->algebra();
  const double scale = displacementScale(p, q);
  ControlProblem prob = problem(p, q, scale);
  const Eigen::MatrixXd tInv = gramInvSqrt_.inverse();

  std::vector<Eigen::MatrixXd> starts;
  for (const auto& u : warm) {
    if (u.rows() != opts_.segments || u.cols() != m) throw DimensionMismatch("warm start has the wrong shape");
    starts.push_back(fromGenerator(u, tInv, scale));
  }
  Eigen::VectorXd diff = alg.bch(cone_->rep(q), -cone_->rep(p));
  Eigen::VectorXd straight(m);
  for (int j = 0; j < m; ++j) straight(j) = diff(cone_->weight1()[j]);
  Eigen::MatrixXd straightW = fromGenerator(straight.transpose().replicate(opts_.segments, 1), tInv, scale);
  const int seeded = warm.empty() ? std::max(1, opts_.starts) : opts_.starts;
  for (auto& s : seededStarts(straightW, seeded, 1.0, opts_.seed)) starts.push_back(s);

  ControlSolution sol = solveControl(prob, starts, controlOptions(opts_));
  DistanceResult r;
  r.controls = toGenerator(sol.controls, gramInvSqrt_, scale);
  r.value = scale * sol.length;
  r.energy = scale * scale * sol.energy;
  r.trajectory = statesToMatrix(sol.states);
  for (double h : sol.history) r.history.push_back(scale * h);
  r.restarts = static_cast<int>(starts.size());
  try {
    r.residual = (integrate(p, r.controls).s - q.s).norm();
  } catch (const NumericFailure&) {
    r.residual = std::numeric_limits<double>::infinity();
  }
  r.converged = sol.feasible && r.residual <= opts_.endpointTol;
  return r;
}

DistanceResult ccDistanceCone(std::shared_ptr<const TangentCone> cone, const Eigen::MatrixXd& gram, const ConePoint& p,
                              const ConePoint& q, const MetricOptions& opts) {
  return ConeMetric(std::move(cone), gram, opts).distance(p, q);
}

// ---------------------------------------------------------------- groupoid

GroupoidPoint GroupoidPoint::manifold(Eigen::VectorXd y, Eigen::VectorXd x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("manifold groupoid points need t > 0");
  if (x.size() != y.size()) throw DimensionMismatch("x and y have different dimensions");
  GroupoidPoint g;
  g.y = std::move(y);
  g.x = std::move(x);
  g.t = t;
  return g;
}

GroupoidPoint GroupoidPoint::atZero(std::shared_ptr<const TangentCone> cone, ConePoint p, Eigen::VectorXd x) {
  if (!cone) throw std::invalid_argument("a point at t = 0 needs a cone");
  GroupoidPoint g;
  g.cone = std::move(cone);
  g.p = std::move(p);
  g.x = std::move(x);
  g.t = 0.0;
  return g;
}

GroupoidPoint dilate(const GroupoidPoint& g, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  if (!g.isZero()) return GroupoidPoint::manifold(g.y, g.x, g.t / lambda);
  const auto& alg = *g.cone->algebra();
  Subspace h = dilateSubspace(lambda, g.cone->h(), alg.weights());
  std::shared_ptr<const TangentCone> cone = g.cone;
  if (gapDistance(h, g.cone->h()) > 1e-12)
    cone = std::make_shared<TangentCone>(buildCone(g.cone->algebra(), h, g.cone->dim()));
  ConePoint p = canonicalRep(*cone, alg.dilate(lambda, g.cone->rep(g.p)));
  return GroupoidPoint::atZero(cone, p, g.x);
}

DistanceResult groupoidDistance(const ManifoldMetric& metric, const GroupoidPoint& g) {
  if (!g.isZero()) return metric.distance(g.x, g.y, g.t);
  ConeMetric cm(g.cone, metric.naturalMap().structure().gram(), metric.options());
  return cm.distance(g.cone->origin(), g.p);
}

// -------------------------------------------------------------- quasi-norm

namespace {

/// inf |v| over {residual(v) = 0}: bisection on r with v = alpha_r(phi(z)) inside the open quasi-ball.
class QuasiNormSearch {
 public:
  QuasiNormSearch(const GradedLieAlgebra& alg, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual,
                  const QuasiNormOptions& opts)
      : alg_(alg), residual_(std::move(residual)), opts_(opts) {
    for (int w = 1; w <= alg.depth(); ++w) {
      auto idx = alg.indicesOfWeight(w);
      if (!idx.empty()) blocks_.push_back({w, idx});
    }
  }

  Eigen::VectorXd vOf(const Eigen::VectorXd& z, double r) const {
    Eigen::VectorXd v(z.size());
    for (const auto& [w, idx] : blocks_) {
      double sq = 0.0;
      for (int j : idx) sq += z(j) * z(j);
      const double f = std::pow(r, w) / std::sqrt(1.0 + sq);
      for (int j : idx) v(j) = f * z(j);
    }
    return v;
  }

  Eigen::VectorXd zOf(const Eigen::VectorXd& v, double r) const {
    Eigen::VectorXd z(v.size());
    for (const auto& [w, idx] : blocks_) {
      const double f = std::pow(r, -w);
      double sq = 0.0;
      for (int j : idx) sq += (v(j) * f) * (v(j) * f);
      double shrink = 1.0;
      if (sq >= 0.999 * 0.999) {
        shrink = 0.999 / std::sqrt(sq);
        sq = 0.999 * 0.999;
      }
      const double g = f * shrink / std::sqrt(1.0 - sq);
      for (int j : idx) z(j) = g * v(j);
    }
    return z;
  }

  /// Levenberg-Marquardt on |residual(v(z))|^2; true when feasible.
  bool feasibleAt(double r, Eigen::VectorXd& z, double& res) const {
    const int n = static_cast<int>(z.size());
    double lambda = 1e-3;
    Eigen::VectorXd f = residual_(vOf(z, r));
    res = f.norm();
    int stalls = 0;
    for (int it = 0; it < opts_.lmIterations; ++it) {
      if (res <= opts_.feasibilityTol) return true;
      Eigen::MatrixXd jac(f.size(), n);
      for (int j = 0; j < n; ++j) {
        const double h = 1e-7 * (1.0 + std::abs(z(j)));
        Eigen::VectorXd zp = z, zm = z;
        zp(j) += h;
        zm(j) -= h;
        jac.col(j) = (residual_(vOf(zp, r)) - residual_(vOf(zm, r))) / (2.0 * h);
      }
      Eigen::MatrixXd jtj = jac.transpose() * jac;
      Eigen::VectorXd g = jac.transpose() * f;
      bool accepted = false;
      for (int tries = 0; tries < 12 && !accepted; ++tries) {
        Eigen::MatrixXd a = jtj;
        a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
        Eigen::VectorXd dz = a.ldlt().solve(-g);
        Eigen::VectorXd trial = z + dz;
        Eigen::VectorXd ft = residual_(vOf(trial, r));
        const double rt = ft.norm();
        if (std::isfinite(rt) && rt < res) {
          stalls = (res - rt < 1e-4 * res) ? stalls + 1 : 0;
          z = trial;
          f = ft;
          res = rt;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
        } else {
          lambda *= 4.0;
        }
      }
      if (!accepted || stalls >= 4) break;
    }
    return res <= opts_.feasibilityTol;
  }

  QuasiNormResult run(const Eigen::VectorXd& feasible) const {
    QuasiNormResult out;
    Eigen::VectorXd best = feasible;
    double hi = alg_.quasiNorm(best);
    double lo = 0.0;
    for (int it = 0; it < opts_.bisections && hi - lo > opts_.relativeTol * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      Eigen::VectorXd z = zOf(best, mid);
      double res = 0.0;
      if (feasibleAt(mid, z, res)) {
        best = vOf(z, mid);
        hi = std::min(alg_.quasiNorm(best), mid);
      } else {
        lo = mid;
      }
    }
    out.value = alg_.quasiNorm(best);
    out.minimizer = best;
    out.residual = residual_(best).norm();
    return out;
  }

 private:
  const GradedLieAlgebra& alg_;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual_;
  QuasiNormOptions opts_;
  std::vector<std::pair<int, std::vector<int>>> blocks_;
};

}  // namespace

QuasiNormResult quasiNormElement(const NaturalMap& nm, const GroupoidPoint& g, const QuasiNormOptions& opts) {
  const auto& alg = *nm.algebra();
  const int dim = alg.dim();
  if (g.isZero()) {
    if (g.cone->algebra()->dim() != dim) throw DimensionMismatch("cone algebra differs from the natural map's");
    const Eigen::VectorXd v0 = g.cone->rep(g.p);
    if (v0.norm() == 0.0) return {0.0, Eigen::VectorXd::Zero(dim), 0.0, true};
    auto cone = g.cone;
    auto residual = [cone, v0](const Eigen::VectorXd& v) {
      return Eigen::VectorXd(cone->projectS() * cone->algebra()->bch(-v0, v));
    };
    return QuasiNormSearch(alg, residual, opts).run(v0);
  }
  if ((g.y - g.x).norm() == 0.0) return {0.0, Eigen::VectorXd::Zero(dim), 0.0, true};
  // natural_t(v) = natural_s(alpha_{t/s} v): solve at a reference scale s that depends on (y, x) only and
  // rescale, so ||(y, x, t)|| = ||(y, x, s)|| s / t exactly.
  const Eigen::VectorXd x = g.x, y = g.y;
  const double ref = std::max(alg.quasiNorm(nm.naturalAt(x, 1.0).completeOrthogonalDecomposition().solve(y - x)), 1e-300);
  const Eigen::MatrixXd n = nm.naturalAt(x, ref);
  const Eigen::MatrixXd precond = preconditioner(n);
  auto residual = [&nm, precond, x, y, ref](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    try {
      return precond * (nm.flowNatural(v, ref, x) - y);
    } catch (const FlowEscaped&) {
      return Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::infinity());
    }
  };
  // Feasible start: first-order preimage, then minimum-norm Newton corrections.
  Eigen::VectorXd v = n.completeOrthogonalDecomposition().solve(y - x);
  Eigen::VectorXd f = residual(v);
  int stalls = 0;
  for (int it = 0; it < 40 && stalls < 3 && f.allFinite() && f.norm() > opts.feasibilityTol; ++it) {
    Eigen::MatrixXd jac(f.size(), dim);
    for (int j = 0; j < dim; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(v(j)));
      Eigen::VectorXd vp = v, vm = v;
      vp(j) += h;
      vm(j) -= h;
      jac.col(j) = (residual(vp) - residual(vm)) / (2.0 * h);
    }
    Eigen::VectorXd step = -jac.completeOrthogonalDecomposition().solve(f);
    // v is O(1) at the reference scale; huge steps only chase unreachable targets into stiff flows.
    const double cap = 1.0 + v.norm();
    if (step.norm() > cap) step *= cap / step.norm();
    double s = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
      Eigen::VectorXd ft = residual(v + s * step);
      if (ft.allFinite() && ft.norm() < f.norm()) {
        // An unreachable target shows up as a residual that stops shrinking.
        stalls = ft.norm() > 0.9 * f.norm() ? stalls + 1 : 0;
        v += s * step;
        f = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!f.allFinite() || f.norm() > opts.feasibilityTol) {
    QuasiNormResult out;
    out.value = std::numeric_limits<double>::infinity();
    out.finite = false;
    out.residual = f.allFinite() ? f.norm() : std::numeric_limits<double>::infinity();
    out.minimizer = alg.dilate(ref / g.t, v);
    return out;
  }
  QuasiNormResult out = QuasiNormSearch(alg, residual, opts).run(v);
  out.value *= ref / g.t;
  out.minimizer = alg.dilate(ref / g.t, out.minimizer);
  return out;
}

// -------------------------------------------------------------- comparison

ComparisonReport comparisonRatioScan(const ManifoldMetric& metric, const ComparisonOptions& opts,
                                     const QuasiNormOptions& qopts) {
  const NaturalMap& nm = metric.naturalMap();
  const auto& alg = *nm.algebra();
  const int n = nm.structure().dim();
  Eigen::VectorXd center = opts.center.size() ? opts.center : Eigen::VectorXd::Zero(n);
  if (center.size() != n) throw DimensionMismatch("scan center has the wrong dimension");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), radius(opts.vMin, opts.vMax);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> xs, vs;
  for (int s = 0; s < opts.samplesPerT; ++s) {
    Eigen::VectorXd x(n), v(alg.dim());
    for (int i = 0; i < n; ++i) x(i) = center(i) + opts.halfWidth * unit(rng);
    for (int i = 0; i < alg.dim(); ++i) v(i) = normal(rng);
    v = alg.dilate(radius(rng) / alg.quasiNorm(v), v);
    xs.push_back(x);
    vs.push_back(v);
  }
  ComparisonReport report;
  for (double t : opts.tValues) {
    double cHat = 0.0;
    {
      ComparisonSample degenerate;
      degenerate.t = t;
      degenerate.x = degenerate.y = center;
      degenerate.excluded = true;
      degenerate.reason = "degenerate pair y = x";
      report.samples.push_back(degenerate);
      ++report.excluded;
    }
    for (int s = 0; s < opts.samplesPerT; ++s) {
      ComparisonSample sample;
      sample.t = t;
      sample.x = xs[s];
      try {
        sample.y = nm.flowNatural(vs[s], t, xs[s]);
        auto q = quasiNormElement(nm, GroupoidPoint::manifold(sample.y, sample.x, t), qopts);
        auto d = metric.distance(sample.x, sample.y, t);
        sample.quasiNorm = q.value;
        sample.distance = d.value;
        if (!q.finite) {
          sample.excluded = true;
          sample.reason = "quasi-norm possibly infinite";
        } else if (!d.converged) {
          sample.excluded = true;
          sample.reason = "distance unconverged";
        } else {
          sample.ratio = q.value / d.value;
          cHat = std::max({cHat, sample.ratio, 1.0 / sample.ratio});
        }
      } catch (const FlowEscaped&) {
        sample.excluded = true;
        sample.reason = "flow escaped";
      }
      if (sample.excluded) ++report.excluded;
      report.samples.push_back(sample);
    }
    report.cHatPerT.push_back(cHat);
    report.cHat = std::max(report.cHat, cHat);
  }
  const std::size_t k = report.cHatPerT.size();
  report.drift = k >= 2 ? std::abs(report.cHatPerT[k - 1] - report.cHatPerT[k - 2]) / report.cHatPerT[k - 2] : 0.0;
  return report;
}

}  // namespace nilpotentizer
