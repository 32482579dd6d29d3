#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/grassmann.hpp"
#include "nilpotentizer/metrics.hpp"

using namespace nilpotentizer;

namespace {

constexpr double kSolverTol = 1e-4;

std::shared_ptr<const TangentCone> makeCone(AlgebraPtr alg, const Subspace& h, int codim) {
  return std::make_shared<TangentCone>(buildCone(std::move(alg), h, codim));
}

std::shared_ptr<const TangentCone> heisenbergCone() {
  return makeCone(freeNilpotent(2, {1, 1}, 2), Subspace::zero(3), 3);
}

std::shared_ptr<const TangentCone> grushinOriginCone() {
  return makeCone(freeNilpotent(2, {1, 1}, 2), Subspace::span(Eigen::MatrixXd(Eigen::Vector3d(0, 1, 0))), 2);
}

double lengthOf(const Eigen::MatrixXd& controls, const Eigen::MatrixXd& gram) {
  double total = 0.0;
  for (int k = 0; k < controls.rows(); ++k) {
    Eigen::VectorXd u = controls.row(k).transpose();
    total += std::sqrt(gram.size() ? u.dot(gram * u) : u.squaredNorm());
  }
  return total / static_cast<double>(controls.rows());
}

/// Largest relative difference between the reverse-sweep Jacobian and central differences.
double jacobianError(const ControlProblem& p, const Eigen::MatrixXd& w) {
  Rollout ro = rollout(p, w, true);
  double worst = 0.0;
  const double h = 1e-6;
  for (int k = 0; k < w.rows(); ++k)
    for (int i = 0; i < w.cols(); ++i) {
      Eigen::MatrixXd plus = w, minus = w;
      plus(k, i) += h;
      minus(k, i) -= h;
      Eigen::VectorXd fd = (rollout(p, plus, false).c - rollout(p, minus, false).c) / (2 * h);
      Eigen::VectorXd an = ro.jacobian.col(k * static_cast<int>(w.cols()) + i);
      worst = std::max(worst, (fd - an).norm() / (1.0 + an.norm()));
    }
  return worst;
}

}  // namespace

TEST_CASE("Grushin distances along the horizontal axis") {
  ManifoldMetric metric(fixtures::grushin(2));
  for (double a : {0.3, -0.7, 1.0, 1.5}) {
    DistanceResult r = metric.distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(a, 0));
    CHECK(r.converged);
    CHECK(std::abs(r.value - std::abs(a)) <= 1e-3);
  }
  DistanceResult same = metric.distance(Eigen::Vector2d(0.4, -1), Eigen::Vector2d(0.4, -1), 0.3);
  CHECK(same.value == 0.0);
  CHECK(same.converged);
}

TEST_CASE("Grushin distance to the vertical axis") {
  // Geodesics from the origin: x = sin(ks)/k, y' = x^2 k, so d((0,0),(0,y)) = sqrt(2 pi |y|).
  ManifoldMetric metric(fixtures::grushin(2));
  for (double y : {0.5, 1.0}) {
    DistanceResult r = metric.distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, y));
    CHECK(r.converged);
    const double exact = std::sqrt(2 * M_PI * y);
    CHECK(r.value >= exact - 1e-3);
    CHECK(r.value <= exact * 1.01);
  }
}

TEST_CASE("d_t is d_1 / t") {
  ManifoldMetric metric(fixtures::grushin(3));
  Eigen::Vector2d x(0.2, -0.1), y(0.5, 0.4);
  DistanceResult d1 = metric.distance(x, y);
  REQUIRE(d1.converged);
  for (double t : {0.5, 2.0}) {
    DistanceResult dt = metric.distance(x, y, t);
    CHECK(dt.value == d1.value / t);
    CHECK(dt.converged);
    CHECK((metric.integrate(x, dt.controls * t) - y).norm() <= 1e-6);
  }
  GroupoidPoint g = GroupoidPoint::manifold(y, x, 0.25);
  const double base = groupoidDistance(metric, g).value;
  for (double lambda : {0.5, 3.0}) CHECK(std::abs(groupoidDistance(metric, dilate(g, lambda)).value - lambda * base) <= 1e-12 * base);
}

TEST_CASE("distance results certify their value") {
  Eigen::Matrix2d gram;
  gram << 2.0, 0.5, 0.5, 1.0;
  for (const auto& structure : {fixtures::grushin(2), fixtures::grushin(2, gram), fixtures::martinet()}) {
    ManifoldMetric metric(structure);
    const int n = structure.dim();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXd x(n), y(n);
      for (int i = 0; i < n; ++i) {
        x(i) = u(rng);
        y(i) = u(rng);
      }
      DistanceResult r = metric.distance(x, y);
      CHECK(r.converged);
      CHECK(r.value >= 0.0);
      CHECK(r.residual <= 1e-6);
      CHECK((metric.integrate(x, r.controls) - y).norm() <= 1e-6);
      CHECK(std::abs(lengthOf(r.controls, structure.gram()) - r.value) <= 1e-9);
      CHECK(r.controls.rows() == metric.options().segments);
      CHECK(r.trajectory.rows() == metric.options().segments + 1);
      CHECK(static_cast<int>(r.history.size()) == r.restarts);
      for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
      CHECK(r.history.back() == doctest::Approx(r.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetry and the relaxed triangle inequality") {
  ManifoldMetric metric(fixtures::grushin(2));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::Vector2d x(u(rng), u(rng)), y(u(rng), u(rng)), z(u(rng), u(rng));
    const double xy = metric.distance(x, y).value;
    const double yx = metric.distance(y, x).value;
    const double yz = metric.distance(y, z).value;
    const double xz = metric.distance(x, z).value;
    CHECK(std::abs(xy - yx) <= 2 * kSolverTol);
    CHECK(xz <= xy + yz + 3 * kSolverTol);
  }
}

TEST_CASE("reverse-sweep Jacobians match finite differences") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  auto randomControls = [&](int segments, int m) {
    Eigen::MatrixXd w(segments, m);
    for (int k = 0; k < segments; ++k)
      for (int i = 0; i < m; ++i) w(k, i) = normal(rng);
    return w;
  };
  ManifoldMetric manifold(fixtures::martinet());
  ControlProblem mp = manifold.problem(Eigen::Vector3d(0.1, 0.2, -0.3), Eigen::Vector3d(0.5, 0, 0.2), 0.7);
  CHECK(jacobianError(mp, randomControls(24, 2)) <= 1e-5);

  auto g = freeNilpotent(2, {1, 1}, 3);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(5, 3);
  b(2, 0) = 1;
  b(3, 0) = -1;
  b(1, 1) = 2;
  b(2, 1) = -1;
  b(4, 2) = 1;
  ConeMetric cone(makeCone(g, Subspace::span(b), 2));
  ControlProblem cp = cone.problem(ConePoint{Eigen::Vector2d(0.1, 0.3)}, ConePoint{Eigen::Vector2d(0.8, -0.4)}, 0.9);
  CHECK(jacobianError(cp, randomControls(24, 2)) <= 1e-5);
}

TEST_CASE("Heisenberg cone distances") {
  ConeMetric metric(heisenbergCone());
  ConePoint origin = metric.cone().origin();
  DistanceResult e1 = metric.distance(origin, ConePoint{Eigen::Vector3d(1, 0, 0)});
  CHECK(e1.converged);
  CHECK(std::abs(e1.value - 1.0) <= 1e-3);
  CHECK(metric.distance(origin, origin).value == 0.0);

  // With K constant pieces the best closed curve of enclosed area 1 is the regular K-gon.
  const int k = metric.options().segments;
  DistanceResult e3 = metric.distance(origin, ConePoint{Eigen::Vector3d(0, 0, 1)});
  CHECK(e3.converged);
  CHECK(std::abs(e3.value - std::sqrt(4.0 * k * std::tan(M_PI / k))) <= 1e-6);
  CHECK((metric.integrate(origin, e3.controls).s - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-6);
  CHECK(std::abs(lengthOf(e3.controls, {}) - e3.value) <= 1e-9);
}

TEST_CASE("Grushin cone distances") {
  auto cone = grushinOriginCone();
  ConeMetric metric(cone);
  ConePoint origin = cone->origin();
  const double d = metric.distance(origin, ConePoint{Eigen::Vector2d(1, 0)}).value;
  CHECK(std::abs(d - 1.0) <= 1e-3);

  // Right translation by H leaves the coset, and so the distance, unchanged.
  const auto& alg = *cone->algebra();
  Eigen::Vector3d g(1, 0, 0);
  for (double a : {0.7, -2.0}) {
    ConePoint moved = canonicalRep(*cone, alg.bch(g, Eigen::Vector3d(0, a, 0)));
    CHECK((moved.s - Eigen::Vector2d(1, 0)).norm() <= 1e-12);
    CHECK(std::abs(metric.distance(origin, moved).value - d) <= 2 * kSolverTol);
  }

  // The cone is the Grushin plane, so d(0, (0, y)) = sqrt(2 pi |y|) up to discretization.
  const double vertical = metric.distance(origin, ConePoint{Eigen::Vector2d(0, 1)}).value;
  CHECK(vertical >= std::sqrt(2 * M_PI) - 1e-3);
  CHECK(vertical <= std::sqrt(2 * M_PI) * 1.01);
}

TEST_CASE("cone dilation homogeneity") {
  auto cone = grushinOriginCone();
  ConeMetric metric(cone);
  const auto& alg = *cone->algebra();
  for (const Eigen::Vector2d& s : {Eigen::Vector2d(0.4, 0.3), Eigen::Vector2d(-0.2, 0.5)}) {
    ConePoint p{s};
    const double base = metric.distance(cone->origin(), p).value;
    for (double lambda : {0.5, 2.0}) {
      ConePoint scaled = canonicalRep(*cone, alg.dilate(lambda, cone->rep(p)));
      CHECK(std::abs(metric.distance(cone->origin(), scaled).value - lambda * base) <= 2 * kSolverTol);
    }
  }

  ManifoldMetric manifold(fixtures::grushin(2));
  GroupoidPoint g = GroupoidPoint::atZero(cone, ConePoint{Eigen::Vector2d(0.4, 0.3)}, Eigen::Vector2d(0, 0));
  const double base = groupoidDistance(manifold, g).value;
  GroupoidPoint doubled = dilate(g, 2.0);
  CHECK(doubled.isZero());
  CHECK(std::abs(groupoidDistance(manifold, doubled).value - 2.0 * base) <= 2 * kSolverTol);
}

TEST_CASE("manifold distances approach the cone distance") {
  NaturalMap nm(fixtures::grushin(2));
  ApproachPath path("diagonal", {"t", "0"});
  PathLimit lim = limitAlongPath(nm, path);
  auto cone = makeCone(nm.algebra(), lim.limit, 2);
  ConeMetric coneMetric(cone);
  ManifoldMetric metric(fixtures::grushin(2));
  ConePoint p{Eigen::Vector2d(0.6, 0.3)};
  const double target = coneMetric.distance(cone->origin(), p).value;
  const Eigen::VectorXd v = cone->rep(p);
  double lastError = 0.0;
  for (double t : {1e-1, 1e-2, 1e-3}) {
    Eigen::VectorXd x = path.at(t);
    Eigen::VectorXd y = nm.flowNatural(v, t, x);
    lastError = std::abs(groupoidDistance(metric, GroupoidPoint::manifold(y, x, t)).value - target) / target;
  }
  CHECK(lastError <= 0.05);
}

TEST_CASE("quasi-norms of groupoid points") {
  NaturalMap euclid(fixtures::euclidean2());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Vector2d x(u(rng), u(rng)), y(u(rng), u(rng));
    const double t = 0.1 + std::abs(u(rng));
    QuasiNormResult q = quasiNormElement(euclid, GroupoidPoint::manifold(y, x, t));
    CHECK(q.finite);
    CHECK(std::abs(q.value - (y - x).norm() / t) <= 1e-9 * (1 + q.value));
  }

  NaturalMap grushin(fixtures::grushin(2));
  CHECK(quasiNormElement(grushin, GroupoidPoint::manifold(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2), 0.3)).value ==
        0.0);
  for (double a : {0.0, 0.5, -1.0}) {
    for (double t : {0.1, 0.5}) {
      const double b = 0.3;
      QuasiNormResult q =
          quasiNormElement(grushin, GroupoidPoint::manifold(Eigen::Vector2d(a + t, b), Eigen::Vector2d(a, b), t));
      CHECK(q.finite);
      CHECK(q.value <= 1.0 + 1e-8);
      CHECK((grushin.flowNatural(q.minimizer, t, Eigen::Vector2d(a, b)) - Eigen::Vector2d(a + t, b)).norm() <= 1e-6);
    }
  }

  // ||(y, x, t / lambda)|| = lambda ||(y, x, t)||.
  GroupoidPoint g = GroupoidPoint::manifold(Eigen::Vector2d(0.35, 0.2), Eigen::Vector2d(0.2, 0.1), 0.4);
  const double base = quasiNormElement(grushin, g).value;
  for (double lambda : {0.5, 2.0})
    CHECK(std::abs(quasiNormElement(grushin, dilate(g, lambda)).value - lambda * base) <= 1e-12 * lambda * base);

  // t = 0: the Grushin origin cone, where h = span(e2) and the coset of (a, 0, c) has norm max(|a|, sqrt|c|).
  auto cone = grushinOriginCone();
  QuasiNormResult q0 =
      quasiNormElement(grushin, GroupoidPoint::atZero(cone, ConePoint{Eigen::Vector2d(0.5, 0.09)}, Eigen::Vector2d(0, 0)));
  CHECK(q0.finite);
  CHECK(q0.value <= 0.5 + 1e-8);
  CHECK(q0.value >= 0.3 - 1e-8);
  CHECK(quasiNormElement(grushin, GroupoidPoint::atZero(cone, cone->origin(), Eigen::Vector2d(0, 0))).value == 0.0);
}

TEST_CASE("unreachable pairs report a possibly infinite quasi-norm") {
  // The flow of v x d/dx keeps the sign of x.
  SubRiemannianStructure radial(1, {{VectorField::parse({"x0"}), 1}}, 1);
  NaturalMap nm(radial);
  QuasiNormResult q =
      quasiNormElement(nm, GroupoidPoint::manifold(Eigen::VectorXd::Constant(1, -1), Eigen::VectorXd::Ones(1), 1.0));
  CHECK_FALSE(q.finite);
  CHECK(q.status() == "possibly infinite");
}

TEST_CASE("comparison scans") {
  ManifoldMetric euclid(fixtures::euclidean2());
  ComparisonOptions opts;
  opts.samplesPerT = 4;
  ComparisonReport e = comparisonRatioScan(euclid, opts);
  for (const auto& s : e.samples) {
    if (s.excluded) continue;
    CHECK(std::abs(s.ratio - 1.0) <= 1e-6);
  }
  CHECK(e.cHat <= 1.0 + 1e-6);
  CHECK(e.excluded == static_cast<int>(opts.tValues.size()));
  CHECK(e.samples.front().reason == "degenerate pair y = x");

  ManifoldMetric grushin(fixtures::grushin(2));
  ComparisonReport g = comparisonRatioScan(grushin, opts);
  CHECK(std::isfinite(g.cHat));
  CHECK(g.cHat >= 1.0);
  CHECK(g.stable());
}
