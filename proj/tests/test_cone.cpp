#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/grassmann.hpp"

using namespace nilpotentizer;

namespace {

/// Closed-form Heisenberg product in the library's convention: x*y = x + y - 1/2 [x,y].
Eigen::Vector3d heisenbergProduct(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  return {x(0) + y(0), x(1) + y(1), x(2) + y(2) - 0.5 * (x(0) * y(1) - x(1) * y(0))};
}

Subspace spanCols(const Eigen::MatrixXd& m) { return Subspace::span(m); }

Subspace grushin3Lambda1() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(5, 3);
  b(2, 0) = 1;
  b(3, 0) = -1;
  b(1, 1) = 2;
  b(2, 1) = -1;
  b(4, 2) = 1;
  return spanCols(b);
}

Eigen::VectorXd randomVector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

TEST_CASE("building cones") {
  auto h3 = freeNilpotent(2, {1, 1}, 2);
  TangentCone grushin = buildCone(h3, spanCols(Eigen::Vector3d(0, 1, 0)), 2);
  Eigen::MatrixXd expectedS(3, 2);
  expectedS << 1, 0, 0, 0, 0, 1;
  CHECK(grushin.complementBasis() == expectedS);
  CHECK(grushin.weight1() == std::vector<int>{0, 1});
  Eigen::MatrixXd identity = grushin.complementBasis() * grushin.projectS() +
                             grushin.h().basis() * grushin.projectH();
  CHECK((identity - Eigen::Matrix3d::Identity()).norm() < 1e-14);

  Eigen::MatrixXd b12(3, 2);
  b12 << 1, 0, 0, 1, 0, 0;
  CHECK_THROWS_AS(buildCone(h3, spanCols(b12)), NotASubalgebra);
  CHECK_THROWS_AS(buildCone(h3, spanCols(Eigen::Vector3d(0, 1, 0)), 3), DimensionMismatch);

  TangentCone group = buildCone(h3, Subspace::zero(3), 3);
  CHECK(group.complementBasis() == Eigen::MatrixXd::Identity(3, 3));

  TangentCone tilted = buildCone(h3, spanCols(Eigen::Vector3d(0, 1, -1)), 2);
  Eigen::MatrixXd s12(3, 2);
  s12 << 1, 0, 0, 1, 0, 0;
  CHECK(tilted.complementBasis() == s12);
}

TEST_CASE("canonical representatives") {
  auto h3 = freeNilpotent(2, {1, 1}, 2);
  TangentCone cone = buildCone(h3, spanCols(Eigen::Vector3d(0, 1, 0)), 2);
  ConePoint p = canonicalRep(cone, Eigen::Vector3d(1, 1, 0));
  CHECK((p.s - Eigen::Vector2d(1, 0.5)).norm() < 1e-12);

  // Grid search over h with the closed-form product.
  double best = 1e300, bestA = 0;
  for (double a = -3; a <= 3; a += 1e-4) {
    const double r = std::abs(heisenbergProduct({1, 1, 0}, {0, a, 0})(1));
    if (r < best) {
      best = r;
      bestA = a;
    }
  }
  Eigen::Vector3d grid = heisenbergProduct({1, 1, 0}, {0, bestA, 0});
  CHECK((p.s - Eigen::Vector2d(grid(0), grid(2))).norm() < 1e-3);

  CHECK(canonicalRep(cone, Eigen::Vector3d(0, 2.5, 0)).s.norm() < 1e-14);
  CHECK((canonicalRep(cone, Eigen::Vector3d(0.3, 0, -2)).s - Eigen::Vector2d(0.3, -2)).norm() < 1e-14);

  // left_translate(e2, e1) = canonical_rep(e2 * e1); by hand (1,1,1/2)*(0,-1,0) = (1,0,1).
  ConePoint e1{Eigen::Vector2d(1, 0)};
  ConePoint moved = leftTranslate(cone, Eigen::Vector3d(0, 1, 0), e1);
  CHECK((moved.s - Eigen::Vector2d(1, 1)).norm() < 1e-12);
  CHECK((leftTranslate(cone, Eigen::Vector3d(1, 0, 0), cone.origin()).s - Eigen::Vector2d(1, 0)).norm() < 1e-14);
  CHECK(leftTranslate(cone, Eigen::Vector3d(0, -4, 0), cone.origin()).s.norm() < 1e-14);
}

TEST_CASE("the left action on a step-3 cone") {
  auto g = freeNilpotent(2, {1, 1}, 3);
  TangentCone cone = buildCone(g, grushin3Lambda1(), 2);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd a = randomVector(rng, 5), b = randomVector(rng, 5);
    ConePoint p = canonicalRep(cone, randomVector(rng, 5));
    CHECK((canonicalRep(cone, cone.rep(p)).s - p.s).norm() < 1e-12);
    CHECK((leftTranslate(cone, Eigen::VectorXd::Zero(5), p).s - p.s).norm() < 1e-12);
    ConePoint composed = leftTranslate(cone, g->bch(a, b), p);
    ConePoint stepwise = leftTranslate(cone, a, leftTranslate(cone, b, p));
    CHECK((composed.s - stepwise.s).norm() < 1e-10);
    CHECK((cone.projectH() * cone.rep(p)).norm() < 1e-10);
  }
}

TEST_CASE("horizontal frames") {
  auto h3 = freeNilpotent(2, {1, 1}, 2);
  std::mt19937_64 rng(9);
  TangentCone origin = buildCone(h3, spanCols(Eigen::Vector3d(0, 1, 0)), 2);
  TangentCone infinite = buildCone(h3, spanCols(Eigen::Vector3d(0, 0, 1)), 2);
  TangentCone group = buildCone(h3, Subspace::zero(3), 3);
  for (int trial = 0; trial < 10; ++trial) {
    ConePoint p{randomVector(rng, 2, 2.0)};
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 0, 0, p.s(0);
    CHECK((horizontalFrame(origin, p) - expected).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((horizontalFrame(infinite, p) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-10);

    ConePoint q{randomVector(rng, 3, 2.0)};
    Eigen::MatrixXd fd(3, 2);
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
      fd.col(k) = (heisenbergProduct(h * e, q.s) - heisenbergProduct(-h * e, q.s)) / (2 * h);
    }
    CHECK((horizontalFrame(group, q) - fd).norm() < 1e-8);
  }
  Eigen::MatrixXd atZero = Eigen::MatrixXd::Zero(3, 2);
  atZero(0, 0) = atZero(1, 1) = 1;
  CHECK((horizontalFrame(group, group.origin()) - atZero).norm() < 1e-15);

  auto g = freeNilpotent(2, {1, 1}, 3);
  TangentCone step3 = buildCone(g, grushin3Lambda1(), 2);
  for (int trial = 0; trial < 10; ++trial) {
    ConePoint p = canonicalRep(step3, randomVector(rng, 5));
    CHECK((horizontalFrame(step3, p) - horizontalFrameFiniteDifference(step3, p)).norm() < 1e-5);
  }
}

TEST_CASE("frames are pushed forward by the left action") {
  // d(L_g) xi_e(p) = xi_{Ad_g e}(g.p) when h = 0, checked by finite differences.
  auto g = freeNilpotent(2, {1, 1}, 3);
  TangentCone group = buildCone(g, Subspace::zero(5), 5);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd a = randomVector(rng, 5);
    ConePoint p{randomVector(rng, 5)};
    Eigen::MatrixXd frame = horizontalFrame(group, p);
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd plus = leftTranslate(group, a, ConePoint{p.s + h * frame.col(k)}).s;
      Eigen::VectorXd minus = leftTranslate(group, a, ConePoint{p.s - h * frame.col(k)}).s;
      Eigen::VectorXd pushed = (plus - minus) / (2 * h);
      ConePoint moved = leftTranslate(group, a, p);
      Eigen::VectorXd e = g->adjoint(a, Eigen::VectorXd::Unit(5, k));
      Eigen::VectorXd direct =
          (leftTranslate(group, h * e, moved).s - leftTranslate(group, -h * e, moved).s) / (2 * h);
      CHECK((pushed - direct).norm() < 1e-5);
    }
  }
}

TEST_CASE("distinguished subspace r_x") {
  NaturalMap g2(fixtures::grushin(2));
  RxReport origin = computeRx(g2, Eigen::Vector2d(0, 0));
  CHECK(origin.ranks == std::vector<int>{1, 2});
  CHECK(gapDistance(origin.preimage, spanCols(Eigen::Vector3d(0, 1, 0))) < 1e-14);
  RxReport regular = computeRx(g2, Eigen::Vector2d(1, 0));
  CHECK(regular.ranks == std::vector<int>{2, 2});
  CHECK(gapDistance(regular.preimage, spanCols(Eigen::Vector3d(0, 0, 1))) < 1e-14);
  CHECK(computeRx(NaturalMap(fixtures::euclidean2()), Eigen::Vector2d(0.3, 1)).preimage.dim() == 0);

  for (int depth : {2, 3}) {
    NaturalMap nm(fixtures::grushin(depth));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        Eigen::Vector2d x(-1 + 0.5 * i, -1 + 0.5 * j);
        RxReport r = computeRx(nm, x);
        CHECK(r.limitGap <= 1e-8);
        CHECK(isSubalgebra(*nm.algebra(), r.preimage).residual <= 1e-8);
        CHECK(std::is_sorted(r.ranks.begin(), r.ranks.end()));
      }
  }

  SubRiemannianStructure single(2, {{VectorField::parse({"1", "0"}), 1}}, 2);
  CHECK_THROWS_AS(computeRx(NaturalMap(single), Eigen::Vector2d(0, 0)), NumericFailure);
}

TEST_CASE("the cone at the Grushin origin is the Grushin plane") {
  NaturalMap nm(fixtures::grushin(2));
  PathLimit lim = limitAlongPath(nm, ApproachPath("origin", {"0", "0"}));
  TangentCone cone = buildCone(nm.algebra(), lim.limit, 2);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    ConePoint p{randomVector(rng, 2)};
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 0, 0, p.s(0);
    CHECK((horizontalFrame(cone, p) - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
