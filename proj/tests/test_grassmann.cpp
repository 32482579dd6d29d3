#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "grushin_oracle.hpp"
#include "nilpotentizer/grassmann.hpp"
#include "oracles.hpp"

using namespace nilpotentizer;

namespace {

Subspace spanOf(std::initializer_list<std::initializer_list<double>> vectors, int n) {
  Eigen::MatrixXd m(n, static_cast<int>(vectors.size()));
  int c = 0;
  for (const auto& v : vectors) {
    int r = 0;
    for (double x : v) m(r++, c) = x;
    ++c;
  }
  return Subspace::span(m);
}

/// Naive alpha_lambda: scale an orthonormal basis and re-orthonormalize by SVD.
Subspace naiveDilate(double lambda, const Subspace& s, const std::vector<int>& w) {
  Eigen::MatrixXd b = s.basis();
  for (int i = 0; i < b.rows(); ++i) b.row(i) *= std::pow(lambda, w[i]);
  return Subspace::span(b, 1e-15);
}

const std::vector<int> kHeisenbergWeights = {1, 1, 2};

}  // namespace

TEST_CASE("kernels") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 0, 0, 0, 1, 1;
  Subspace k = kernel(a);
  REQUIRE(k.dim() == 1);
  CHECK(oracle::lineGap(k.basis().col(0), Eigen::Vector3d(0, 1, -1)) < 1e-14);
  CHECK(kernel(Eigen::Matrix3d::Identity() * 2.0).dim() == 0);
  CHECK(kernel(Eigen::MatrixXd::Zero(2, 3)).dim() == 3);

  NaturalMap nm(fixtures::grushin(2));
  Subspace k0 = kernel(nm.naturalAt(Eigen::Vector2d(0, 0.7), 1.0));
  REQUIRE(k0.dim() == 1);
  CHECK(oracle::lineGap(k0.basis().col(0), Eigen::Vector3d(0, 1, 0)) < 1e-14);
}

TEST_CASE("dilating subspaces") {
  Subspace e3 = spanOf({{0, 0, 1}}, 3);
  CHECK(gapDistance(dilateSubspace(5.0, e3, kHeisenbergWeights), e3) < 1e-15);
  Subspace s = spanOf({{0, 1, -0.3}}, 3);
  CHECK(gapDistance(dilateSubspace(1.0, s, kHeisenbergWeights), s) < 1e-15);
  for (double t : {0.5, 1e-2, 1e-5}) {
    Subspace d = dilateSubspace(1.0 / t, s, kHeisenbergWeights);
    CHECK(oracle::lineGap(d.basis().col(0), Eigen::Vector3d(0, 1, -0.3 / t)) < 1e-12);
  }
  // Larger subspace against the naive route at moderate factors.
  Subspace two = spanOf({{1, 0, 0.4}, {0.2, 1, -1}}, 3);
  for (double lambda : {0.3, 3.0}) {
    CHECK(gapDistance(dilateSubspace(lambda, two, kHeisenbergWeights), naiveDilate(lambda, two, kHeisenbergWeights)) <
          1e-12);
  }
}

TEST_CASE("gap distance") {
  Subspace s = spanOf({{1, 2, 3}}, 3);
  CHECK(gapDistance(s, s) < 1e-15);
  CHECK(gapDistance(spanOf({{1, 0}}, 2), spanOf({{0, 1}}, 2)) == doctest::Approx(1.0));
  const double a = 0.7;
  for (double t : {1.0, 0.1, 0.01}) {
    const double expected = 1.0 / std::sqrt(1.0 + (a / t) * (a / t));
    CHECK(gapDistance(spanOf({{0, 1, -a / t}}, 3), spanOf({{0, 0, 1}}, 3)) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gapDistance(spanOf({{1, 0, 0}}, 3), Subspace::full(3)), DimensionMismatch);
}

TEST_CASE("graded limit of a fixed subspace") {
  Subspace s = spanOf({{0, 1, -1}}, 3);
  Subspace lim = gradedLimitFixed(s, kHeisenbergWeights);
  CHECK(oracle::lineGap(lim.basis().col(0), Eigen::Vector3d(0, 0, 1)) < 1e-14);
  CHECK(gapDistance(gradedLimitFixed(spanOf({{0, 1, 0}}, 3), kHeisenbergWeights), spanOf({{0, 1, 0}}, 3)) < 1e-15);
  CHECK(gapDistance(gradedLimitFixed(spanOf({{1, 0, 1}}, 3), kHeisenbergWeights), spanOf({{0, 0, 1}}, 3)) < 1e-15);

  // Numeric dilation oracle on random subspaces of the step-3 algebra.
  const std::vector<int> w = {1, 1, 2, 3, 3};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd b(5, 2);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 2; ++j) b(i, j) = normal(rng);
    Subspace r = Subspace::span(b);
    Subspace lim5 = gradedLimitFixed(r, w);
    CHECK(gapDistance(gradedLimitFixed(lim5, w), lim5) < 1e-12);
    double previous = 1.0;
    for (double t : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double gap = gapDistance(dilateSubspace(1.0 / t, r, w), lim5);
      CHECK(gap <= previous + 1e-12);
      previous = gap;
    }
    CHECK(previous < 1e-5);
  }
}

TEST_CASE("exact graded limit matches the floating one") {
  const std::vector<int> w = {1, 1, 2, 3, 3};
  std::vector<RVec> basis = {{0, 1, 2, 0, 1}, {1, 0, -1, 0, 2}, {0, 0, 3, 1, 2}};
  Eigen::MatrixXd b(5, 3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i) b(i, c) = basis[c][i].get_d();
  CHECK(gapDistance(gradedLimitExact(basis, w), gradedLimitFixed(Subspace::span(b), w)) < 1e-12);
}

TEST_CASE("scaling identity for kernels") {
  for (int depth : {2, 3}) {
    NaturalMap nm(fixtures::grushin(depth));
    std::mt19937_64 rng(depth);
    std::uniform_real_distribution<double> coord(-1.5, 1.5), logt(-3, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::Vector2d x(coord(rng), coord(rng));
      const double t = std::pow(10.0, logt(rng));
      Subspace direct = kernel(nm.naturalAt(x, t));
      Subspace dilated = dilateSubspace(1.0 / t, kernel(nm.naturalAt(x, 1.0)), nm.algebra()->weights());
      CHECK(gapDistance(direct, dilated) <= 1e-10);
    }
  }
}

TEST_CASE("limits along Grushin paths") {
  for (int depth : {2, 3}) {
    NaturalMap nm(fixtures::grushin(depth));
    for (double lambda : {0.0, 1.0, -1.0, 2.0}) {
      ApproachPath path("lambda", {std::to_string(lambda) + "*t", "0"});
      PathLimit result = limitAlongPath(nm, path);
      Subspace expected = Subspace::span(oracle::grushinPreimage(depth, lambda, false));
      CHECK(gapDistance(result.limit, expected) <= 1e-6);
      CHECK(result.diagnostics.isSubalgebra);
      CHECK(result.diagnostics.subalgebraResidual <= 1e-8);
    }
    ApproachPath sqrtPath("sqrt", {"sqrt(t)", "0"}, 0.1, 0.25, 40);
    PathLimit inf = limitAlongPath(nm, sqrtPath);
    CHECK(gapDistance(inf.limit, Subspace::span(oracle::grushinPreimage(depth, 0.0, true))) <= 1e-6);
  }
}

TEST_CASE("constant paths reproduce the fixed-point limit") {
  NaturalMap nm(fixtures::grushin(3));
  for (double a : {0.0, 0.5}) {
    ApproachPath path("const", {std::to_string(a), "0.3"});
    PathLimit result = limitAlongPath(nm, path);
    Subspace fixed = gradedLimitFixed(kernel(nm.naturalAt(Eigen::Vector2d(a, 0.3), 1.0)), nm.algebra()->weights());
    CHECK(gapDistance(result.limit, fixed) <= 1e-6);
  }
}

TEST_CASE("slow paths report no convergence") {
  NaturalMap nm(fixtures::grushin(2));
  ApproachPath slow("log", {"1/log(1/t)", "0"}, 0.1, 0.5, 10);
  CHECK_THROWS_AS(limitAlongPath(nm, slow), NoConvergence);
  try {
    limitAlongPath(nm, slow);
  } catch (const NoConvergence& e) {
    CHECK(e.diagnostics().gaps.size() == 10);
    CHECK(e.diagnostics().csv().rfind("k,t_k,gap\n", 0) == 0);
  }
}

TEST_CASE("conjugation of subspaces") {
  auto h = freeNilpotent(2, {1, 1}, 2);
  Subspace e2 = spanOf({{0, 1, 0}}, 3);
  CHECK(gapDistance(conjugateSubspace(*h, Eigen::Vector3d::Zero(), e2), e2) < 1e-15);
  CHECK(gapDistance(conjugateSubspace(*h, Eigen::Vector3d(1, 0, 0), e2), spanOf({{0, 1, -1}}, 3)) < 1e-15);
  Subspace center = spanOf({{0, 0, 1}}, 3);
  CHECK(gapDistance(conjugateSubspace(*h, Eigen::Vector3d(0.3, -2, 1), center), center) < 1e-15);
}

TEST_CASE("conjugation stability along shifted Grushin paths") {
  NaturalMap nm(fixtures::grushin(2));
  const double lambda = 1.0;
  ApproachPath base("base", {"t", "0"});
  Subspace h = limitAlongPath(nm, base).limit;
  for (int g = 0; g < 2; ++g) {
    Eigen::VectorXd gv = Eigen::VectorXd::Unit(3, g);
    // Shifted path evaluated through the flow, sampled at the same schedule.
    LimitDiagnostics diag;
    Subspace previous, current;
    for (double t : base.schedule()) {
      Eigen::VectorXd x = nm.flowNatural(gv, t, Eigen::Vector2d(lambda * t, 0.0));
      current = dilatedKernel(nm, x, t);
      if (previous.dim() && gapDistance(previous, current) < 1e-9) break;
      previous = current;
    }
    CHECK(gapDistance(current, conjugateSubspace(*nm.algebra(), gv, h)) <= 1e-5);
  }
}
