#include <doctest.h>

#include <random>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/vfields.hpp"
#include "oracles.hpp"

using namespace nilpotentizer;

namespace {

SubRiemannianStructure grushin(int depth) {
  std::string power = depth == 1 ? "1" : "x0^" + std::to_string(depth - 1);
  return SubRiemannianStructure(2, {{VectorField::parse({"1", "0"}), 1}, {VectorField::parse({"0", power}), 1}},
                                depth);
}

SubRiemannianStructure heisenberg() {
  return SubRiemannianStructure(3, {{VectorField::parse({"1", "0", "0"}), 1}, {VectorField::parse({"0", "1", "x0"}), 1}},
                                2);
}

}  // namespace

TEST_CASE("polynomial parsing and printing") {
  Polynomial p = Polynomial::parse("x0^2*x1 - 3*x1", 2);
  CHECK(p.terms().size() == 2);
  const double x[2] = {2.0, 5.0};
  CHECK(p.evaluate(x) == doctest::Approx(20.0 - 15.0));
  CHECK(Polynomial::parse(p.toString(), 2) == p);
  CHECK(Polynomial::parse("(x0 + 1)^2 / 2", 1) == Polynomial::parse("0.5*x0^2 + x0 + 1/2", 1));
  CHECK(Polynomial::parse("x^2 + y", 2, {"x", "y"}) == Polynomial::parse("x0^2 + x1", 2));
}

TEST_CASE("malformed polynomials report positions") {
  try {
    Polynomial::parse("x0^", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 3);
  }
  CHECK_THROWS_AS(Polynomial::parse("x0 + x7", 2), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("sqrt(x0)", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("x0^-1", 1), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("(x0", 1), ParseError);
}

TEST_CASE("lie brackets") {
  VectorField dx = VectorField::parse({"1", "0"});
  VectorField dy = VectorField::parse({"0", "1"});
  VectorField xdy = VectorField::parse({"0", "x0"});
  VectorField ydx = VectorField::parse({"x1", "0"});
  CHECK(lieBracket(dx, xdy) == dy);
  CHECK(lieBracket(dx, dy).isZero());
  CHECK(lieBracket(xdy, ydx) == VectorField::parse({"x0", "-x1"}));
  CHECK_THROWS_AS(lieBracket(dx, VectorField::parse({"1", "0", "0"})), DimensionMismatch);
}

TEST_CASE("flows") {
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd y = flow(VectorField::parse({"1", "0"}), origin);
  CHECK((y - Eigen::Vector2d(1, 0)).norm() < 1e-12);
  CHECK_THROWS_AS(flow(VectorField::parse({"x0^2"}), Eigen::VectorXd::Constant(1, 2.0)), FlowEscaped);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = u(rng), l0 = u(rng), l1 = u(rng), l2 = u(rng), x = u(rng), yy = u(rng);
    VectorField f = VectorField::parse({"1", "0"}) * Rational(mu) + VectorField::parse({"0", "1"}) * Rational(l0) +
                    VectorField::parse({"0", "x0"}) * Rational(l1) + VectorField::parse({"0", "x0^2"}) * Rational(l2);
    Eigen::Vector2d got = flow(f, Eigen::Vector2d(x, yy));
    CHECK((got - oracle::grushinFlow(mu, {l0, l1, l2}, x, yy)).norm() < 1e-8);
  }
}

TEST_CASE("compiled fields agree with symbolic evaluation and derivatives") {
  std::vector<VectorField> fields = {VectorField::parse({"x0^2*x1 - 3*x1", "x1^3"}), VectorField::parse({"1", "x0*x1"})};
  CompiledFields c(fields);
  Eigen::MatrixXd values, jac;
  Eigen::Vector2d x(0.7, -1.3);
  c.evaluateWithJacobians(x.data(), values, jac);
  for (int k = 0; k < 2; ++k) {
    CHECK((values.col(k) - fields[k].evaluate(x)).norm() < 1e-14);
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d e = Eigen::Vector2d::Unit(j) * 1e-6;
      Eigen::VectorXd fd = (fields[k].evaluate(x + e) - fields[k].evaluate(x - e)) / 2e-6;
      CHECK((jac.col(k * 2 + j) - fd).norm() < 1e-7);
    }
  }
}

TEST_CASE("natural map of the Grushin plane") {
  NaturalMap nm(grushin(2));
  REQUIRE(nm.algebra()->dim() == 3);
  CHECK(nm.realization()[0] == VectorField::parse({"1", "0"}));
  CHECK(nm.realization()[1] == VectorField::parse({"0", "x0"}));
  CHECK(nm.realization()[2] == VectorField::parse({"0", "1"}));
  CHECK(nm.compatibilityFailures().empty());

  NaturalMap nm3(grushin(3));
  CHECK(nm3.compatibilityFailures().empty());
  CHECK(nm3.realization()[2] == VectorField::parse({"0", "2*x0"}));
  CHECK(nm3.realization()[3] == VectorField::parse({"0", "2"}));
  CHECK(nm3.realization()[4].isZero());

  const double a = 0.8, t = 0.3;
  Eigen::MatrixXd m = nm.naturalAt(Eigen::Vector2d(a, 1.5), t);
  Eigen::MatrixXd expected(2, 3);
  expected << t, 0, 0, 0, t * a, t * t;
  CHECK((m - expected).norm() < 1e-15);
  CHECK(nm.naturalAt(Eigen::Vector2d(a, 1.5), 0.0).norm() == 0.0);

  LieVector e2 = basisVector(nm.algebra(), 1);
  CHECK(nm.naturalT(e2, 2.0) == VectorField::parse({"0", "2*x0"}));
  CHECK(nm.naturalT(e2, 0.0).isZero());
}

TEST_CASE("Heisenberg and commuting fields") {
  NaturalMap nm(heisenberg());
  CHECK(nm.realization()[2] == VectorField::parse({"0", "0", "1"}));
  SubRiemannianStructure flat(2, {{VectorField::parse({"1", "0"}), 1}, {VectorField::parse({"0", "1"}), 1}}, 2);
  CHECK(NaturalMap(flat).realization()[2].isZero());
}

TEST_CASE("Hormander checks") {
  std::vector<Eigen::VectorXd> grid;
  for (double a : {-1.0, 0.0, 0.5})
    for (double b : {-1.0, 0.0, 2.0}) grid.push_back(Eigen::Vector2d(a, b));
  auto g = hormanderCheck(grushin(3), grid);
  CHECK(g.ok());
  for (const auto& p : g.points) CHECK(p.rank == 2);
  SubRiemannianStructure single(2, {{VectorField::parse({"1", "0"}), 1}}, 3);
  auto s = hormanderCheck(single, grid);
  CHECK_FALSE(s.ok());
  CHECK(s.points[0].rank == 1);
  std::vector<Eigen::VectorXd> grid3 = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, -2, 3)};
  auto h = hormanderCheck(heisenberg(), grid3);
  CHECK(h.ok());
}

TEST_CASE("structure validation") {
  VectorField dx = VectorField::parse({"1", "0"});
  CHECK_THROWS(SubRiemannianStructure(2, {{dx, 0}}, 2));
  CHECK_THROWS(SubRiemannianStructure(2, {{dx, 3}}, 2));
  Eigen::MatrixXd badGram(1, 1);
  badGram << -1;
  CHECK_THROWS(SubRiemannianStructure(2, {{dx, 1}}, 2, badGram));
}
