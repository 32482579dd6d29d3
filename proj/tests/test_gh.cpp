#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nilpotentizer/gh.hpp"

using namespace nilpotentizer;

namespace {

constexpr double kSolverTol = 1e-4;

std::shared_ptr<const TangentCone> euclideanCone() {
  auto alg = NaturalMap(fixtures::euclidean2()).algebra();
  return std::make_shared<TangentCone>(buildCone(alg, Subspace::zero(2), 2));
}

std::shared_ptr<const TangentCone> grushinOriginCone() {
  return std::make_shared<TangentCone>(
      buildCone(freeNilpotent(2, {1, 1}, 2), Subspace::span(Eigen::MatrixXd(Eigen::Vector3d(0, 1, 0))), 2));
}

StudyOptions smallStudy(int rows) {
  StudyOptions o;
  o.netSize = 10;
  o.schedule.clear();
  for (int k = 0; k < rows; ++k) o.schedule.push_back(0.2 * std::pow(2.0, -2 * k));
  return o;
}

}  // namespace

TEST_CASE("Euclidean cone nets") {
  ConeMetric metric(euclideanCone());
  NetOptions opts;
  opts.calibrateBox = false;
  PointedNet net = sampleBallCone(metric, 1.0, 40, 3, opts);
  REQUIRE(net.size() == 40);
  CHECK(net.warnings.empty());
  CHECK(net.base == 0);
  CHECK(net.points[0].norm() == 0.0);
  for (int i = 0; i < net.size(); ++i) {
    CHECK(net.distances(i, i) == 0.0);
    CHECK(net.points[i].norm() <= 1.0 + 1e-12);
    for (int j = 0; j < net.size(); ++j) {
      CHECK(std::abs(net.distances(i, j) - (net.points[i] - net.points[j]).norm()) <= 1e-6);
      CHECK(net.distances(i, j) == net.distances(j, i));
    }
  }
  // Disc over square; the last batch may overshoot by up to 15 candidates.
  const double fraction = static_cast<double>(net.accepted) / net.candidates;
  CHECK(fraction == doctest::Approx(M_PI / 4).epsilon(0.25));
  CHECK(net.fineness > 0.0);
  CHECK(net.fineness < 1.0);
}

TEST_CASE("small nets and ball membership") {
  ConeMetric metric(grushinOriginCone());
  PointedNet two = sampleBallCone(metric, 1.0, 2, 1);
  CHECK(two.size() == 2);
  CHECK(two.distances.rows() == 2);
  CHECK(two.distances.cols() == 2);
  CHECK_THROWS_AS(sampleBallCone(metric, 1.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sampleBallCone(metric, 0.0, 5, 1), std::invalid_argument);

  PointedNet net = sampleBallCone(metric, 0.8, 12, 5);
  CHECK(net.size() == 12);
  for (int i = 0; i < net.size(); ++i) {
    CHECK(net.distances(0, i) <= 0.8 + kSolverTol);
    for (int j = 0; j < net.size(); ++j) CHECK(net.distances(i, j) <= 1.6 + kSolverTol);
  }
  // The calibrated box is no larger than the quasi-norm box (0.8, 0.64).
  CHECK(net.box(0) <= 0.8);
  CHECK(net.box(1) <= 0.64);
  CHECK(net.box(1) < 0.64);
}

TEST_CASE("nets do not depend on the job count") {
  ConeMetric metric(grushinOriginCone());
  NetOptions serial, threaded;
  threaded.jobs = 3;
  PointedNet a = sampleBallCone(metric, 1.0, 8, 9, serial);
  PointedNet b = sampleBallCone(metric, 1.0, 8, 9, threaded);
  REQUIRE(a.size() == b.size());
  CHECK((a.distances - b.distances).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.fineness == b.fineness);
}

TEST_CASE("the chart") {
  NaturalMap nm(fixtures::grushin(2));
  auto cone = grushinOriginCone();
  ApproachPath path("fixed", {"0.5", "-0.2"});
  PointedNet net;
  net.points = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  for (double t : {0.3, 0.01}) {
    MappedNet m = correspondenceMap(nm, *cone, path, t, net);
    CHECK(m.escaped == 0);
    CHECK((m.points[0] - Eigen::Vector2d(0.5, -0.2)).norm() <= 1e-12);
    CHECK((m.points[1] - Eigen::Vector2d(0.5 + t, -0.2)).norm() <= 1e-9);
    CHECK((m.points[2] - Eigen::Vector2d(0.5, -0.2 + t * t)).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(correspondenceMap(nm, *cone, path, 0.0, net), std::invalid_argument);

  // x' = x^2 escapes before time 1 from x = 2.
  SubRiemannianStructure quadratic(1, {{VectorField::parse({"x0^2"}), 1}}, 1);
  NaturalMap qnm(quadratic);
  auto line = std::make_shared<TangentCone>(buildCone(qnm.algebra(), Subspace::zero(1), 1));
  PointedNet far;
  far.points = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 10.0)};
  MappedNet escaped = correspondenceMap(qnm, *line, ApproachPath("two", {"2"}), 0.5, far);
  CHECK(escaped.escaped == 1);
  CHECK(escaped.errors[0].empty());
  CHECK(escaped.errors[1].find("flow escaped") != std::string::npos);
}

TEST_CASE("distortion") {
  ConeMetric metric(euclideanCone());
  NetOptions opts;
  opts.calibrateBox = false;
  PointedNet net = sampleBallCone(metric, 1.0, 30, 4, opts);
  std::vector<int> identity(net.size());
  for (int i = 0; i < net.size(); ++i) identity[i] = i;
  CHECK(distortion(net, net, identity) == 0.0);
  CHECK(ghBound(distortion(net, net, identity), 0.0) <= 1e-12);

  const double maxDistance = net.distances.maxCoeff();
  for (double lambda : {1.1, 1.5}) {
    PointedNet scaled = net;
    scaled.distances *= lambda;
    const double d = distortion(net, scaled, identity);
    CHECK(d == doctest::Approx((lambda - 1) * maxDistance).epsilon(1e-12));
    // The nets nearly span a diameter, so D / 2 is close to (lambda - 1) R.
    CHECK(std::abs(ghBound(d, 0.0) - (lambda - 1) * net.radius) <= 0.1 * (lambda - 1) * net.radius);
  }

  std::vector<int> swapped = identity;
  std::swap(swapped[0], swapped[1]);
  CHECK_THROWS_AS(distortion(net, net, swapped), std::invalid_argument);
  CHECK_THROWS_AS(distortion(net, net, std::vector<int>(3, 0)), DimensionMismatch);

  Eigen::Matrix2d a, b;
  a << 0, 1, 1, 0;
  b << 0, std::nan(""), std::nan(""), 0;
  CHECK(distortion(a, b, {0, 1}) == 0.0);
}

TEST_CASE("convergence tables") {
  SUBCASE("Euclidean plane") {
    NaturalMap nm(fixtures::euclidean2());
    ConvergenceTable table = convergenceStudy(nm, ApproachPath("p", {"0.3", "0.1"}), smallStudy(3));
    REQUIRE(table.rows.size() == 3);
    for (const auto& r : table.rows) {
      CHECK(r.distortion <= 1e-6);
      CHECK(r.netSize == 10);
      CHECK(r.unconverged == 0);
      CHECK(r.ghBound == doctest::Approx(0.5 * r.distortion + table.fineness));
    }
    CHECK(table.csv().rfind("t,D,gap,net_size,gh_bound\n", 0) == 0);
  }
  SUBCASE("Grushin origin is self-similar") {
    NaturalMap nm(fixtures::grushin(2));
    ConvergenceTable table = convergenceStudy(nm, ApproachPath("origin", {"0", "0"}), smallStudy(3));
    for (const auto& r : table.rows) CHECK(r.distortion <= 3 * kSolverTol);
    CHECK(table.coneDim == 2);
  }
  SUBCASE("Grushin along sqrt(t) converges") {
    NaturalMap nm(fixtures::grushin(2));
    ApproachPath path("sqrt", {"sqrt(t)", "0"}, 0.1, 0.25, 40);
    ConvergenceTable table = convergenceStudy(nm, path, smallStudy(4));
    CHECK(table.monotone(2 * kSolverTol));
    CHECK(table.rows.back().distortion < 0.5 * table.rows.front().distortion);
    CHECK(table.slope > 0.3);
    for (std::size_t k = 1; k < table.rows.size(); ++k) CHECK(table.rows[k].gap < table.rows[k - 1].gap);
  }
  SUBCASE("schedules must decrease") {
    NaturalMap nm(fixtures::euclidean2());
    StudyOptions o = smallStudy(2);
    o.schedule = {0.1, 0.2};
    CHECK_THROWS_AS(convergenceStudy(nm, ApproachPath("p", {"0", "0"}), o), std::invalid_argument);
  }
  CHECK(defaultSchedule().size() == 8);
  CHECK(defaultSchedule().front() == 0.2);
}
