#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/grassmann.hpp"
#include "nilpotentizer/metrics.hpp"

namespace nilpotentizer {

struct NetOptions {
  /// Candidates are drawn from the quasi-norm box |s_c| <= (boxFactor R)^{w_c}.
  double boxFactor = 1.0;
  /// Shrinks each side of the box to calibrationMargin times the extent of the ball along that axis.
  bool calibrateBox = true;
  double calibrationMargin = 1.5;
  /// Box growth for the single retry when fewer than n/2 candidates land in the ball.
  double retryGrowth = 1.5;
  /// Candidate budget per requested point.
  int candidatesPerPoint = 12;
  /// Fineness is estimated from probesPerPoint * n probes inside the ball.
  int probesPerPoint = 4;
  /// Net points per probe that get an exact solve, chosen by the quasi-norm of the difference.
  int probeNeighbours = 3;
  int jobs = 1;
};

/// Points of a ball around a base point with their pairwise distance upper bounds.
struct PointedNet {
  std::vector<Eigen::VectorXd> points;
  int base = 0;
  double radius = 0.0;
  Eigen::MatrixXd distances;
  double fineness = 0.0;
  /// Row-major n x n; pairControls[i * n + j] steers point i to point j (i < j), generator convention.
  std::vector<Eigen::MatrixXd> pairControls;
  int unconverged = 0;
  int candidates = 0;
  int accepted = 0;
  /// Half-widths of the sampling box in S-coordinates.
  Eigen::VectorXd box;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(points.size()); }
};

/// Halton samples of the cone ball B(origin, R) in S-coordinates; the origin is point 0.
PointedNet sampleBallCone(const ConeMetric& metric, double radius, int n, std::uint64_t seed,
                          const NetOptions& opts = {});

struct MappedNet {
  std::vector<Eigen::VectorXd> points;
  /// Per point: empty, or the flow error for points the chart could not reach.
  std::vector<std::string> errors;
  int escaped = 0;
};

/// p -> exp(natural_t(rep p)) x(t).
MappedNet correspondenceMap(const NaturalMap& nm, const TangentCone& cone, const ApproachPath& path, double t,
                            const PointedNet& net);

/// max |A(i, j) - B(pi(i), pi(j))| over all pairs; pairs with a NaN entry are skipped.
double distortion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<int>& pairing);
/// Same, for nets; the pairing must send base to base.
double distortion(const PointedNet& a, const PointedNet& b, const std::vector<int>& pairing);

/// Upper bound on the pointed GH distance of the balls through one correspondence.
inline double ghBound(double distortion, double fineness) { return 0.5 * distortion + fineness; }

struct ConvergenceRow {
  double t = 0.0;
  double distortion = 0.0;
  /// Gap between the dilated kernel at x(t) and the limit subspace.
  double gap = 0.0;
  int netSize = 0;
  double ghBound = 0.0;
  int unconverged = 0;
  int escaped = 0;
  /// More than 10% of the pairs unconverged.
  bool flagged = false;
  double seconds = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Least-squares slope of log D against log t over rows with D > 0.
  double slope = 0.0;
  double fineness = 0.0;
  double radius = 0.0;
  int coneDim = 0;
  Eigen::MatrixXd limitBasis;
  /// "t,D,gap,net_size,gh_bound" rows.
  std::string csv() const;
  /// D_{k+1} <= D_k + slack for every consecutive pair of rows.
  bool monotone(double slack) const;
};

struct StudyOptions {
  double radius = 1.0;
  int netSize = 30;
  /// Defaults to t_k = 0.2 * 2^{-k}, k = 0..7.
  std::vector<double> schedule;
  std::uint64_t seed = 11;
  MetricOptions coneMetric;
  /// Manifold rows start from the cone geodesic and the previous row's solution only.
  MetricOptions manifoldMetric = [] {
    MetricOptions o;
    o.starts = 0;
    return o;
  }();
  NetOptions net;
  LimitOptions limit;
};

std::vector<double> defaultSchedule();

/// Builds the cone of the path limit once, samples its ball, and compares with the chart image at each t.
ConvergenceTable convergenceStudy(const NaturalMap& nm, const ApproachPath& path, const StudyOptions& opts = {});

}  // namespace nilpotentizer
