#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/control.hpp"
#include "nilpotentizer/vfields.hpp"

namespace nilpotentizer {

struct MetricOptions {
  int segments = 24;
  int substeps = 4;
  /// Seeded starts (straight line first); at least the straight start runs when no warm start is given.
  int starts = 8;
  int outerIterations = 6;
  double endpointTol = 1e-6;
  /// Budget for optimizer noise in comparisons between solver outputs.
  double solverTol = 1e-4;
  std::uint64_t seed = 7;
};

struct DistanceResult {
  /// Upper bound: length of the returned controls.
  double value = 0.0;
  double energy = 0.0;
  /// segments x m, generator coordinates, scaled so that sum_k |u_k|_G / K = value.
  Eigen::MatrixXd controls;
  /// (segments + 1) x state dimension.
  Eigen::MatrixXd trajectory;
  /// Best value after each restart.
  std::vector<double> history;
  /// Euclidean endpoint residual of the re-integrated controls.
  double residual = 0.0;
  bool converged = false;
  int restarts = 0;
  std::string status() const { return converged ? "converged" : "unconverged"; }
};

/// CC distances on the manifold; d_t(x, y) is d_1(x, y) / t.
class ManifoldMetric {
 public:
  explicit ManifoldMetric(const SubRiemannianStructure& structure, MetricOptions opts = {});

  const NaturalMap& naturalMap() const { return *nm_; }
  const MetricOptions& options() const { return opts_; }
  int controlDim() const { return static_cast<int>(horizontal_.size()); }

  /// warm: controls in the output convention for the same t.
  DistanceResult distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t = 1.0,
                          const std::vector<Eigen::MatrixXd>& warm = {}) const;
  /// Endpoint of the RK4 integration of generator controls (convention of d_1) from x.
  Eigen::VectorXd integrate(const Eigen::VectorXd& x, const Eigen::MatrixXd& controls) const;
  /// The scaled transcription used internally: controls are s * T * w with T = G^{-1/2}.
  ControlProblem problem(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double scale) const;
  /// Characteristic size of a displacement, from the quasi-norm of a least-squares preimage.
  double displacementScale(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

 private:
  void step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt, Eigen::VectorXd& next,
            Eigen::MatrixXd* a, Eigen::MatrixXd* b) const;

  std::shared_ptr<NaturalMap> nm_;
  MetricOptions opts_;
  std::vector<int> horizontal_;
  CompiledFields fields_;
  Eigen::MatrixXd gramInvSqrt_;
};

/// CC distances on G/H; the curve g' = (u.E) g is integrated exactly in the group.
class ConeMetric {
 public:
  ConeMetric(std::shared_ptr<const TangentCone> cone, const Eigen::MatrixXd& gram = {}, MetricOptions opts = {});

  const TangentCone& cone() const { return *cone_; }
  const MetricOptions& options() const { return opts_; }

  DistanceResult distance(const ConePoint& p, const ConePoint& q, const std::vector<Eigen::MatrixXd>& warm = {}) const;
  /// Coset reached from p with generator controls.
  ConePoint integrate(const ConePoint& p, const Eigen::MatrixXd& controls) const;
  ControlProblem problem(const ConePoint& p, const ConePoint& q, double scale) const;
  double displacementScale(const ConePoint& p, const ConePoint& q) const;

 private:
  std::shared_ptr<const TangentCone> cone_;
  MetricOptions opts_;
  Eigen::MatrixXd gramInvSqrt_;
  Eigen::MatrixXd e_;
};

DistanceResult ccDistanceManifold(const SubRiemannianStructure& structure, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y, double t, const MetricOptions& opts = {});
DistanceResult ccDistanceCone(std::shared_ptr<const TangentCone> cone, const Eigen::MatrixXd& gram, const ConePoint& p,
                              const ConePoint& q, const MetricOptions& opts = {});

/// Either (y, x, t) with t > 0 or (gL, x, 0) carrying a cone.
struct GroupoidPoint {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  double t = 1.0;
  std::shared_ptr<const TangentCone> cone;
  ConePoint p;

  static GroupoidPoint manifold(Eigen::VectorXd y, Eigen::VectorXd x, double t);
  static GroupoidPoint atZero(std::shared_ptr<const TangentCone> cone, ConePoint p, Eigen::VectorXd x);
  bool isZero() const { return t == 0.0; }
};

/// (y, x, t) -> (y, x, t / lambda); (gL, x, 0) -> (alpha_lambda(g) alpha_lambda(L), x, 0).
GroupoidPoint dilate(const GroupoidPoint& g, double lambda);

/// d_t(x, y) on the manifold branch, d(p, base) on the cone branch.
DistanceResult groupoidDistance(const ManifoldMetric& metric, const GroupoidPoint& g);

struct QuasiNormResult {
  double value = 0.0;
  Eigen::VectorXd minimizer;
  double residual = 0.0;
  /// False when no solution was found ("possibly infinite").
  bool finite = true;
  std::string status() const { return finite ? "ok" : "possibly infinite"; }
};

struct QuasiNormOptions {
  double feasibilityTol = 1e-10;
  int bisections = 40;
  double relativeTol = 1e-8;
  int lmIterations = 60;
};

/// inf |v| subject to y = exp(natural_t v) x (t > 0) or v in the coset gL (t = 0).
QuasiNormResult quasiNormElement(const NaturalMap& nm, const GroupoidPoint& g, const QuasiNormOptions& opts = {});

struct ComparisonSample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double quasiNorm = 0.0;
  double distance = 0.0;
  double ratio = 0.0;
  bool excluded = false;
  std::string reason;
};

struct ComparisonOptions {
  Eigen::VectorXd center;
  double halfWidth = 0.5;
  std::vector<double> tValues = {1e-1, 1e-2, 1e-3, 1e-4};
  int samplesPerT = 6;
  /// Range of the quasi-norm of the displacement generator v in y = exp(natural_t v) x.
  double vMin = 0.3;
  double vMax = 1.0;
  std::uint64_t seed = 3;
};

struct ComparisonReport {
  std::vector<ComparisonSample> samples;
  /// Empirical max(ratio, 1/ratio) for each t value.
  std::vector<double> cHatPerT;
  double cHat = 0.0;
  /// Relative change of C-hat between the two finest t values.
  double drift = 0.0;
  int excluded = 0;
  bool stable() const { return std::isfinite(cHat) && drift <= 0.1; }
};

/// Same displacement generators and base points are reused at every t, so the ratios follow one
/// sequence towards the cone.
ComparisonReport comparisonRatioScan(const ManifoldMetric& metric, const ComparisonOptions& opts,
                                     const QuasiNormOptions& qopts = {});

}  // namespace nilpotentizer
