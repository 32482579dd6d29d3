#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nilpotentizer {

/// Discrete-time system x_{k+1} = step(x_k, w_k, dt) with an endpoint constraint c(x_K) = 0.
struct ControlProblem {
  int stateDim = 0;
  int controlDim = 0;
  int constraintDim = 0;
  Eigen::VectorXd initial;
  /// Fills next, and A = d next/dx, B = d next/dw when non-null.
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double dt, Eigen::VectorXd& next,
                     Eigen::MatrixXd* a, Eigen::MatrixXd* b)>
      step;
  /// Fills c, and C = dc/dx when non-null.
  std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& c, Eigen::MatrixXd* jac)> endpoint;
};

struct ControlOptions {
  int segments = 24;
  int outerIterations = 6;
  int innerIterations = 60;
  double penalty = 100.0;
  double penaltyGrowth = 10.0;
  double endpointTol = 1e-6;
  /// Inner iterations stop once the step is below stepTol * (1 + |w|).
  double stepTol = 1e-6;
};

struct Rollout {
  std::vector<Eigen::VectorXd> states;
  Eigen::VectorXd c;
  /// constraintDim x (segments * controlDim), column k*m + i for control i on segment k.
  Eigen::MatrixXd jacobian;
};

/// Integrates the controls (segments x controlDim); the Jacobian comes from a reverse sweep.
Rollout rollout(const ControlProblem& problem, const Eigen::MatrixXd& controls, bool withJacobian);

struct ControlSolution {
  Eigen::MatrixXd controls;
  double energy = 0.0;
  /// sum_k dt |w_k|, the length of the control curve.
  double length = 0.0;
  double residual = 0.0;
  bool feasible = false;
  std::vector<Eigen::VectorXd> states;
  /// Best feasible length after each start (infinity until one is found).
  std::vector<double> history;
};

/// Minimizes dt * sum |w_k|^2 subject to c = 0 by an augmented Lagrangian with structured quasi-Newton inner steps,
/// followed by a minimum-norm feasibility polish. Runs every start and keeps the shortest feasible result.
ControlSolution solveControl(const ControlProblem& problem, const std::vector<Eigen::MatrixXd>& starts,
                             const ControlOptions& opts = {});

/// Straight start plus loop perturbations cos/sin(2 pi f k / K) with random amplitude, phase and frequency.
std::vector<Eigen::MatrixXd> seededStarts(const Eigen::MatrixXd& straight, int count, double scale,
                                          std::uint64_t seed);

}  // namespace nilpotentizer
