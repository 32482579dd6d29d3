#include "nilpotentizer/control.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace nilpotentizer {

Rollout rollout(const ControlProblem& problem, const Eigen::MatrixXd& controls, bool withJacobian) {
  const int segments = static_cast<int>(controls.rows());
  const int m = problem.controlDim;
  const double dt = 1.0 / segments;
  Rollout out;
  out.states.reserve(segments + 1);
  out.states.push_back(problem.initial);
  std::vector<Eigen::MatrixXd> as, bs;
  if (withJacobian) {
    as.resize(segments);
    bs.resize(segments);
  }
  Eigen::VectorXd next;
  for (int k = 0; k < segments; ++k) {
    Eigen::VectorXd w = controls.row(k).transpose();
    problem.step(out.states.back(), w, dt, next, withJacobian ? &as[k] : nullptr, withJacobian ? &bs[k] : nullptr);
    out.states.push_back(next);
  }
  Eigen::MatrixXd c;
  problem.endpoint(out.states.back(), out.c, withJacobian ? &c : nullptr);
  if (withJacobian) {
    out.jacobian.resize(problem.constraintDim, segments * m);
    for (int k = segments - 1; k >= 0; --k) {
      out.jacobian.middleCols(k * m, m) = c * bs[k];
      c = c * as[k];
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd reshape(const Eigen::VectorXd& w, int segments, int m) {
  Eigen::MatrixXd out(segments, m);
  for (int k = 0; k < segments; ++k) out.row(k) = w.segment(k * m, m).transpose();
  return out;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& controls) {
  Eigen::VectorXd w(controls.size());
  const int m = static_cast<int>(controls.cols());
  for (int k = 0; k < controls.rows(); ++k) w.segment(k * m, m) = controls.row(k).transpose();
  return w;
}

struct Attempt {
  Eigen::VectorXd w;
  Rollout last;
};

Attempt solveOne(const ControlProblem& p, const Eigen::MatrixXd& start, const ControlOptions& o) {
  const int segments = static_cast<int>(start.rows());
  const int m = p.controlDim;
  const int r = p.constraintDim;
  const double dt = 1.0 / segments;
  const double a = 2.0 * dt;
  Eigen::VectorXd w = flatten(start);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(r);
  double rho = o.penalty;

  auto merit = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& c) {
    return dt * v.squaredNorm() + mu.dot(c) + 0.5 * rho * c.squaredNorm();
  };

  // B approximates the Hessian of f + lambda^T c (damped BFGS); the penalty part rho J^T J is exact.
  const int nw = static_cast<int>(w.size());
  Eigen::MatrixXd bfgs = a * Eigen::MatrixXd::Identity(nw, nw);
  Rollout ro = rollout(p, reshape(w, segments, m), true);
  for (int outer = 0; outer < o.outerIterations; ++outer) {
    for (int inner = 0; inner < o.innerIterations; ++inner) {
      const Eigen::MatrixXd& j = ro.jacobian;
      Eigen::VectorXd lambda = mu + rho * ro.c;
      Eigen::VectorXd g = a * w + j.transpose() * lambda;
      Eigen::MatrixXd h = bfgs + rho * j.transpose() * j;
      Eigen::VectorXd d = -h.ldlt().solve(g);
      if (!d.allFinite() || g.dot(d) >= 0.0) d = -g / a;
      if (d.norm() <= o.stepTol * (1.0 + w.norm())) break;
      const double phi0 = merit(w, ro.c);
      const double slope = g.dot(d);
      double s = 1.0;
      bool accepted = false;
      Eigen::VectorXd trial;
      double phi = phi0;
      for (int ls = 0; ls < 40; ++ls, s *= 0.5) {
        trial = w + s * d;
        phi = merit(trial, rollout(p, reshape(trial, segments, m), false).c);
        if (std::isfinite(phi) && phi <= phi0 + 1e-4 * s * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      Rollout next = rollout(p, reshape(trial, segments, m), true);
      const Eigen::VectorXd lambdaNext = mu + rho * next.c;
      const Eigen::VectorXd step = trial - w;
      const Eigen::VectorXd y =
          a * step + (next.jacobian.transpose() - j.transpose()) * lambdaNext;
      const Eigen::VectorXd bs = bfgs * step;
      const double sbs = step.dot(bs);
      double sy = step.dot(y);
      Eigen::VectorXd yd = y;
      if (sy < 0.2 * sbs) {
        const double theta = 0.8 * sbs / (sbs - sy);
        yd = theta * y + (1.0 - theta) * bs;
        sy = step.dot(yd);
      }
      if (sbs > 1e-300 && sy > 1e-300) bfgs += yd * yd.transpose() / sy - bs * bs.transpose() / sbs;
      w = trial;
      ro = std::move(next);
      if (phi0 - phi <= 1e-13 * (1.0 + std::abs(phi0))) break;
    }
    mu += rho * ro.c;
    rho *= o.penaltyGrowth;
  }

  // Minimum-norm corrections onto c = 0.
  Attempt result;
  for (int it = 0; it < 40; ++it) {
    Rollout ro = rollout(p, reshape(w, segments, m), true);
    const double res = ro.c.norm();
    result.last = ro;
    if (res <= 1e-14 || !std::isfinite(res)) break;
    const Eigen::MatrixXd& j = ro.jacobian;
    Eigen::MatrixXd jjt = j * j.transpose();
    jjt.diagonal().array() += 1e-14 * (1.0 + jjt.diagonal().maxCoeff());
    Eigen::VectorXd d = -j.transpose() * jjt.ldlt().solve(ro.c);
    if (!d.allFinite()) break;
    double s = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
      Eigen::VectorXd trial = w + s * d;
      Rollout tr = rollout(p, reshape(trial, segments, m), false);
      if (tr.c.norm() < res) {
        w = trial;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  result.w = w;
  result.last = rollout(p, reshape(w, segments, m), false);
  return result;
}

}  // namespace

ControlSolution solveControl(const ControlProblem& problem, const std::vector<Eigen::MatrixXd>& starts,
                             const ControlOptions& opts) {
  ControlSolution best;
  best.residual = std::numeric_limits<double>::infinity();
  best.length = std::numeric_limits<double>::infinity();
  double bestInfeasibleResidual = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    if (start.rows() != opts.segments || start.cols() != problem.controlDim)
      throw std::invalid_argument("start has the wrong shape");
    Attempt att = solveOne(problem, start, opts);
    const int segments = opts.segments;
    const double dt = 1.0 / segments;
    Eigen::MatrixXd controls = reshape(att.w, segments, problem.controlDim);
    const double residual = att.last.c.norm();
    double length = 0.0;
    for (int k = 0; k < segments; ++k) length += dt * controls.row(k).norm();
    const bool feasible = std::isfinite(residual) && residual <= opts.endpointTol;
    const bool better = feasible ? (!best.feasible || length < best.length)
                                 : (!best.feasible && residual < bestInfeasibleResidual);
    if (better) {
      if (!feasible) bestInfeasibleResidual = residual;
      best.controls = controls;
      best.energy = dt * att.w.squaredNorm();
      best.length = length;
      best.residual = residual;
      best.feasible = feasible;
      best.states = att.last.states;
    }
    best.history.push_back(best.feasible ? best.length : std::numeric_limits<double>::infinity());
  }
  return best;
}

std::vector<Eigen::MatrixXd> seededStarts(const Eigen::MatrixXd& straight, int count, double scale,
                                          std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> starts;
  if (count <= 0) return starts;
  starts.push_back(straight);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int segments = static_cast<int>(straight.rows());
  const int m = static_cast<int>(straight.cols());
  for (int s = 1; s < count; ++s) {
    Eigen::MatrixXd start = straight;
    const double amplitude = scale * (0.5 + 2.5 * unit(rng));
    const double phase = 2.0 * M_PI * unit(rng);
    const int frequency = 1 + static_cast<int>(unit(rng) * 2.0);
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    // Rotate the loop within a random pair of control directions.
    const int i = m > 1 ? static_cast<int>(unit(rng) * m) % m : 0;
    const int j = m > 1 ? (i + 1 + static_cast<int>(unit(rng) * (m - 1))) % m : 0;
    for (int k = 0; k < segments; ++k) {
      const double theta = 2.0 * M_PI * frequency * (k + 0.5) / segments + phase;
      start(k, i) += amplitude * std::cos(theta);
      if (m > 1) start(k, j) += sign * amplitude * std::sin(theta);
    }
    starts.push_back(start);
  }
  return starts;
}

}  // namespace nilpotentizer
