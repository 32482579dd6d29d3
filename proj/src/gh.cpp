#include "nilpotentizer/gh.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "parallel.hpp"

namespace nilpotentizer {

namespace {

constexpr int kBatch = 16;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double radicalInverse(std::uint64_t index, int base) {
  double result = 0.0, f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

int nthPrime(int k) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  if (k >= 20) throw std::invalid_argument("Halton sampling supports at most 20 coordinates");
  return primes[k];
}

/// Halton sequence with a random shift modulo 1 (Cranley-Patterson rotation).
class Halton {
 public:
  Halton(int dim, std::uint64_t seed) : shift_(dim) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < dim; ++i) shift_(i) = unit(rng);
  }
  Eigen::VectorXd operator()(std::uint64_t index) const {
    Eigen::VectorXd u(shift_.size());
    for (int i = 0; i < u.size(); ++i) {
      const double v = radicalInverse(index, nthPrime(i)) + shift_(i);
      u(i) = v - std::floor(v);
    }
    return u;
  }

 private:
  Eigen::VectorXd shift_;
};

std::vector<int> coordinateWeights(const TangentCone& cone) {
  std::vector<int> w(cone.dim());
  for (int c = 0; c < cone.dim(); ++c) {
    int idx = 0;
    cone.complementBasis().col(c).cwiseAbs().maxCoeff(&idx);
    w[c] = cone.algebra()->weight(idx);
  }
  return w;
}

/// Largest s in [0, cap] with d(origin, sign * s * e_c) <= R, by bisection.
double axisExtent(const ConeMetric& metric, int c, double sign, double cap, double radius) {
  auto inside = [&](double s) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(metric.cone().dim());
    p(c) = sign * s;
    DistanceResult r = metric.distance(metric.cone().origin(), ConePoint{p});
    return r.converged && r.value <= radius;
  };
  if (inside(cap)) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 8; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return hi;
}

struct Accepted {
  std::vector<Eigen::VectorXd> points;
  std::vector<DistanceResult> fromBase;
  int candidates = 0;
};

/// Draws Halton candidates in the box until `wanted` of them lie in the ball or the budget runs out.
Accepted drawInBall(const ConeMetric& metric, double radius, int wanted, int budget, const Eigen::VectorXd& box,
                    const Halton& halton, int jobs) {
  const TangentCone& cone = metric.cone();
  Accepted out;
  std::uint64_t index = 1;
  while (static_cast<int>(out.points.size()) < wanted && out.candidates < budget) {
    const int batch = std::min(kBatch, budget - out.candidates);
    std::vector<Eigen::VectorXd> cands(batch);
    std::vector<DistanceResult> results(batch);
    for (int b = 0; b < batch; ++b) cands[b] = (2.0 * halton(index + b).array() - 1.0).matrix().cwiseProduct(box);
    detail::parallelFor(batch, jobs, [&](int b) {
      results[b] = metric.distance(cone.origin(), ConePoint{cands[b]});
    });
    index += batch;
    out.candidates += batch;
    for (int b = 0; b < batch && static_cast<int>(out.points.size()) < wanted; ++b) {
      if (results[b].converged && results[b].value <= radius) {
        out.points.push_back(cands[b]);
        out.fromBase.push_back(std::move(results[b]));
      }
    }
  }
  return out;
}

}  // namespace

PointedNet sampleBallCone(const ConeMetric& metric, double radius, int n, std::uint64_t seed, const NetOptions& opts) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (n < 2) throw std::invalid_argument("a net needs at least 2 points");
  const TangentCone& cone = metric.cone();
  const int r = cone.dim();
  PointedNet net;
  net.radius = radius;
  net.base = 0;

  const std::vector<int> weights = coordinateWeights(cone);
  Eigen::VectorXd quasiBox(r);
  for (int c = 0; c < r; ++c) quasiBox(c) = std::pow(opts.boxFactor * radius, weights[c]);
  net.box = quasiBox;
  if (opts.calibrateBox) {
    detail::parallelFor(r, opts.jobs, [&](int c) {
      const double extent = std::max(axisExtent(metric, c, 1.0, quasiBox(c), radius),
                                     axisExtent(metric, c, -1.0, quasiBox(c), radius));
      net.box(c) = std::min(quasiBox(c), opts.calibrationMargin * extent);
    });
  }

  const int budget = opts.candidatesPerPoint * n;
  Halton halton(r, seed);
  Accepted acc = drawInBall(metric, radius, n - 1, budget, net.box, halton, opts.jobs);
  net.candidates = acc.candidates;
  if (static_cast<int>(acc.points.size()) < n / 2) {
    for (int c = 0; c < r; ++c) net.box(c) *= std::pow(opts.retryGrowth, weights[c]);
    net.warnings.push_back("few candidates in the ball; box enlarged once");
    acc = drawInBall(metric, radius, n - 1, budget, net.box, halton, opts.jobs);
    net.candidates += acc.candidates;
  }
  for (int c = 0; c < r; ++c) {
    if (net.box(c) >= quasiBox(c)) continue;
    for (const auto& p : acc.points)
      if (std::abs(p(c)) > 0.9 * net.box(c)) {
        net.warnings.push_back("ball may extend past the calibrated box along coordinate " + std::to_string(c));
        break;
      }
  }
  net.accepted = static_cast<int>(acc.points.size());
  if (net.accepted < n - 1)
    net.warnings.push_back("net has " + std::to_string(net.accepted + 1) + " of " + std::to_string(n) + " points");

  net.points.push_back(cone.origin().s);
  for (auto& p : acc.points) net.points.push_back(p);
  const int size = net.size();
  net.distances = Eigen::MatrixXd::Zero(size, size);
  net.pairControls.assign(static_cast<std::size_t>(size) * size, {});
  for (int j = 1; j < size; ++j) {
    net.distances(0, j) = net.distances(j, 0) = acc.fromBase[j - 1].value;
    net.pairControls[j] = acc.fromBase[j - 1].controls;
  }

  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i < size; ++i)
    for (int j = i + 1; j < size; ++j) pairs.emplace_back(i, j);
  std::vector<DistanceResult> results(pairs.size());
  detail::parallelFor(static_cast<int>(pairs.size()), opts.jobs, [&](int k) {
    results[k] = metric.distance(ConePoint{net.points[pairs[k].first]}, ConePoint{net.points[pairs[k].second]});
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (!results[k].converged) {
      ++net.unconverged;
      net.distances(i, j) = net.distances(j, i) = kNaN;
      continue;
    }
    net.distances(i, j) = net.distances(j, i) = results[k].value;
    net.pairControls[static_cast<std::size_t>(i) * size + j] = std::move(results[k].controls);
  }

  // Fineness: probes in the ball, each compared with its nearest net points by the quasi-norm proxy.
  const int probeCount = opts.probesPerPoint * n;
  Halton probeHalton(r, seed ^ 0x9e3779b97f4a7c15ULL);
  Accepted probes = drawInBall(metric, radius, probeCount, opts.candidatesPerPoint * probeCount, net.box,
                               probeHalton, opts.jobs);
  const auto& alg = *cone.algebra();
  std::vector<double> nearest(probes.points.size(), std::numeric_limits<double>::infinity());
  detail::parallelFor(static_cast<int>(probes.points.size()), opts.jobs, [&](int k) {
    const ConePoint probe{probes.points[k]};
    const Eigen::VectorXd rp = cone.rep(probe);
    std::vector<std::pair<double, int>> proxy;
    for (int j = 0; j < size; ++j)
      proxy.emplace_back(alg.quasiNorm(alg.bch(cone.rep(ConePoint{net.points[j]}), -rp)), j);
    const int keep = std::min(opts.probeNeighbours, size);
    std::partial_sort(proxy.begin(), proxy.begin() + keep, proxy.end());
    for (int c = 0; c < keep; ++c) {
      DistanceResult d = metric.distance(probe, ConePoint{net.points[proxy[c].second]});
      if (d.converged) nearest[k] = std::min(nearest[k], d.value);
    }
  });
  net.fineness = 0.0;
  for (double d : nearest)
    if (std::isfinite(d)) net.fineness = std::max(net.fineness, d);
  if (probes.points.size() < static_cast<std::size_t>(probeCount))
    net.warnings.push_back("fineness from " + std::to_string(probes.points.size()) + " probes");
  return net;
}

MappedNet correspondenceMap(const NaturalMap& nm, const TangentCone& cone, const ApproachPath& path, double t,
                            const PointedNet& net) {
  if (!(t > 0.0)) throw std::invalid_argument("the chart needs t > 0");
  const Eigen::VectorXd xt = path.at(t);
  MappedNet out;
  out.errors.resize(net.points.size());
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    try {
      out.points.push_back(nm.flowNatural(cone.rep(ConePoint{net.points[i]}), t, xt));
    } catch (const FlowEscaped& e) {
      out.points.push_back(Eigen::VectorXd::Constant(xt.size(), kNaN));
      out.errors[i] = e.what();
      ++out.escaped;
    }
  }
  return out;
}

double distortion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<int>& pairing) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != b.cols() || static_cast<int>(pairing.size()) != n)
    throw DimensionMismatch("distortion needs square matrices and a pairing of matching size");
  for (int p : pairing)
    if (p < 0 || p >= b.rows()) throw DimensionMismatch("pairing index out of range");
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double diff = std::abs(a(i, j) - b(pairing[i], pairing[j]));
      if (!std::isnan(diff)) worst = std::max(worst, diff);
    }
  return worst;
}

double distortion(const PointedNet& a, const PointedNet& b, const std::vector<int>& pairing) {
  if (a.size() != static_cast<int>(pairing.size())) throw DimensionMismatch("pairing size differs from the net");
  if (pairing[a.base] != b.base) throw std::invalid_argument("the pairing must send base point to base point");
  return distortion(a.distances, b.distances, pairing);
}

std::vector<double> defaultSchedule() {
  std::vector<double> t;
  for (int k = 0; k < 8; ++k) t.push_back(0.2 * std::pow(2.0, -k));
  return t;
}

std::string ConvergenceTable::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "t,D,gap,net_size,gh_bound\n";
  for (const auto& r : rows) out << r.t << ',' << r.distortion << ',' << r.gap << ',' << r.netSize << ',' << r.ghBound << '\n';
  return out.str();
}

bool ConvergenceTable::monotone(double slack) const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].distortion > rows[k - 1].distortion + slack) return false;
  return true;
}

ConvergenceTable convergenceStudy(const NaturalMap& nm, const ApproachPath& path, const StudyOptions& opts) {
  const std::vector<double> schedule = opts.schedule.empty() ? defaultSchedule() : opts.schedule;
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1])) throw std::invalid_argument("study times must be strictly decreasing");

  PathLimit lim = limitAlongPath(nm, path, opts.limit);
  auto cone = std::make_shared<TangentCone>(buildCone(nm.algebra(), lim.limit));
  const Eigen::MatrixXd& gram = nm.structure().gram();
  ConeMetric coneMetric(cone, gram, opts.coneMetric);
  PointedNet net = sampleBallCone(coneMetric, opts.radius, opts.netSize, opts.seed, opts.net);
  ManifoldMetric manifold(nm.structure(), opts.manifoldMetric);

  ConvergenceTable table;
  table.fineness = net.fineness;
  table.radius = opts.radius;
  table.coneDim = cone->dim();
  table.limitBasis = lim.limit.basis();
  const int n = net.size();
  std::vector<int> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<Eigen::MatrixXd> previous(pairs.size());

  for (double t : schedule) {
    const auto start = std::chrono::steady_clock::now();
    ConvergenceRow row;
    row.t = t;
    row.netSize = n;
    MappedNet mapped = correspondenceMap(nm, *cone, path, t, net);
    row.escaped = mapped.escaped;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    std::vector<DistanceResult> results(pairs.size());
    std::vector<char> skipped(pairs.size(), 0);
    detail::parallelFor(static_cast<int>(pairs.size()), opts.net.jobs, [&](int k) {
      const auto [i, j] = pairs[k];
      if (!mapped.errors[i].empty() || !mapped.errors[j].empty()) {
        skipped[k] = 1;
        return;
      }
      std::vector<Eigen::MatrixXd> warm;
      const auto& coneControls = net.pairControls[static_cast<std::size_t>(i) * n + j];
      if (coneControls.size()) warm.push_back(coneControls);
      if (previous[k].size()) warm.push_back(previous[k]);
      results[k] = manifold.distance(mapped.points[i], mapped.points[j], t, warm);
    });
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      if (skipped[k]) {
        d(i, j) = d(j, i) = kNaN;
        continue;
      }
      if (!results[k].converged) {
        ++row.unconverged;
        d(i, j) = d(j, i) = kNaN;
        continue;
      }
      d(i, j) = d(j, i) = results[k].value;
      previous[k] = std::move(results[k].controls);
    }
    row.distortion = distortion(net.distances, d, identity);
    row.flagged = row.unconverged > 0.1 * static_cast<double>(pairs.size());
    row.ghBound = ghBound(row.distortion, net.fineness);
    row.gap = gapDistance(dilatedKernel(nm, path.at(t), t, opts.limit.rankTol), lim.limit);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    table.rows.push_back(row);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (const auto& r : table.rows) {
    if (!(r.distortion > 0.0) || !std::isfinite(r.distortion)) continue;
    const double lx = std::log(r.t), ly = std::log(r.distortion);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  table.slope = count >= 2 && count * sxx - sx * sx > 0 ? (count * sxy - sx * sy) / (count * sxx - sx * sx) : kNaN;
  return table;
}

}  // namespace nilpotentizer
