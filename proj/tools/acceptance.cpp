#include "acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "grushin_oracle.hpp"
#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/gh.hpp"
#include "nilpotentizer/grassmann.hpp"
#include "nilpotentizer/liealg.hpp"
#include "nilpotentizer/metrics.hpp"
#include "nilpotentizer/scenario.hpp"
#include "oracles.hpp"

namespace nilpotentizer::acceptance {

namespace {

// Pinned thresholds.
constexpr double kSolverTol = 1e-4;
constexpr double kLimitGap = 1e-6;
constexpr double kRxGap = 1e-8;
constexpr double kSubalgebraResidual = 1e-8;
constexpr double kConjugationGap = 1e-5;
constexpr double kSlopeMargin = 0.5;
// Composition errors at or below this level are rounding of exact identities.
constexpr double kCompositionFloor = 1e-12;
constexpr double kFlowTol = 1e-8;
constexpr double kFrameTol = 1e-10;
constexpr double kConeUnitTol = 1e-3;
constexpr double kRatioTol = 1e-6;
constexpr double kDriftTol = 0.1;
constexpr double kKernelScalingTol = 1e-10;
constexpr double kHomogeneityRelTol = 1e-12;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

SubRiemannianStructure builtin(const std::string& name) { return builtinScenario(name).structure(); }

SubRiemannianStructure perturbedHeisenberg() {
  return SubRiemannianStructure(
      3, {{VectorField::parse({"1", "0", "0"}), 1}, {VectorField::parse({"0", "1", "x0 + x0^2"}), 1}}, 2);
}

std::string lambdaPath(double lambda) {
  std::ostringstream s;
  s << lambda << "*t";
  return s.str();
}

double logLogSlope(const std::vector<double>& t, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = std::log(t[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CriterionResult criterion(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

/// Subspaces produced by criteria 1 and 2, checked by criterion 3.
struct Produced {
  std::vector<std::pair<AlgebraPtr, Subspace>> subspaces;
  bool ran1 = false;
  bool ran2 = false;
};

CriterionResult grushinClassification(Produced& produced) {
  CriterionResult r = criterion(1, "Grushin tangent-cone classification");
  r.budget = 10.0;
  double worst = 0.0;
  int cases = 0;
  bool allConverged = true;
  for (int depth : {2, 3}) {
    NaturalMap nm(builtin(depth == 2 ? "grushin2" : "grushin3"));
    auto check = [&](const ApproachPath& path, const Eigen::MatrixXd& expected) {
      ++cases;
      try {
        PathLimit lim = limitAlongPath(nm, path);
        worst = std::max(worst, gapDistance(lim.limit, Subspace::span(expected)));
        produced.subspaces.push_back({nm.algebra(), lim.limit});
      } catch (const NoConvergence& e) {
        allConverged = false;
        r.notes.push_back("N=" + std::to_string(depth) + " path " + path.name() + ": " + e.what());
      }
    };
    for (double lambda : {0.0, 1.0, -1.0, 2.0})
      check(ApproachPath("lambda", {lambdaPath(lambda), "0"}), oracle::grushinPreimage(depth, lambda, false));
    check(ApproachPath("sqrt", {"sqrt(t)", "0"}, 0.1, 0.25, 40), oracle::grushinPreimage(depth, 0.0, true));
  }
  produced.ran1 = true;
  r.pass = allConverged && worst <= kLimitGap;
  r.detail = std::to_string(cases) + " paths, max gap " + fmt("%.2e", worst) + " <= 1e-6";
  return r;
}

CriterionResult rxConsistency(Produced& produced) {
  CriterionResult r = criterion(2, "r_x consistency on a 5x5 grid");
  r.budget = 5.0;
  double worst = 0.0;
  bool ok = true;
  for (int depth : {2, 3}) {
    NaturalMap nm(builtin(depth == 2 ? "grushin2" : "grushin3"));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        Eigen::Vector2d x(-1 + 0.5 * i, -1 + 0.5 * j);
        try {
          Subspace fixed = gradedLimitFixed(kernel(nm.naturalAt(x, 1.0)), nm.algebra()->weights());
          RxReport rx = computeRx(nm, x);
          worst = std::max(worst, gapDistance(fixed, rx.preimage));
          produced.subspaces.push_back({nm.algebra(), fixed});
          produced.subspaces.push_back({nm.algebra(), rx.preimage});
        } catch (const NumericFailure& e) {
          ok = false;
          r.notes.push_back(std::string("computeRx failed: ") + e.what());
        }
      }
  }
  produced.ran2 = true;
  r.pass = ok && worst <= kRxGap;
  r.detail = "50 points, max gap " + fmt("%.2e", worst) + " <= 1e-8";
  return r;
}

CriterionResult subalgebraLaw(Produced& produced) {
  CriterionResult r = criterion(3, "limit subspaces are subalgebras");
  if (!produced.ran1) grushinClassification(produced);
  if (!produced.ran2) rxConsistency(produced);
  double worst = 0.0;
  for (const auto& [alg, s] : produced.subspaces) worst = std::max(worst, isSubalgebra(*alg, s).residual);
  r.pass = !produced.subspaces.empty() && worst <= kSubalgebraResidual;
  r.detail = std::to_string(produced.subspaces.size()) + " subspaces, max residual " + fmt("%.2e", worst) +
             " <= 1e-8";
  return r;
}

CriterionResult conjugationStability() {
  CriterionResult r = criterion(4, "conjugation stability along shifted paths");
  double worst = 0.0;
  int cases = 0;
  for (int depth : {2, 3}) {
    NaturalMap nm(builtin(depth == 2 ? "grushin2" : "grushin3"));
    const int n = nm.algebra()->dim();
    ApproachPath base("base", {"t", "0"});
    Subspace h = limitAlongPath(nm, base).limit;
    for (int g = 0; g < 2; ++g) {
      Eigen::VectorXd gv = Eigen::VectorXd::Unit(n, g);
      Subspace previous, current;
      for (double t : base.schedule()) {
        Eigen::VectorXd x = nm.flowNatural(gv, t, base.at(t));
        current = dilatedKernel(nm, x, t);
        if (previous.dim() && gapDistance(previous, current) < 1e-9) break;
        previous = current;
      }
      worst = std::max(worst, gapDistance(current, conjugateSubspace(*nm.algebra(), gv, h)));
      ++cases;
    }
  }
  r.pass = worst <= kConjugationGap;
  r.detail = std::to_string(cases) + " shifts (N=2,3; g=e1,e2), max gap " + fmt("%.2e", worst) + " <= 1e-5";
  return r;
}

RVec randomRational(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  RVec v(n);
  for (auto& x : v) {
    x = Rational(num(rng), den(rng));
    x.canonicalize();
  }
  return v;
}

CriterionResult algebraExactness() {
  CriterionResult r = criterion(5, "exact group and automorphism laws");
  r.budget = 5.0;
  int failures = 0, checks = 0;
  for (auto algebra : {freeNilpotent(2, {1, 1}, 2), freeNilpotent(2, {1, 1}, 3)}) {
    std::mt19937_64 rng(17);
    const int n = algebra->dim();
    for (int trial = 0; trial < 100; ++trial) {
      RVec u = randomRational(rng, n), v = randomRational(rng, n), w = randomRational(rng, n);
      Rational lambda(trial % 7 + 2, trial % 5 + 1);
      lambda.canonicalize();
      const bool assoc = algebra->bch(algebra->bch(u, v), w) == algebra->bch(u, algebra->bch(v, w));
      const bool dilGroup = algebra->dilate(lambda, algebra->bch(u, v)) ==
                            algebra->bch(algebra->dilate(lambda, u), algebra->dilate(lambda, v));
      const bool dilBracket = algebra->dilate(lambda, algebra->bracket(u, v)) ==
                              algebra->bracket(algebra->dilate(lambda, u), algebra->dilate(lambda, v));
      const bool adBracket = algebra->adjoint(w, algebra->bracket(u, v)) ==
                             algebra->bracket(algebra->adjoint(w, u), algebra->adjoint(w, v));
      const bool adGroup = algebra->adjoint(w, algebra->bch(u, v)) ==
                           algebra->bch(algebra->adjoint(w, u), algebra->adjoint(w, v));
      for (bool ok : {assoc, dilGroup, dilBracket, adBracket, adGroup}) {
        ++checks;
        if (!ok) ++failures;
      }
    }
  }
  r.pass = failures == 0;
  r.detail = std::to_string(checks) + " exact identities on 100 triples (Heisenberg, free step 3), " +
             std::to_string(failures) + " nonzero residuals";
  return r;
}

struct CompositionOutcome {
  double worstError = 0.0;
  double minSlope = INFINITY;
  int exact = 0;
  int decaying = 0;
  int failed = 0;
};

/// dist(exp(natural_t v) exp(natural_t w) x, exp(natural_t (v.w)) x) for t = 2^-3 .. 2^-10.
CompositionOutcome compositionDecay(const SubRiemannianStructure& s, std::uint64_t seed) {
  NaturalMap nm(s);
  const auto& alg = *nm.algebra();
  const double required = s.depth() + kSlopeMargin;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  CompositionOutcome out;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(alg.dim()), w(alg.dim()), x(s.dim());
    for (int i = 0; i < alg.dim(); ++i) {
      v(i) = u(rng);
      w(i) = u(rng);
    }
    for (int i = 0; i < s.dim(); ++i) x(i) = u(rng);
    const Eigen::VectorXd vw = alg.bch(v, w);
    std::vector<double> ts, errs;
    double worst = 0.0;
    for (int k = 3; k <= 10; ++k) {
      const double t = std::ldexp(1.0, -k);
      const double e = (nm.flowNatural(v, t, nm.flowNatural(w, t, x)) - nm.flowNatural(vw, t, x)).norm();
      worst = std::max(worst, e);
      if (e > kCompositionFloor) {
        ts.push_back(t);
        errs.push_back(e);
      }
    }
    out.worstError = std::max(out.worstError, worst);
    if (worst <= kCompositionFloor) {
      ++out.exact;
      continue;
    }
    if (ts.size() < 3) {
      ++out.failed;
      continue;
    }
    const double slope = logLogSlope(ts, errs);
    out.minSlope = std::min(out.minSlope, slope);
    if (slope >= required)
      ++out.decaying;
    else
      ++out.failed;
  }
  return out;
}

CriterionResult flowComposition() {
  CriterionResult r = criterion(6, "flow-composition decay");
  r.budget = 30.0;
  std::string detail;
  bool pass = true;
  const std::vector<std::pair<std::string, SubRiemannianStructure>> cases = {
      {"grushin2", builtin("grushin2")}, {"heisenberg", builtin("heisenberg")}, {"perturbed heisenberg", perturbedHeisenberg()}};
  for (const auto& [name, s] : cases) {
    CompositionOutcome o = compositionDecay(s, 23);
    pass = pass && o.failed == 0;
    std::string line = name + ": " + std::to_string(o.exact) + " exact (<= 1e-12), " + std::to_string(o.decaying) +
                       " with slope >= " + fmt("%.1f", s.depth() + kSlopeMargin) + ", " + std::to_string(o.failed) +
                       " failed; max error " + fmt("%.1e", o.worstError);
    if (std::isfinite(o.minSlope)) line += ", min slope " + fmt("%.2f", o.minSlope);
    r.notes.push_back(line);
    if (!detail.empty()) detail += "; ";
    detail += name + " " + std::to_string(o.exact + o.decaying) + "/20";
  }
  r.pass = pass;
  r.detail = detail;
  return r;
}

CriterionResult closedFormFlow() {
  CriterionResult r = criterion(7, "closed-form Grushin flow");
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int depth = 2 + trial % 3;
    const double mu = trial % 10 == 0 ? 0.0 : u(rng);
    std::vector<double> lambda(depth);
    for (auto& l : lambda) l = u(rng);
    const double x = u(rng), y = u(rng);
    VectorField f = VectorField::parse({"1", "0"}) * Rational(mu);
    for (int i = 0; i < depth; ++i) {
      const std::string power = i == 0 ? "1" : "x0^" + std::to_string(i);
      f = f + VectorField::parse({"0", power}) * Rational(lambda[i]);
    }
    const Eigen::VectorXd got = flow(f, Eigen::Vector2d(x, y));
    worst = std::max(worst, (got - oracle::grushinFlow(mu, lambda, x, y)).norm());
  }
  r.pass = worst <= kFlowTol;
  r.detail = "100 inputs, max error " + fmt("%.2e", worst) + " <= 1e-8";
  return r;
}

CriterionResult coneGeometry() {
  CriterionResult r = criterion(8, "cone geometry");
  NaturalMap nm(builtin("grushin2"));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2, 2);

  auto originCone =
      std::make_shared<TangentCone>(buildCone(nm.algebra(), limitAlongPath(nm, ApproachPath("origin", {"0", "0"})).limit, 2));
  // The sqrt(t) limit is approached like sqrt(t_k); resolve it well below the frame tolerance.
  LimitOptions tight;
  tight.cauchyTol = 1e-11;
  TangentCone infinite = buildCone(
      nm.algebra(), limitAlongPath(nm, ApproachPath("sqrt", {"sqrt(t)", "0"}, 0.1, 0.25, 40), tight).limit, 2);
  double frameOrigin = 0.0, frameInfinite = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ConePoint p{Eigen::Vector2d(u(rng), u(rng))};
    Eigen::Matrix2d expected;
    expected << 1, 0, 0, p.s(0);
    frameOrigin = std::max(frameOrigin, (horizontalFrame(*originCone, p) - expected).cwiseAbs().maxCoeff());
    frameInfinite =
        std::max(frameInfinite, (horizontalFrame(infinite, p) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
  }

  auto heis = std::make_shared<TangentCone>(buildCone(freeNilpotent(2, {1, 1}, 2), Subspace::zero(3), 3));
  ConeMetric heisMetric(heis);
  DistanceResult e1 = heisMetric.distance(heis->origin(), ConePoint{Eigen::Vector3d(1, 0, 0)});
  const double e1Error = std::abs(e1.value - 1.0);

  ConeMetric metric(originCone);
  const auto& alg = *originCone->algebra();
  double homogeneity = 0.0;
  for (const Eigen::Vector2d& s : {Eigen::Vector2d(0.4, 0.3), Eigen::Vector2d(-0.2, 0.5), Eigen::Vector2d(0.1, -0.6)}) {
    ConePoint p{s};
    const double base = metric.distance(originCone->origin(), p).value;
    for (double lambda : {0.5, 2.0}) {
      ConePoint scaled = canonicalRep(*originCone, alg.dilate(lambda, originCone->rep(p)));
      homogeneity = std::max(homogeneity, std::abs(metric.distance(originCone->origin(), scaled).value - lambda * base));
    }
  }
  r.pass = frameOrigin <= kFrameTol && frameInfinite <= kFrameTol && e1.converged && e1Error <= kConeUnitTol &&
           homogeneity <= 2 * kSolverTol;
  r.detail = "frame errors " + fmt("%.1e", frameOrigin) + ", " + fmt("%.1e", frameInfinite) + " <= 1e-10; |d(0,e1)-1| " +
             fmt("%.1e", e1Error) + " <= 1e-3; homogeneity " + fmt("%.1e", homogeneity) + " <= 2e-4";
  return r;
}

std::string rowSummary(const ConvergenceTable& t) {
  std::string s = "D:";
  for (const auto& row : t.rows) s += " " + fmt("%.2e", row.distortion);
  s += "; fineness " + fmt("%.3f", t.fineness) + ", slope " + fmt("%.2f", t.slope);
  return s;
}

CriterionResult ghConvergence(const Options& opts) {
  CriterionResult r = criterion(9, "pointed GH convergence at desk scale");
  r.budget = 300.0;
  StudyOptions study;
  study.net.jobs = opts.jobs;
  const double radius = study.radius;
  struct Case {
    std::string name;
    SubRiemannianStructure structure;
    ApproachPath path;
    bool selfSimilar;
  };
  const std::vector<Case> cases = {
      {"grushin2_lambda1", builtin("grushin2"), ApproachPath("lambda1", {"t", "0"}), false},
      {"grushin3_lambda1", builtin("grushin3"), ApproachPath("lambda1", {"t", "0"}), false},
      {"heisenberg_origin", builtin("heisenberg"), ApproachPath("origin", {"0", "0", "0"}), false},
      {"grushin2_origin", builtin("grushin2"), ApproachPath("origin", {"0", "0"}), true}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto start = Clock::now();
    NaturalMap nm(c.structure);
    ConvergenceTable table = convergenceStudy(nm, c.path, study);
    const double seconds = since(start);
    r.tables[c.name] = table.csv();
    bool ok = table.rows.size() == 8 && table.monotone(2 * kSolverTol) &&
              table.rows.back().distortion < 0.05 * 2 * radius;
    double worstRow = 0.0;
    for (const auto& row : table.rows) worstRow = std::max(worstRow, row.distortion);
    if (c.selfSimilar) ok = ok && worstRow <= 3 * kSolverTol;
    pass = pass && ok;
    r.notes.push_back(c.name + (ok ? " ok" : " FAILED") + " (" + fmt("%.1f", seconds) + " s) " + rowSummary(table));
    if (!detail.empty()) detail += "; ";
    detail += c.name + " final D " + fmt("%.1e", table.rows.back().distortion);
  }
  r.pass = pass;
  r.detail = detail + " (monotone within 2e-4, final D < 0.1, origin rows <= 3e-4)";
  return r;
}

void ghSupplementary(const Options& opts, CriterionResult& r) {
  StudyOptions study;
  study.net.jobs = opts.jobs;
  const std::vector<std::tuple<std::string, SubRiemannianStructure, ApproachPath>> cases = {
      {"grushin2_sqrt", builtin("grushin2"), ApproachPath("sqrt", {"sqrt(t)", "0"}, 0.1, 0.25, 40)},
      {"perturbed_heisenberg_origin", perturbedHeisenberg(), ApproachPath("origin", {"0", "0", "0"})}};
  for (const auto& [name, s, path] : cases) {
    const auto start = Clock::now();
    NaturalMap nm(s);
    ConvergenceTable table = convergenceStudy(nm, path, study);
    r.tables[name] = table.csv();
    r.notes.push_back("supplementary " + name + " (" + fmt("%.1f", since(start)) + " s, monotone " +
                      (table.monotone(2 * kSolverTol) ? "yes" : "no") + ") " + rowSummary(table));
  }
}

CriterionResult comparison() {
  CriterionResult r = criterion(10, "quasi-norm against distance");
  ManifoldMetric euclid(builtin("euclidean"));
  ComparisonReport e = comparisonRatioScan(euclid, ComparisonOptions{});
  double worstRatio = 0.0;
  int used = 0;
  for (const auto& s : e.samples) {
    if (s.excluded) continue;
    ++used;
    worstRatio = std::max(worstRatio, std::abs(s.ratio - 1.0));
  }
  ManifoldMetric grushin(builtin("grushin2"));
  ComparisonReport g = comparisonRatioScan(grushin, ComparisonOptions{});
  std::string perT;
  for (double c : g.cHatPerT) perT += " " + fmt("%.4f", c);
  r.notes.push_back("grushin2 C-hat per t:" + perT);
  r.pass = used > 0 && worstRatio <= kRatioTol && std::isfinite(g.cHat) && g.drift <= kDriftTol;
  r.detail = "Euclidean max |ratio-1| " + fmt("%.1e", worstRatio) + " <= 1e-6 over " + std::to_string(used) +
             " pairs; Grushin C-hat " + fmt("%.4f", g.cHat) + ", drift " + fmt("%.4f", g.drift) + " <= 0.1";
  return r;
}

CriterionResult scalingIdentities() {
  CriterionResult r = criterion(11, "scaling identities");
  double kernelGap = 0.0;
  for (int depth : {2, 3}) {
    NaturalMap nm(builtin(depth == 2 ? "grushin2" : "grushin3"));
    std::mt19937_64 rng(37 + depth);
    std::uniform_real_distribution<double> coord(-1.5, 1.5), logt(-3, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::Vector2d x(coord(rng), coord(rng));
      const double t = std::pow(10.0, logt(rng));
      Subspace direct = kernel(nm.naturalAt(x, t));
      Subspace dilated = dilateSubspace(1.0 / t, kernel(nm.naturalAt(x, 1.0)), nm.algebra()->weights());
      kernelGap = std::max(kernelGap, gapDistance(direct, dilated));
    }
  }

  ManifoldMetric metric(builtin("grushin3"));
  bool exactScaling = true;
  Eigen::Vector2d x(0.2, -0.1), y(0.5, 0.4);
  const double d1 = metric.distance(x, y).value;
  for (double t : {0.5, 0.1, 2.0}) exactScaling = exactScaling && metric.distance(x, y, t).value == d1 / t;

  NaturalMap grushin(builtin("grushin2"));
  double homogeneity = 0.0;
  for (const auto& g : {GroupoidPoint::manifold(Eigen::Vector2d(0.35, 0.2), Eigen::Vector2d(0.2, 0.1), 0.4),
                        GroupoidPoint::manifold(Eigen::Vector2d(-0.1, 0.5), Eigen::Vector2d(0.3, 0.45), 0.2)}) {
    const double base = quasiNormElement(grushin, g).value;
    for (double lambda : {0.5, 2.0, 10.0})
      homogeneity =
          std::max(homogeneity, std::abs(quasiNormElement(grushin, dilate(g, lambda)).value - lambda * base) / (lambda * base));
  }
  r.pass = kernelGap <= kKernelScalingTol && exactScaling && homogeneity <= kHomogeneityRelTol;
  r.detail = "kernel gap " + fmt("%.1e", kernelGap) + " <= 1e-10; d_t == d_1/t " + (exactScaling ? "exact" : "VIOLATED") +
             "; quasi-norm homogeneity " + fmt("%.1e", homogeneity) + " (relative, rounding only)";
  return r;
}

}  // namespace

std::string verdictLine(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "criterion %2d %s (%.2f s", r.id, r.pass ? "PASS" : "FAIL", r.seconds);
  std::string s = head;
  if (r.budget > 0) s += fmt(", budget %.0f s", r.budget);
  return s + ") " + r.title + ": " + r.detail;
}

std::vector<CriterionResult> run(const Options& opts, std::ostream* progress) {
  Produced produced;
  std::vector<CriterionResult> results;
  auto wanted = [&](int id) { return opts.only.empty() || opts.only.count(id); };
  const std::vector<std::pair<int, std::function<CriterionResult()>>> criteria = {
      {1, [&] { return grushinClassification(produced); }},
      {2, [&] { return rxConsistency(produced); }},
      {3, [&] { return subalgebraLaw(produced); }},
      {4, conjugationStability},
      {5, algebraExactness},
      {6, flowComposition},
      {7, closedFormFlow},
      {8, coneGeometry},
      {9, [&] { return ghConvergence(opts); }},
      {10, comparison},
      {11, scalingIdentities}};
  for (const auto& [id, fn] : criteria) {
    if (!wanted(id)) continue;
    const auto start = Clock::now();
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = criterion(id, "criterion " + std::to_string(id));
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = since(start);
    if (r.budget > 0 && r.seconds > r.budget) {
      r.pass = false;
      r.detail += "; over the runtime budget";
    }
    if (id == 9 && opts.supplementary) {
      try {
        ghSupplementary(opts, r);
      } catch (const std::exception& e) {
        r.notes.push_back(std::string("supplementary studies failed: ") + e.what());
      }
    }
    if (progress) {
      *progress << verdictLine(r) << "\n";
      for (const auto& n : r.notes) *progress << "    " << n << "\n";
      progress->flush();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace nilpotentizer::acceptance
