#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "acceptance.hpp"
#include "nilpotentizer/cone.hpp"
#include "nilpotentizer/gh.hpp"
#include "nilpotentizer/metrics.hpp"

namespace nilpotentizer::cli {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// Columns of m as a list of vectors.
json columns(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int c = 0; c < m.cols(); ++c) out.push_back(vec(m.col(c)));
  return out;
}

Eigen::VectorXd point(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string vecText(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + ")";
}

/// Reduced echelon basis of the column span, for printing (e.g. e2 - e3 rather than an orthonormal pair).
/// Entries below kDisplayTol are treated as zero; limits are only resolved to about that level.
constexpr double kDisplayTol = 1e-6;

Eigen::MatrixXd echelonBasis(const Eigen::MatrixXd& basis) {
  Eigen::MatrixXd rows = basis.transpose();
  const int r = static_cast<int>(rows.rows()), n = static_cast<int>(rows.cols());
  int lead = 0;
  for (int col = 0; col < n && lead < r; ++col) {
    int pivot = lead;
    for (int i = lead + 1; i < r; ++i)
      if (std::abs(rows(i, col)) > std::abs(rows(pivot, col))) pivot = i;
    if (std::abs(rows(pivot, col)) < kDisplayTol) continue;
    rows.row(lead).swap(rows.row(pivot));
    rows.row(lead) /= rows(lead, col);
    for (int i = 0; i < r; ++i)
      if (i != lead) rows.row(i) -= rows(i, col) * rows.row(lead);
    ++lead;
  }
  for (int i = 0; i < rows.rows(); ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(rows(i, j)) < kDisplayTol) rows(i, j) = 0.0;
  return rows.topRows(lead).transpose();
}

std::string combination(const Eigen::VectorXd& v) {
  std::string s;
  for (int j = 0; j < v.size(); ++j) {
    double c = v(j);
    if (c == 0.0) continue;
    if (std::abs(std::abs(c) - 1.0) < kDisplayTol) c = c > 0 ? 1.0 : -1.0;
    const std::string label = "e" + std::to_string(j + 1);
    if (s.empty())
      s = (c == 1.0 ? "" : c == -1.0 ? "-" : num(c) + "*") + label;
    else
      s += (c < 0 ? " - " : " + ") + (std::abs(c) == 1.0 ? "" : num(std::abs(c)) + "*") + label;
  }
  return s.empty() ? "0" : s;
}

std::string spanText(const Subspace& s) {
  if (s.dim() == 0) return "{0}";
  Eigen::MatrixXd e = echelonBasis(s.basis());
  std::string out = "span(";
  for (int c = 0; c < e.cols(); ++c) out += (c ? ", " : "") + combination(e.col(c));
  return out + ")";
}

json subspaceJson(const Subspace& s) {
  return {{"dim", s.dim()}, {"basis", columns(s.basis())}, {"echelon", columns(echelonBasis(s.basis()))},
          {"text", spanText(s)}};
}

LimitOptions limitOptions(const ScenarioConfig& cfg) {
  LimitOptions o;
  o.cauchyTol = cfg.tolerances.cauchyTol;
  o.rankTol = cfg.tolerances.rankTol;
  o.subalgebraTol = cfg.tolerances.subalgebraTol;
  return o;
}

MetricOptions metricOptions(const ScenarioConfig& cfg, std::uint64_t seed) {
  MetricOptions o;
  o.endpointTol = cfg.tolerances.endpointTol;
  o.solverTol = cfg.tolerances.solverTol;
  o.seed = seed;
  return o;
}

std::vector<ApproachPath> selectedPaths(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (opts.path) return {cfg.path(*opts.path)};
  std::vector<ApproachPath> out;
  for (const auto& p : cfg.paths) out.push_back(cfg.path(p.name));
  return out;
}

void cmdValidate(const ScenarioConfig& cfg, RunReport& rep) {
  NaturalMap nm(cfg.structure());
  const auto& alg = *nm.algebra();
  AlgebraReport algebra = validateAlgebra(alg);
  json violations = json::array();
  for (const auto& v : algebra.violations)
    violations.push_back({{"kind", v.kind}, {"i", v.i}, {"j", v.j}, {"k", v.k}, {"residual", v.residual}});

  json compat = json::array();
  for (const auto& [a, b] : nm.compatibilityFailures()) compat.push_back({a, b});

  double lo = -1, hi = 1;
  int per = 5;
  for (const auto& s : cfg.studiesFor("validate"))
    if (s.contains("grid")) {
      lo = s["grid"][0].get<double>();
      hi = s["grid"][1].get<double>();
      per = s["grid"][2].get<int>();
    }
  std::vector<Eigen::VectorXd> grid;
  const int total = static_cast<int>(std::pow(per, cfg.dim));
  for (int idx = 0; idx < total; ++idx) {
    Eigen::VectorXd x(cfg.dim);
    int rest = idx;
    for (int d = 0; d < cfg.dim; ++d) {
      const int k = rest % per;
      rest /= per;
      x(d) = per == 1 ? lo : lo + (hi - lo) * k / (per - 1);
    }
    grid.push_back(x);
  }
  HormanderReport horm = hormanderCheck(nm, grid);
  json deficient = json::array();
  std::string csv = "point,rank,ok\n";
  for (std::size_t i = 0; i < horm.points.size(); ++i) {
    const auto& p = horm.points[i];
    csv += std::to_string(i) + "," + std::to_string(p.rank) + "," + (p.ok ? "1" : "0") + "\n";
    if (!p.ok) deficient.push_back({{"x", vec(p.x)}, {"rank", p.rank}});
  }
  rep.tables["hormander"] = csv;

  rep.outputs = {{"algebra_dim", alg.dim()},
                 {"weights", alg.weights()},
                 {"labels", alg.labels()},
                 {"algebra_violations", violations},
                 {"compatibility_failures", compat},
                 {"hormander", {{"points", horm.points.size()}, {"deficient", deficient}, {"ok", horm.ok()}}}};
  rep.lines.push_back("free nilpotent algebra of dimension " + std::to_string(alg.dim()) + ", depth " +
                      std::to_string(alg.depth()));
  rep.lines.push_back(std::string("algebra laws: ") + (algebra.ok() ? "ok" : "VIOLATED"));
  rep.lines.push_back(std::string("bracket compatibility: ") +
                      (compat.empty() ? "ok" : std::to_string(compat.size()) + " failures"));
  rep.lines.push_back("bracket generating on " + std::to_string(grid.size()) + " grid points: " +
                      (horm.ok() ? "ok" : std::to_string(deficient.size()) + " deficient"));
  rep.failed = !algebra.ok() || !compat.empty() || !horm.ok();
}

void cmdCones(const ScenarioConfig& cfg, const RunOptions& opts, RunReport& rep) {
  NaturalMap nm(cfg.structure());
  const auto& alg = *nm.algebra();
  const LimitOptions lo = limitOptions(cfg);
  json paths = json::array();
  for (const ApproachPath& path : selectedPaths(cfg, opts)) {
    json entry = {{"name", path.name()}, {"components", path.componentText()}};
    try {
      PathLimit lim = limitAlongPath(nm, path, lo);
      rep.tables["cones_" + path.name()] = lim.diagnostics.csv();
      SubalgebraReport sub = isSubalgebra(alg, lim.limit, cfg.tolerances.subalgebraTol);
      entry["limit"] = subspaceJson(lim.limit);
      entry["converged_at"] = lim.diagnostics.convergedAt;
      entry["subalgebra_residual"] = sub.residual;
      entry["is_subalgebra"] = sub.isSubalgebra;
      const TangentCone cone = buildCone(nm.algebra(), lim.limit);
      entry["cone_dim"] = cone.dim();
      entry["complement"] = columns(cone.complementBasis());
      const Eigen::VectorXd x0 = path.at(0.0);
      if (x0.allFinite()) {
        RxReport rx = computeRx(nm, x0, cfg.tolerances.rankTol);
        entry["r_x"] = {{"x", vec(x0)}, {"ranks", rx.ranks}, {"preimage", subspaceJson(rx.preimage)},
                        {"gap_to_limit", gapDistance(rx.preimage, lim.limit)}};
      }
      rep.lines.push_back("path " + path.name() + ": limit " + spanText(lim.limit) + ", cone dimension " +
                          std::to_string(cone.dim()) + ", subalgebra residual " + num(sub.residual));
      if (!sub.isSubalgebra) rep.failed = true;
    } catch (const NoConvergence& e) {
      rep.tables["cones_" + path.name()] = e.diagnostics().csv();
      entry["error"] = e.what();
      rep.warnings.push_back("path " + path.name() + ": " + e.what());
      rep.lines.push_back("path " + path.name() + ": no convergence");
      rep.failed = true;
    }
    paths.push_back(entry);
  }

  json points = json::array();
  if (!opts.path) {
    for (const auto& s : cfg.studiesFor("cones")) {
      if (!s.contains("point")) continue;
      const Eigen::VectorXd x = point(s["point"]);
      Subspace fixed = gradedLimitFixed(kernel(nm.naturalAt(x, 1.0), cfg.tolerances.rankTol), alg.weights());
      RxReport rx = computeRx(nm, x, cfg.tolerances.rankTol);
      SubalgebraReport sub = isSubalgebra(alg, fixed, cfg.tolerances.subalgebraTol);
      points.push_back({{"x", vec(x)},
                        {"limit", subspaceJson(fixed)},
                        {"ranks", rx.ranks},
                        {"r_x", subspaceJson(rx.preimage)},
                        {"gap", gapDistance(fixed, rx.preimage)},
                        {"subalgebra_residual", sub.residual}});
      rep.lines.push_back("point " + vecText(x) + ": r_x = " + spanText(rx.preimage) + ", gap to fixed-point limit " +
                          num(gapDistance(fixed, rx.preimage)));
      if (!sub.isSubalgebra) rep.failed = true;
    }
  }
  rep.outputs = {{"labels", alg.labels()}, {"weights", alg.weights()}, {"paths", paths}, {"points", points}};
}

struct Endpoints {
  Eigen::VectorXd x, y;
  double t;
};

std::vector<Endpoints> endpoints(const ScenarioConfig& cfg, const std::string& command, const RunOptions& opts) {
  std::vector<Endpoints> out;
  for (const auto& s : cfg.studiesFor(command)) {
    const double t = opts.t ? *opts.t : s.value("t", 1.0);
    out.push_back({point(s["x"]), point(s["y"]), t});
  }
  if (out.empty()) throw ConfigError("/studies", "no '" + command + "' study with endpoints");
  if (opts.t && *opts.t <= 0) throw ConfigError("--t", "must be positive");
  return out;
}

void cmdDistance(const ScenarioConfig& cfg, const RunOptions& opts, RunReport& rep) {
  ManifoldMetric metric(cfg.structure(), metricOptions(cfg, opts.seed.value_or(cfg.seed)));
  json results = json::array();
  int index = 0;
  for (const auto& e : endpoints(cfg, "distance", opts)) {
    DistanceResult d = metric.distance(e.x, e.y, e.t);
    std::string csv = "k";
    for (int i = 0; i < d.trajectory.cols(); ++i) csv += ",x" + std::to_string(i);
    csv += "\n";
    for (int k = 0; k < d.trajectory.rows(); ++k) {
      csv += std::to_string(k);
      for (int i = 0; i < d.trajectory.cols(); ++i) csv += "," + num(d.trajectory(k, i));
      csv += "\n";
    }
    rep.tables["distance_" + std::to_string(index)] = csv;
    results.push_back({{"x", vec(e.x)},
                       {"y", vec(e.y)},
                       {"t", e.t},
                       {"value", d.value},
                       {"d1", d.value * e.t},
                       {"status", d.status()},
                       {"residual", d.residual},
                       {"restarts", d.restarts},
                       {"history", d.history}});
    rep.lines.push_back("d_" + num(e.t) + "(" + vecText(e.x) + ", " + vecText(e.y) + ") <= " + num(d.value) + " [" +
                        d.status() + ", residual " + num(d.residual) + "]");
    if (!d.converged) {
      rep.warnings.push_back("distance " + std::to_string(index) + " unconverged; value is an upper bound");
      rep.failed = true;
    }
    ++index;
  }
  rep.outputs = {{"distances", results}};
}

void cmdQuasinorm(const ScenarioConfig& cfg, const RunOptions& opts, RunReport& rep) {
  NaturalMap nm(cfg.structure());
  json results = json::array();
  int index = 0;
  for (const auto& e : endpoints(cfg, "quasinorm", opts)) {
    QuasiNormResult q = quasiNormElement(nm, GroupoidPoint::manifold(e.y, e.x, e.t));
    json r = {{"x", vec(e.x)}, {"y", vec(e.y)}, {"t", e.t}, {"status", q.status()}, {"residual", q.residual}};
    if (q.finite) {
      r["value"] = q.value;
      r["minimizer"] = vec(q.minimizer);
      rep.lines.push_back("||(" + vecText(e.y) + ", " + vecText(e.x) + ", " + num(e.t) + ")|| = " + num(q.value));
    } else {
      r["value"] = nullptr;
      rep.lines.push_back("||(" + vecText(e.y) + ", " + vecText(e.x) + ", " + num(e.t) + ")||: possibly infinite");
      rep.warnings.push_back("quasinorm " + std::to_string(index) + ": no solution found (possibly infinite)");
      rep.failed = true;
    }
    results.push_back(r);
    ++index;
  }
  rep.outputs = {{"quasinorms", results}};
}

void cmdGh(const ScenarioConfig& cfg, const RunOptions& opts, RunReport& rep) {
  NaturalMap nm(cfg.structure());
  json studies = json::array();
  bool any = false;
  for (const auto& s : cfg.studiesFor("gh")) {
    const std::string pathName = s["path"].get<std::string>();
    if (opts.path && *opts.path != pathName) continue;
    any = true;
    StudyOptions so;
    so.radius = s.value("radius", 1.0);
    so.netSize = s.value("net_size", 30);
    const int rows = s.value("rows", 8);
    so.schedule.clear();
    for (int k = 0; k < rows; ++k) so.schedule.push_back(0.2 * std::ldexp(1.0, -k));
    so.seed = opts.seed.value_or(cfg.seed);
    so.coneMetric = metricOptions(cfg, so.coneMetric.seed);
    const MetricOptions manifoldDefaults = so.manifoldMetric;
    so.manifoldMetric = metricOptions(cfg, manifoldDefaults.seed);
    so.manifoldMetric.starts = manifoldDefaults.starts;
    so.limit = limitOptions(cfg);
    so.net.jobs = opts.jobs;

    ConvergenceTable table = convergenceStudy(nm, cfg.path(pathName), so);
    rep.tables["gh_" + pathName] = table.csv();
    const bool monotone = table.monotone(2 * cfg.tolerances.solverTol);
    json rowsJson = json::array();
    for (const auto& r : table.rows) {
      rowsJson.push_back({{"t", r.t},
                          {"D", r.distortion},
                          {"gap", r.gap},
                          {"net_size", r.netSize},
                          {"gh_bound", r.ghBound},
                          {"unconverged", r.unconverged},
                          {"escaped", r.escaped},
                          {"flagged", r.flagged},
                          {"seconds", r.seconds}});
      if (r.flagged) rep.warnings.push_back("gh " + pathName + " t=" + num(r.t) + ": over 10% of pairs unconverged");
      if (r.escaped) rep.warnings.push_back("gh " + pathName + " t=" + num(r.t) + ": " + std::to_string(r.escaped) +
                                            " points escaped the chart");
    }
    studies.push_back({{"path", pathName},
                       {"radius", table.radius},
                       {"cone_dim", table.coneDim},
                       {"fineness", table.fineness},
                       {"slope", table.slope},
                       {"monotone", monotone},
                       {"rows", rowsJson}});
    rep.lines.push_back("gh " + pathName + ": cone dimension " + std::to_string(table.coneDim) + ", fineness " +
                        num(table.fineness) + ", slope " + num(table.slope) + ", D monotone " +
                        (monotone ? "yes" : "no"));
    for (const auto& r : table.rows)
      rep.lines.push_back("  t=" + num(r.t) + "  D=" + num(r.distortion) + "  gh_bound=" + num(r.ghBound));
  }
  if (!any)
    throw ConfigError("/studies", opts.path ? "no gh study for path '" + *opts.path + "'" : "no gh study");
  rep.outputs = {{"studies", studies}};
}

std::string hashInputs(const std::string& command, const RunOptions& opts) {
  std::string data = command + "\n" + opts.configText;
  if (opts.path) data += "\npath=" + *opts.path;
  if (opts.t) data += "\nt=" + num(*opts.t);
  if (opts.seed) data += "\nseed=" + std::to_string(*opts.seed);
  return fnv1aHex(data);
}

}  // namespace

json RunReport::toJson() const {
  return {{"command", command}, {"inputs_hash", inputsHash}, {"outputs", outputs}, {"wall_time", wallTime},
          {"warnings", warnings}};
}

const std::vector<std::string>& commandNames() {
  static const std::vector<std::string> names = {"validate", "cones", "distance", "quasinorm", "gh", "selftest"};
  return names;
}

RunReport runCommand(const std::string& command, const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = command;
  rep.inputsHash = hashInputs(command, opts);
  if (command == "validate")
    cmdValidate(cfg, rep);
  else if (command == "cones")
    cmdCones(cfg, opts, rep);
  else if (command == "distance")
    cmdDistance(cfg, opts, rep);
  else if (command == "quasinorm")
    cmdQuasinorm(cfg, opts, rep);
  else if (command == "gh")
    cmdGh(cfg, opts, rep);
  else if (command == "selftest")
    return runSelftest(opts);
  else
    throw ConfigError("", "unknown command '" + command + "'");
  rep.wallTime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

RunReport runSelftest(const RunOptions& opts, std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = "selftest";
  rep.inputsHash = hashInputs("selftest", opts);
  acceptance::Options ao;
  ao.jobs = opts.jobs;
  json criteria = json::array();
  for (const auto& r : acceptance::run(ao, progress)) {
    criteria.push_back({{"id", r.id},
                        {"title", r.title},
                        {"pass", r.pass},
                        {"detail", r.detail},
                        {"seconds", r.seconds},
                        {"notes", r.notes}});
    if (!progress) {
      rep.lines.push_back(acceptance::verdictLine(r));
      for (const auto& n : r.notes) rep.lines.push_back("    " + n);
    }
    for (const auto& [name, csv] : r.tables) rep.tables["criterion" + std::to_string(r.id) + "_" + name] = csv;
    if (!r.pass) rep.failed = true;
  }
  rep.outputs = {{"criteria", criteria}, {"passed", !rep.failed}};
  rep.wallTime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.lines.push_back("wall time " + num(rep.wallTime) + " s");
  return rep;
}

void writeReport(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "tables");
  std::ofstream(fs::path(dir) / "report.json") << report.toJson().dump(2) << "\n";
  for (const auto& [name, csv] : report.tables) std::ofstream(fs::path(dir) / "tables" / (name + ".csv")) << csv;
}

}  // namespace nilpotentizer::cli
