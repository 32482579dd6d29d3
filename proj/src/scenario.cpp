#include "nilpotentizer/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nilpotentizer/errors.hpp"
#include "nilpotentizer/polynomial.hpp"

namespace nilpotentizer {

using nlohmann::json;

namespace {

std::string joinIssues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid scenario:";
  for (const auto& i : issues) out += "\n  " + (i.pointer.empty() ? std::string("/") : i.pointer) + ": " + i.message;
  return out;
}

class Checker {
 public:
  void fail(const std::string& pointer, const std::string& message) { issues.push_back({pointer, message}); }

  const json* member(const json& obj, const std::string& pointer, const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(pointer + "/" + key, "required member missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<int> integer(const json& v, const std::string& pointer) {
    if (!v.is_number_integer()) {
      fail(pointer, "expected an integer");
      return std::nullopt;
    }
    return v.get<int>();
  }

  std::optional<double> number(const json& v, const std::string& pointer) {
    if (!v.is_number()) {
      fail(pointer, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::vector<std::string>> strings(const json& v, const std::string& pointer) {
    if (!v.is_array()) {
      fail(pointer, "expected an array of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        fail(pointer + "/" + std::to_string(i), "expected a string");
        ok = false;
      } else {
        out.push_back(v[i].get<std::string>());
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::vector<ConfigIssue> issues;
};

void parseStructure(const json& s, ScenarioConfig& cfg, Checker& c) {
  const std::string p = "/structure";
  if (!s.is_object()) {
    c.fail(p, "expected an object");
    return;
  }
  if (auto* d = c.member(s, p, "dim", true))
    if (auto v = c.integer(*d, p + "/dim")) {
      if (*v < 1) c.fail(p + "/dim", "must be at least 1");
      cfg.dim = *v;
    }
  if (auto* d = c.member(s, p, "depth", true))
    if (auto v = c.integer(*d, p + "/depth")) {
      if (*v < 1) c.fail(p + "/depth", "must be at least 1");
      cfg.depth = *v;
    }
  if (auto* v = c.member(s, p, "variables", false))
    if (auto names = c.strings(*v, p + "/variables")) {
      if (cfg.dim > 0 && static_cast<int>(names->size()) != cfg.dim)
        c.fail(p + "/variables", "expected " + std::to_string(cfg.dim) + " names");
      cfg.variables = *names;
    }

  const json* gens = c.member(s, p, "generators", true);
  if (gens && (!gens->is_array() || gens->empty())) {
    c.fail(p + "/generators", "expected a non-empty array");
    gens = nullptr;
  }
  int maxWeight = 0;
  int horizontal = 0;
  if (gens) {
    for (std::size_t i = 0; i < gens->size(); ++i) {
      const std::string gp = p + "/generators/" + std::to_string(i);
      const json& g = (*gens)[i];
      if (!g.is_object()) {
        c.fail(gp, "expected an object");
        continue;
      }
      GeneratorSpec spec;
      if (auto* w = c.member(g, gp, "weight", true))
        if (auto v = c.integer(*w, gp + "/weight")) {
          spec.weight = *v;
          if (*v < 1) c.fail(gp + "/weight", "weight must be at least 1");
          maxWeight = std::max(maxWeight, *v);
          if (*v == 1) ++horizontal;
        }
      if (auto* comps = c.member(g, gp, "components", true))
        if (auto v = c.strings(*comps, gp + "/components")) {
          spec.components = *v;
          if (cfg.dim > 0 && static_cast<int>(v->size()) != cfg.dim)
            c.fail(gp + "/components", "expected " + std::to_string(cfg.dim) + " components");
          for (std::size_t k = 0; k < v->size() && cfg.dim > 0; ++k) {
            try {
              Polynomial::parse((*v)[k], cfg.dim, cfg.variables);
            } catch (const ParseError& e) {
              c.fail(gp + "/components/" + std::to_string(k), e.what());
            }
          }
        }
      cfg.generators.push_back(std::move(spec));
    }
  }
  if (maxWeight > cfg.depth) c.fail(p + "/depth", "depth must be at least the largest weight");

  if (auto* g = c.member(s, p, "gram", false)) {
    const std::string gp = p + "/gram";
    if (!g->is_array() || static_cast<int>(g->size()) != horizontal) {
      c.fail(gp, "expected a " + std::to_string(horizontal) + "x" + std::to_string(horizontal) + " matrix");
    } else {
      cfg.gram.resize(horizontal, horizontal);
      for (int r = 0; r < horizontal; ++r) {
        const json& row = (*g)[r];
        if (!row.is_array() || static_cast<int>(row.size()) != horizontal) {
          c.fail(gp + "/" + std::to_string(r), "expected " + std::to_string(horizontal) + " entries");
          continue;
        }
        for (int k = 0; k < horizontal; ++k)
          if (auto v = c.number(row[k], gp + "/" + std::to_string(r) + "/" + std::to_string(k))) cfg.gram(r, k) = *v;
      }
    }
  }
}

void parsePaths(const json& paths, ScenarioConfig& cfg, Checker& c) {
  if (!paths.is_array()) {
    c.fail("/paths", "expected an array");
    return;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string pp = "/paths/" + std::to_string(i);
    const json& p = paths[i];
    if (!p.is_object()) {
      c.fail(pp, "expected an object");
      continue;
    }
    PathSpec spec;
    if (auto* n = c.member(p, pp, "name", true)) {
      if (!n->is_string()) {
        c.fail(pp + "/name", "expected a string");
      } else {
        spec.name = n->get<std::string>();
        if (!seen.insert(spec.name).second) c.fail(pp + "/name", "duplicate path name '" + spec.name + "'");
      }
    }
    if (auto* comps = c.member(p, pp, "components", true))
      if (auto v = c.strings(*comps, pp + "/components")) {
        spec.components = *v;
        if (cfg.dim > 0 && static_cast<int>(v->size()) != cfg.dim)
          c.fail(pp + "/components", "expected " + std::to_string(cfg.dim) + " components");
        for (std::size_t k = 0; k < v->size(); ++k) {
          try {
            Expression::parse((*v)[k], {"t"});
          } catch (const ParseError& e) {
            c.fail(pp + "/components/" + std::to_string(k), e.what());
          }
        }
      }
    if (auto* v = c.member(p, pp, "t0", false))
      if (auto x = c.number(*v, pp + "/t0")) {
        if (*x <= 0) c.fail(pp + "/t0", "must be positive");
        spec.t0 = *x;
      }
    if (auto* v = c.member(p, pp, "rho", false))
      if (auto x = c.number(*v, pp + "/rho")) {
        if (*x <= 0 || *x >= 1) c.fail(pp + "/rho", "must lie in (0, 1)");
        spec.rho = *x;
      }
    if (auto* v = c.member(p, pp, "steps", false))
      if (auto x = c.integer(*v, pp + "/steps")) {
        if (*x < 2) c.fail(pp + "/steps", "must be at least 2");
        spec.steps = *x;
      }
    cfg.paths.push_back(std::move(spec));
  }
}

const std::set<std::string> kCommands = {"validate", "cones", "distance", "quasinorm", "gh"};

void checkPoint(const json& study, const std::string& sp, const char* key, int dim, Checker& c, bool required) {
  const json* v = c.member(study, sp, key, required);
  if (!v) return;
  const std::string kp = sp + "/" + key;
  if (!v->is_array() || (dim > 0 && static_cast<int>(v->size()) != dim)) {
    c.fail(kp, "expected " + std::to_string(dim) + " numbers");
    return;
  }
  for (std::size_t i = 0; i < v->size(); ++i) c.number((*v)[i], kp + "/" + std::to_string(i));
}

void parseStudies(const json& studies, ScenarioConfig& cfg, Checker& c) {
  if (!studies.is_array()) {
    c.fail("/studies", "expected an array");
    return;
  }
  std::set<std::string> pathNames;
  for (const auto& p : cfg.paths) pathNames.insert(p.name);
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const std::string sp = "/studies/" + std::to_string(i);
    const json& s = studies[i];
    if (!s.is_object()) {
      c.fail(sp, "expected an object");
      continue;
    }
    const json* cmd = c.member(s, sp, "command", true);
    if (!cmd) continue;
    if (!cmd->is_string() || !kCommands.count(cmd->get<std::string>())) {
      c.fail(sp + "/command", "expected one of validate, cones, distance, quasinorm, gh");
      continue;
    }
    const std::string name = cmd->get<std::string>();
    if (name == "distance" || name == "quasinorm") {
      checkPoint(s, sp, "x", cfg.dim, c, true);
      checkPoint(s, sp, "y", cfg.dim, c, true);
      if (auto* t = c.member(s, sp, "t", false))
        if (auto v = c.number(*t, sp + "/t"))
          if (*v <= 0) c.fail(sp + "/t", "must be positive");
    }
    if (name == "cones") checkPoint(s, sp, "point", cfg.dim, c, false);
    if (name == "validate") {
      if (auto* g = c.member(s, sp, "grid", false)) {
        if (!g->is_array() || g->size() != 3)
          c.fail(sp + "/grid", "expected [min, max, points per axis]");
        else if (!(*g)[2].is_number_integer() || (*g)[2].get<int>() < 1)
          c.fail(sp + "/grid/2", "expected a positive integer");
      }
    }
    if (name == "gh") {
      if (auto* p = c.member(s, sp, "path", true)) {
        if (!p->is_string())
          c.fail(sp + "/path", "expected a string");
        else if (!pathNames.count(p->get<std::string>()))
          c.fail(sp + "/path", "unknown path '" + p->get<std::string>() + "'");
      }
      for (const char* key : {"radius"})
        if (auto* v = c.member(s, sp, key, false))
          if (auto x = c.number(*v, sp + "/" + key))
            if (*x <= 0) c.fail(sp + "/" + key, "must be positive");
      for (const char* key : {"net_size", "rows"})
        if (auto* v = c.member(s, sp, key, false))
          if (auto x = c.integer(*v, sp + "/" + key))
            if (*x < 2) c.fail(sp + "/" + key, "must be at least 2");
    }
    cfg.studies.push_back(s);
  }
}

void parseTolerances(const json& t, ScenarioConfig& cfg, Checker& c) {
  if (!t.is_object()) {
    c.fail("/tolerances", "expected an object");
    return;
  }
  const std::map<std::string, double*> known = {{"solver_tol", &cfg.tolerances.solverTol},
                                                {"endpoint_tol", &cfg.tolerances.endpointTol},
                                                {"cauchy_tol", &cfg.tolerances.cauchyTol},
                                                {"subalgebra_tol", &cfg.tolerances.subalgebraTol},
                                                {"rank_tol", &cfg.tolerances.rankTol}};
  for (auto it = t.begin(); it != t.end(); ++it) {
    const std::string kp = "/tolerances/" + it.key();
    auto k = known.find(it.key());
    if (k == known.end()) {
      c.fail(kp, "unknown tolerance");
      continue;
    }
    if (auto v = c.number(it.value(), kp)) {
      if (*v <= 0) c.fail(kp, "must be positive");
      *k->second = *v;
    }
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::invalid_argument(joinIssues(issues)), issues_(std::move(issues)) {}

ConfigError::ConfigError(const std::string& pointer, const std::string& message)
    : ConfigError(std::vector<ConfigIssue>{{pointer, message}}) {}

ScenarioConfig parseConfig(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  Checker c;
  ScenarioConfig cfg;
  if (!doc.is_object()) throw ConfigError("", "expected an object");
  const std::set<std::string> allowed = {"name", "structure", "paths", "studies", "seed", "tolerances"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!allowed.count(it.key())) c.fail("/" + it.key(), "unknown member");

  if (auto* n = c.member(doc, "", "name", false)) {
    if (n->is_string())
      cfg.name = n->get<std::string>();
    else
      c.fail("/name", "expected a string");
  }
  if (auto* s = c.member(doc, "", "structure", true)) parseStructure(*s, cfg, c);
  if (auto* p = c.member(doc, "", "paths", false)) parsePaths(*p, cfg, c);
  if (auto* s = c.member(doc, "", "studies", false)) parseStudies(*s, cfg, c);
  if (auto* s = c.member(doc, "", "seed", false)) {
    if (s->is_number_unsigned())
      cfg.seed = s->get<std::uint64_t>();
    else
      c.fail("/seed", "expected a non-negative integer");
  }
  if (auto* t = c.member(doc, "", "tolerances", false)) parseTolerances(*t, cfg, c);

  if (c.issues.empty()) {
    // Remaining structural checks (Gram positivity) live in the structure constructor.
    try {
      cfg.structure();
    } catch (const std::invalid_argument& e) {
      c.fail("/structure", e.what());
    }
  }
  if (!c.issues.empty()) throw ConfigError(std::move(c.issues));
  return cfg;
}

ScenarioConfig loadConfig(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read " + file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseConfig(buffer.str());
}

SubRiemannianStructure ScenarioConfig::structure() const {
  std::vector<Generator> gens;
  for (const auto& g : generators) gens.push_back({VectorField::parse(g.components, variables), g.weight});
  return SubRiemannianStructure(dim, std::move(gens), depth, gram, variables);
}

ApproachPath ScenarioConfig::path(const std::string& name) const {
  for (const auto& p : paths)
    if (p.name == name) return ApproachPath(p.name, p.components, p.t0, p.rho, p.steps);
  throw ConfigError("/paths", "no path named '" + name + "'");
}

std::vector<json> ScenarioConfig::studiesFor(const std::string& command) const {
  std::vector<json> out;
  for (const auto& s : studies)
    if (s.at("command") == command) out.push_back(s);
  return out;
}

json ScenarioConfig::toJson() const {
  json s;
  s["dim"] = dim;
  s["depth"] = depth;
  if (!variables.empty()) s["variables"] = variables;
  s["generators"] = json::array();
  for (const auto& g : generators) s["generators"].push_back({{"weight", g.weight}, {"components", g.components}});
  if (gram.size()) {
    json rows = json::array();
    for (int r = 0; r < gram.rows(); ++r) {
      json row = json::array();
      for (int k = 0; k < gram.cols(); ++k) row.push_back(gram(r, k));
      rows.push_back(row);
    }
    s["gram"] = rows;
  }
  json out;
  out["name"] = name;
  out["structure"] = s;
  out["paths"] = json::array();
  for (const auto& p : paths)
    out["paths"].push_back(
        {{"name", p.name}, {"components", p.components}, {"t0", p.t0}, {"rho", p.rho}, {"steps", p.steps}});
  out["studies"] = studies;
  out["seed"] = seed;
  out["tolerances"] = {{"solver_tol", tolerances.solverTol},
                       {"endpoint_tol", tolerances.endpointTol},
                       {"cauchy_tol", tolerances.cauchyTol},
                       {"subalgebra_tol", tolerances.subalgebraTol},
                       {"rank_tol", tolerances.rankTol}};
  return out;
}

namespace {

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> table = {
      {"grushin2", R"json({
  "name": "grushin2",
  "structure": {
    "dim": 2,
    "depth": 2,
    "variables": ["x", "y"],
    "generators": [
      {"weight": 1, "components": ["1", "0"]},
      {"weight": 1, "components": ["0", "x"]}
    ]
  },
  "paths": [
    {"name": "origin", "components": ["0", "0"]},
    {"name": "lambda1", "components": ["t", "0"]},
    {"name": "lambda2", "components": ["2*t", "0"]},
    {"name": "sqrt", "components": ["sqrt(t)", "0"], "rho": 0.25}
  ],
  "studies": [
    {"command": "validate", "grid": [-1, 1, 5]},
    {"command": "cones", "point": [0.5, 0.3]},
    {"command": "distance", "x": [0, 0], "y": [1, 0], "t": 1},
    {"command": "distance", "x": [0.2, -0.1], "y": [0.5, 0.4], "t": 0.5},
    {"command": "quasinorm", "x": [0.2, 0.1], "y": [0.35, 0.2], "t": 0.4},
    {"command": "gh", "path": "lambda1", "radius": 1, "net_size": 30, "rows": 8}
  ],
  "seed": 11
}
)json"},
      {"grushin3", R"json({
  "name": "grushin3",
  "structure": {
    "dim": 2,
    "depth": 3,
    "variables": ["x", "y"],
    "generators": [
      {"weight": 1, "components": ["1", "0"]},
      {"weight": 1, "components": ["0", "x^2"]}
    ]
  },
  "paths": [
    {"name": "origin", "components": ["0", "0"]},
    {"name": "lambda1", "components": ["t", "0"]},
    {"name": "sqrt", "components": ["sqrt(t)", "0"], "rho": 0.25}
  ],
  "studies": [
    {"command": "validate", "grid": [-1, 1, 5]},
    {"command": "cones", "point": [0.5, 0.3]},
    {"command": "distance", "x": [0, 0], "y": [1, 0], "t": 1},
    {"command": "quasinorm", "x": [0.2, 0.1], "y": [0.35, 0.2], "t": 0.4},
    {"command": "gh", "path": "lambda1", "radius": 1, "net_size": 30, "rows": 8}
  ],
  "seed": 11
}
)json"},
      {"heisenberg", R"json({
  "name": "heisenberg",
  "structure": {
    "dim": 3,
    "depth": 2,
    "generators": [
      {"weight": 1, "components": ["1", "0", "0"]},
      {"weight": 1, "components": ["0", "1", "x0"]}
    ]
  },
  "paths": [
    {"name": "origin", "components": ["0", "0", "0"]},
    {"name": "line", "components": ["t", "0", "0"]}
  ],
  "studies": [
    {"command": "validate", "grid": [-1, 1, 3]},
    {"command": "distance", "x": [0, 0, 0], "y": [1, 0, 0], "t": 1},
    {"command": "quasinorm", "x": [0, 0, 0], "y": [0.1, 0.2, 0.05], "t": 0.5},
    {"command": "gh", "path": "origin", "radius": 1, "net_size": 30, "rows": 8}
  ],
  "seed": 11
}
)json"},
      {"martinet", R"json({
  "name": "martinet",
  "structure": {
    "dim": 3,
    "depth": 3,
    "generators": [
      {"weight": 1, "components": ["1", "0", "0"]},
      {"weight": 1, "components": ["0", "1", "x0^2"]}
    ]
  },
  "paths": [
    {"name": "origin", "components": ["0", "0", "0"]},
    {"name": "line", "components": ["t", "0", "0"]}
  ],
  "studies": [
    {"command": "validate", "grid": [-1, 1, 3]},
    {"command": "cones", "point": [0.5, 0, 0]},
    {"command": "distance", "x": [0, 0, 0], "y": [0.5, 0.2, 0.1], "t": 1}
  ],
  "seed": 11
}
)json"},
      {"euclidean", R"json({
  "name": "euclidean",
  "structure": {
    "dim": 2,
    "depth": 1,
    "generators": [
      {"weight": 1, "components": ["1", "0"]},
      {"weight": 1, "components": ["0", "1"]}
    ]
  },
  "paths": [
    {"name": "fixed", "components": ["0.3", "0.1"]}
  ],
  "studies": [
    {"command": "validate", "grid": [-1, 1, 5]},
    {"command": "distance", "x": [0, 0], "y": [0.3, 0.4], "t": 0.5},
    {"command": "quasinorm", "x": [0, 0], "y": [0.3, 0.4], "t": 0.5},
    {"command": "gh", "path": "fixed", "radius": 1, "net_size": 30, "rows": 8}
  ],
  "seed": 11
}
)json"}};
  return table;
}

}  // namespace

std::vector<std::string> builtinScenarioNames() { return {"grushin2", "grushin3", "heisenberg", "martinet", "euclidean"}; }

const std::string& builtinScenarioText(const std::string& name) { return builtins().at(name); }

ScenarioConfig builtinScenario(const std::string& name) { return parseConfig(builtinScenarioText(name)); }

std::string fnv1aHex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nilpotentizer
