#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "nilpotentizer/grassmann.hpp"
#include "nilpotentizer/vfields.hpp"

namespace nilpotentizer {

struct ConfigIssue {
  /// JSON pointer into the document, e.g. "/structure/generators/0/weight".
  std::string pointer;
  std::string message;
};

/// Schema violations of a scenario document, all of them at once.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  ConfigError(const std::string& pointer, const std::string& message);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct GeneratorSpec {
  int weight = 1;
  std::vector<std::string> components;
};

struct PathSpec {
  std::string name;
  std::vector<std::string> components;
  double t0 = 0.1;
  double rho = 0.5;
  int steps = 40;
};

struct Tolerances {
  double solverTol = 1e-4;
  double endpointTol = 1e-6;
  double cauchyTol = 1e-7;
  double subalgebraTol = 1e-8;
  double rankTol = 1e-9;
};

struct ScenarioConfig {
  std::string name;
  int dim = 0;
  int depth = 1;
  std::vector<std::string> variables;
  std::vector<GeneratorSpec> generators;
  /// Empty means the identity on the weight-1 generators.
  Eigen::MatrixXd gram;
  std::vector<PathSpec> paths;
  /// Command-specific option objects; each has a "command" member.
  std::vector<nlohmann::json> studies;
  std::uint64_t seed = 11;
  Tolerances tolerances;

  SubRiemannianStructure structure() const;
  /// Throws ConfigError when no path has this name.
  ApproachPath path(const std::string& name) const;
  /// Studies whose "command" equals the given one, in document order.
  std::vector<nlohmann::json> studiesFor(const std::string& command) const;
  /// Canonical form; parseConfig(toJson().dump()) reproduces the config.
  nlohmann::json toJson() const;
};

/// Validates the whole document and throws ConfigError listing every problem found.
ScenarioConfig parseConfig(const std::string& text);
ScenarioConfig loadConfig(const std::string& file);

/// grushin2, grushin3, heisenberg, martinet, euclidean.
std::vector<std::string> builtinScenarioNames();
/// JSON text of a built-in scenario; throws std::out_of_range for unknown names.
const std::string& builtinScenarioText(const std::string& name);
ScenarioConfig builtinScenario(const std::string& name);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1aHex(const std::string& data);

}  // namespace nilpotentizer
