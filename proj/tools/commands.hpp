#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nilpotentizer/scenario.hpp"

namespace nilpotentizer::cli {

enum ExitCode : int { kOk = 0, kNumericFailure = 1, kConfigError = 2, kInternalError = 3 };

struct RunOptions {
  std::optional<std::string> path;
  std::optional<double> t;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  /// Bytes hashed into inputs_hash: the config text and the options above.
  std::string configText;
};

struct RunReport {
  std::string command;
  std::string inputsHash;
  nlohmann::json outputs = nlohmann::json::object();
  double wallTime = 0.0;
  std::vector<std::string> warnings;
  /// Written to tables/<name>.csv.
  std::map<std::string, std::string> tables;
  /// Human-readable lines for stdout.
  std::vector<std::string> lines;
  bool failed = false;

  nlohmann::json toJson() const;
  int exitCode() const { return failed ? kNumericFailure : kOk; }
};

const std::vector<std::string>& commandNames();

/// Runs one command. Config problems surface as ConfigError, numeric breakdowns as NumericFailure;
/// checks that run to completion but do not pass set `failed`.
RunReport runCommand(const std::string& command, const ScenarioConfig& cfg, const RunOptions& opts);

/// Runs the acceptance suite on the built-in scenarios. With `progress`, verdicts are streamed there
/// instead of collected in `lines`.
RunReport runSelftest(const RunOptions& opts, std::ostream* progress = nullptr);

/// report.json plus tables/*.csv under dir.
void writeReport(const RunReport& report, const std::string& dir);

}  // namespace nilpotentizer::cli
