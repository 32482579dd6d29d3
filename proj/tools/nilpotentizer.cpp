#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "nilpotentizer/errors.hpp"

using namespace nilpotentizer;

namespace {

std::string readFile(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read " + file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tangent cones and their metrics for weighted polynomial vector fields"};
  std::string command, configFile, builtin, outDir;
  cli::RunOptions opts;
  app.add_option("command", command, "validate | cones | distance | quasinorm | gh | selftest")
      ->required()
      ->check(CLI::IsMember(cli::commandNames()));
  auto* config = app.add_option("--config", configFile, "Scenario JSON file");
  app.add_option("--builtin", builtin, "Built-in scenario instead of --config")
      ->check(CLI::IsMember(builtinScenarioNames()))
      ->excludes(config);
  app.add_option("--path", opts.path, "Restrict to one named path");
  app.add_option("--t", opts.t, "Override t for distance and quasinorm");
  app.add_option("--out", outDir, "Directory for report.json and tables/*.csv");
  app.add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opts.seed, "Override the scenario seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  try {
    cli::RunReport report;
    if (command == "selftest") {
      report = cli::runSelftest(opts, &std::cout);
    } else {
      if (configFile.empty() && builtin.empty()) throw ConfigError("", "--config or --builtin is required");
      opts.configText = builtin.empty() ? readFile(configFile) : builtinScenarioText(builtin);
      ScenarioConfig cfg = parseConfig(opts.configText);
      report = cli::runCommand(command, cfg, opts);
    }
    for (const auto& line : report.lines) std::cout << line << "\n";
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    if (!outDir.empty()) cli::writeReport(report, outDir);
    return report.exitCode();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return cli::kConfigError;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return cli::kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return cli::kInternalError;
  }
}
