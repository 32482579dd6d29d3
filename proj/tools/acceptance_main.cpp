#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "acceptance.hpp"

using namespace nilpotentizer;

int main(int argc, char** argv) {
  CLI::App app{"Runs the acceptance criteria and prints one verdict per criterion"};
  acceptance::Options opts;
  std::vector<int> only;
  std::string outDir;
  bool skipSupplementary = false;
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", outDir, "Directory for the convergence tables");
  app.add_flag("--no-supplementary", skipSupplementary, "Skip the extra convergence studies");
  CLI11_PARSE(app, argc, argv);
  opts.only.insert(only.begin(), only.end());
  opts.supplementary = !skipSupplementary;

  const auto results = acceptance::run(opts, &std::cout);
  int failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    if (!r.pass) ++failed;
    total += r.seconds;
    if (!outDir.empty())
      for (const auto& [name, csv] : r.tables) {
        std::filesystem::create_directories(outDir);
        std::ofstream(std::filesystem::path(outDir) / ("criterion" + std::to_string(r.id) + "_" + name + ".csv")) << csv;
      }
  }
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed in " << total << " s\n";
  return failed == 0 ? 0 : 1;
}
