#pragma once

#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace nilpotentizer::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// One-line summary of the measured quantities against their thresholds.
  std::string detail;
  double seconds = 0.0;
  /// Runtime budget in seconds; 0 when the criterion has none.
  double budget = 0.0;
  /// Informational lines that do not affect the verdict.
  std::vector<std::string> notes;
  /// name -> CSV text.
  std::map<std::string, std::string> tables;
};

struct Options {
  int jobs = 1;
  /// Criteria to run; empty runs all of 1..11.
  std::set<int> only;
  /// Adds the non-self-similar convergence studies to criterion 9 as notes.
  bool supplementary = true;
};

/// Runs the criteria in order, printing each verdict line to `progress` as soon as it is known.
std::vector<CriterionResult> run(const Options& opts, std::ostream* progress = nullptr);

/// "criterion 3 PASS (0.12 s): ..." style line.
std::string verdictLine(const CriterionResult& r);

}  // namespace nilpotentizer::acceptance
