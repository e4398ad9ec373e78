// Acceptance runner: one PASS/FAIL line per criterion. Exits nonzero if any
// selected criterion fails.
//
//   acceptance                      all criteria
//   acceptance --criterion 7 -v     one criterion with its diagnostics
//   acceptance --csv results.csv    also write the table

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tirepde/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = tirepde::acceptance;
  CLI::App app{"acceptance criteria"};
  std::vector<int> ids;
  bool verbose = false;
  std::string csv;
  app.add_option("--criterion", ids, "criterion number (repeatable; default all)")
      ->check(CLI::Range(1, static_cast<int>(acc::criteria().size())));
  app.add_flag("-v,--verbose", verbose, "print supporting measurements");
  app.add_option("--csv", csv, "write a machine-readable results table");
  CLI11_PARSE(app, argc, argv);

  if (ids.empty()) {
    for (int id = 1; id <= static_cast<int>(acc::criteria().size()); ++id) ids.push_back(id);
  }
  acc::Context ctx;
  std::vector<acc::CriterionResult> results;
  bool all = true;
  for (int id : ids) {
    results.push_back(acc::run_criterion(id, ctx));
    std::cout << acc::result_line(results.back()) << std::endl;
    if (verbose) {
      for (const auto& n : results.back().notes) std::cout << "      " << n << "\n";
    }
    all = all && results.back().passed;
  }
  if (!csv.empty()) {
    std::ofstream os(csv);
    acc::write_results_csv(os, results);
  }
  return all ? 0 : 1;
}
