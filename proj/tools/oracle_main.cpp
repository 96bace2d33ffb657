#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

#include "fk/csvio.hpp"
#include "fk/oracle_suite.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fk-oracles: cross-module oracle and property checks"};
  std::uint64_t seed = 1;
  std::string csv_path;
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--csv", csv_path, "write machine-readable results here");

  CLI11_PARSE(app, argc, argv);

  const fk::SuiteSummary s = fk::run_all(seed);
  for (std::size_t i = 0; i < s.total; ++i) {
    std::cout << (s.results[i].pass ? "[pass] " : "[FAIL] ")
              << s.case_names[i] << " — " << s.results[i].diagnostic << "\n";
  }
  std::cout << s.total - s.failed << "/" << s.total << " oracle cases passed\n";
  if (!csv_path.empty()) {
    fk::write_file_atomic(csv_path, fk::summary_to_csv(s));
  }
  return s.all_passed() ? 0 : 1;
}
