#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fk {

enum class OracleKind { finite_difference, eigen_svd, exhaustive_count, analytic };

const char* oracle_kind_name(OracleKind kind);

struct CaseResult {
  bool pass = false;
  double measured = 0.0;  // the quantity compared against the tolerance
  std::string diagnostic;
};

struct OracleCase {
  std::string description;
  OracleKind kind = OracleKind::analytic;
  double tolerance = 0.0;
  std::function<CaseResult(std::uint64_t seed)> run;
};

// The registered cross-module checks: per-layer-kind gradients, SVD against
// the eigen route, the threshold formulas, the FGSM L-inf bound, mean-line
// partitioning, the two-kernel targeting construction and the no-op defense.
std::vector<OracleCase> all_oracle_cases();

struct SuiteSummary {
  std::size_t total = 0;
  std::size_t failed = 0;
  std::vector<std::string> case_names;
  std::vector<CaseResult> results;
  std::vector<OracleKind> kinds;
  std::vector<double> tolerances;

  bool all_passed() const { return failed == 0; }
};

SuiteSummary run_all(std::uint64_t seed);

std::string summary_to_csv(const SuiteSummary& s);

}  // namespace fk
