#pragma once

#include <string>
#include <vector>

#include "fk/fragility.hpp"
#include "fk/nn.hpp"

namespace fk {

// Per-epsilon counts of test examples whose first-layer activation
// distortion concentrates more on fragile kernels than on null kernels.
struct TargetingRow {
  double epsilon = 0.0;
  std::size_t s_count = 0;
  std::size_t total_examples = 0;
  double percent_attacking_s = 0.0;
};

struct ExampleDetail {
  double epsilon = 0.0;
  double s_f = 0.0;  // mean distance over S
  double s_n = 0.0;  // mean distance over S'
};

struct TargetingReport {
  std::vector<TargetingRow> rows;
  std::vector<ExampleDetail> detail;  // filled only when verbose
};

// d_j = L2 norm over kernel j's spatial output map of (f_L(x) - f_L(x_adv)).
// x and x_adv are single images [c, h, w].
std::vector<double> per_kernel_distances(const Model& model, const Tensor& x,
                                         const Tensor& x_adv);

TargetingReport targeting_run(const Model& model,
                              const FragilityReport& report, const Batch& data,
                              const std::vector<double>& grid, bool clip,
                              bool verbose = false);

// percent_attacking_s deltas (defended minus original) at each grid point.
std::vector<double> compare_original_vs_defended(
    const TargetingReport& original, const TargetingReport& defended);

// CSV: epsilon, s_count, total, percent_attacking_s.
std::string targeting_to_csv(const TargetingReport& report);

}  // namespace fk
