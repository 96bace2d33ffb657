#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fk/nn.hpp"

namespace fk {

// One-at-a-time kernel dropout over the first convolutional layer. Kernels
// whose dropout pushes accuracy strictly below the mean of the per-kernel
// accuracies form the fragile set S; the rest (at or above the mean) are the
// null set S'.
struct FragilityReport {
  std::vector<double> per_kernel_accuracy;  // k entries
  double mean_line = 0.0;
  double baseline_accuracy = 0.0;
  std::vector<std::size_t> fragile;         // S, sorted ascending
  std::vector<std::size_t> null_set;        // S', sorted ascending
  std::string eval_dataset;
  std::size_t eval_subset_size = 0;
  std::uint64_t eval_seed = 0;

  std::size_t kernel_count() const { return per_kernel_accuracy.size(); }
};

// Splits accuracies about their mean; shared by the sweep and by tests that
// feed synthetic accuracy vectors.
FragilityReport partition_by_mean(const std::vector<double>& per_kernel_accuracy);

FragilityReport kernel_dropout_sweep(const Model& model, const Batch& eval_data);

// Kernels fragile in every report (same architecture).
std::vector<std::size_t> stability_across_checkpoints(
    const std::vector<FragilityReport>& reports);

// CSV with a two-line preamble carrying baseline_accuracy and mean_line,
// then kernel_index, dropped_accuracy, is_fragile rows.
std::string fragility_to_csv(const FragilityReport& report);
FragilityReport fragility_from_csv(const std::string& text);

}  // namespace fk
