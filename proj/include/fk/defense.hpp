#pragma once

#include <vector>

#include "fk/fragility.hpp"
#include "fk/nn.hpp"
#include "fk/svd.hpp"

namespace fk {

enum class NormKind { spectral, frobenius };

struct DefenseConfig {
  double noise_level = 0.0;  // the matrix-noise scale feeding the threshold
  ThresholdMode threshold_mode = ThresholdMode::truncate;
  NormKind norm_kind = NormKind::spectral;
  std::vector<double> search_grid;  // optional systematic search
};

struct DefenseOutcome {
  double alpha = 1.0;
  std::vector<double> removed_sigma;  // singular values zeroed or capped
  Model modified_model;
  std::vector<std::size_t> fragile;   // provenance
  std::vector<std::size_t> null_set;
  DefenseConfig config;
};

// Rows are the row-major flattened kernel weights of layer L at the given
// kernel indices; biases are excluded.
KernelMatrix stack_kernels(const Model& model,
                           const std::vector<std::size_t>& indices);

// Writes matrix rows back into the layer-L kernels named by kernel_indices.
void unstack_kernels(Model& model, const KernelMatrix& k);

struct FilterResult {
  KernelMatrix k_tilde;
  std::vector<double> removed_sigma;
};

// SVD hard-threshold filtering of the stacked null kernels. When the
// threshold leaves every singular value untouched the input matrix is
// returned bit-for-bit.
FilterResult filter_null_kernels(const Model& model,
                                 const std::vector<std::size_t>& null_set,
                                 const DefenseConfig& config);

// alpha = 1 + ||K - K_tilde|| under the configured norm.
double amplification_factor(const KernelMatrix& k, const KernelMatrix& k_tilde,
                            NormKind norm_kind);

// Full defense: replace null-kernel weights with the filtered rows, scale
// fragile-kernel weights by alpha. Only layer-L kernel weights change.
DefenseOutcome apply_defense(const Model& model, const FragilityReport& report,
                             const DefenseConfig& config);

// Grid value whose defended model has the best accuracy under FGSM at
// attack_eps on val_data; accuracy ties go to the smaller noise level.
double search_noise_level(const Model& model, const FragilityReport& report,
                          const std::vector<double>& grid,
                          const Batch& val_data, double attack_eps);

}  // namespace fk
