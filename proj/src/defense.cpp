#include "fk/defense.hpp"

#include <algorithm>

#include "fk/errors.hpp"
#include "fk/fgsm.hpp"

namespace fk {

namespace {

std::size_t flattened_kernel_length(const Model& model) {
  const Tensor& w = model.params[model.first_conv_index][0];
  return w.dim(1) * w.dim(2) * w.dim(3);  // in_channels * kh * kw
}

}  // namespace

KernelMatrix stack_kernels(const Model& model,
                           const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw EmptySet("stack_kernels: no kernel indices");
  const std::size_t k = model.first_conv_kernels();
  const Tensor& w = model.params[model.first_conv_index][0];
  const std::size_t n = flattened_kernel_length(model);
  std::vector<double> data;
  data.reserve(indices.size() * n);
  for (std::size_t idx : indices) {
    if (idx >= k) {
      throw InvalidIndex("kernel index " + std::to_string(idx) +
                         " out of range for layer with " + std::to_string(k) +
                         " kernels");
    }
    const double* row = w.data() + idx * n;
    data.insert(data.end(), row, row + n);
  }
  return make_kernel_matrix(indices.size(), n, std::move(data), indices);
}

void unstack_kernels(Model& model, const KernelMatrix& k) {
  Tensor& w = model.params[model.first_conv_index][0];
  const std::size_t n = flattened_kernel_length(model);
  if (k.cols != n) throw ShapeError("unstack_kernels: row length mismatch");
  for (std::size_t r = 0; r < k.rows; ++r) {
    const std::size_t idx = k.kernel_indices[r];
    if (idx >= model.first_conv_kernels()) {
      throw InvalidIndex("unstack_kernels: kernel index out of range");
    }
    std::copy(k.data.begin() + r * n, k.data.begin() + (r + 1) * n,
              w.data() + idx * n);
  }
}

FilterResult filter_null_kernels(const Model& model,
                                 const std::vector<std::size_t>& null_set,
                                 const DefenseConfig& config) {
  KernelMatrix k = stack_kernels(model, null_set);

  // The threshold constants are calibrated for aspect ratios <= 1, so tau is
  // always computed on the (min, max) orientation; the SVD itself is
  // orientation-free.
  const std::size_t mm = std::min(k.rows, k.cols);
  const std::size_t nn = std::max(k.rows, k.cols);
  const double tau = threshold_tau(mm, nn, config.noise_level);

  SvdFactors f = svd(k);
  const std::vector<double> sigma_mod =
      apply_threshold(f.sigma, tau, config.threshold_mode);

  FilterResult out;
  for (std::size_t i = 0; i < f.sigma.size(); ++i) {
    if (sigma_mod[i] != f.sigma[i]) out.removed_sigma.push_back(f.sigma[i]);
  }
  if (out.removed_sigma.empty()) {
    out.k_tilde = std::move(k);  // untouched spectrum: keep the exact bits
  } else {
    out.k_tilde = reconstruct(f, sigma_mod, k.kernel_indices);
  }
  return out;
}

double amplification_factor(const KernelMatrix& k, const KernelMatrix& k_tilde,
                            NormKind norm_kind) {
  if (k.rows != k_tilde.rows || k.cols != k_tilde.cols) {
    throw InvalidArgument("amplification_factor: shape mismatch");
  }
  KernelMatrix diff = k;
  for (std::size_t i = 0; i < diff.data.size(); ++i) {
    diff.data[i] -= k_tilde.data[i];
  }
  const double norm = norm_kind == NormKind::spectral ? spectral_norm(diff)
                                                      : frobenius_norm(diff);
  return 1.0 + norm;
}

DefenseOutcome apply_defense(const Model& model, const FragilityReport& report,
                             const DefenseConfig& config) {
  if (report.kernel_count() != model.first_conv_kernels()) {
    throw IncompatibleReports(
        "fragility report kernel count does not match the model");
  }
  if (report.fragile.empty()) {
    throw EmptyFragileSet("defense undefined with an empty fragile set");
  }
  if (report.null_set.empty()) {
    throw EmptyNullSet("defense undefined with an empty null set");
  }
  if (config.noise_level < 0.0) {
    throw InvalidArgument("defense noise_level must be >= 0");
  }

  KernelMatrix k = stack_kernels(model, report.null_set);
  FilterResult filtered = filter_null_kernels(model, report.null_set, config);
  const double alpha =
      amplification_factor(k, filtered.k_tilde, config.norm_kind);

  DefenseOutcome out;
  out.alpha = alpha;
  out.removed_sigma = filtered.removed_sigma;
  out.fragile = report.fragile;
  out.null_set = report.null_set;
  out.config = config;

  Model defended = model;
  unstack_kernels(defended, filtered.k_tilde);
  Tensor& w = defended.params[defended.first_conv_index][0];
  const std::size_t n = w.dim(1) * w.dim(2) * w.dim(3);
  for (std::size_t idx : report.fragile) {
    double* row = w.data() + idx * n;
    for (std::size_t i = 0; i < n; ++i) row[i] *= alpha;
  }
  out.modified_model = std::move(defended);
  return out;
}

double search_noise_level(const Model& model, const FragilityReport& report,
                          const std::vector<double>& grid,
                          const Batch& val_data, double attack_eps) {
  if (grid.empty()) throw EmptyGrid("search_noise_level: empty grid");
  double best_level = 0.0;
  double best_acc = -1.0;
  bool first = true;
  for (double level : grid) {
    DefenseConfig cfg;
    cfg.noise_level = level;
    DefenseOutcome outcome = apply_defense(model, report, cfg);
    Batch attacked;
    attacked.images =
        fgsm_perturb(outcome.modified_model, val_data, attack_eps, true);
    attacked.labels = val_data.labels;
    const double acc = evaluate_accuracy(outcome.modified_model, attacked);
    if (first || acc > best_acc || (acc == best_acc && level < best_level)) {
      best_acc = acc;
      best_level = level;
      first = false;
    }
  }
  return best_level;
}

}  // namespace fk
