#include "fk/targeting.hpp"

#include <cmath>

#include "fk/csvio.hpp"
#include "fk/errors.hpp"
#include "fk/fgsm.hpp"

namespace fk {

namespace {

// Distances for a whole batch at once: one row of k entries per example.
std::vector<std::vector<double>> batched_distances(const Model& model,
                                                   const Tensor& x,
                                                   const Tensor& x_adv) {
  if (!x.same_shape(x_adv)) {
    throw ShapeError("per_kernel_distances: inputs differ in shape");
  }
  const auto [logits_a, map_a] = forward(model, x);
  const auto [logits_b, map_b] = forward(model, x_adv);
  (void)logits_a;
  (void)logits_b;
  const std::size_t n = map_a.dim(0);
  const std::size_t k = map_a.dim(1);
  const std::size_t spatial = map_a.dim(2) * map_a.dim(3);
  std::vector<std::vector<double>> out(n, std::vector<double>(k, 0.0));
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t j = 0; j < k; ++j) {
      const double* pa = map_a.data() + (e * k + j) * spatial;
      const double* pb = map_b.data() + (e * k + j) * spatial;
      double s = 0.0;
      for (std::size_t i = 0; i < spatial; ++i) {
        const double d = pa[i] - pb[i];
        s += d * d;
      }
      out[e][j] = std::sqrt(s);
    }
  }
  return out;
}

double mean_over(const std::vector<double>& d,
                 const std::vector<std::size_t>& indices) {
  double s = 0.0;
  for (std::size_t i : indices) s += d[i];
  return s / static_cast<double>(indices.size());
}

}  // namespace

std::vector<double> per_kernel_distances(const Model& model, const Tensor& x,
                                         const Tensor& x_adv) {
  if (!x.same_shape(x_adv)) {
    throw ShapeError("per_kernel_distances: inputs differ in shape");
  }
  Tensor xb = x;
  Tensor ab = x_adv;
  if (x.rank() == 3) {
    xb = x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
    ab = x_adv.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
  }
  return batched_distances(model, xb, ab).front();
}

TargetingReport targeting_run(const Model& model,
                              const FragilityReport& report, const Batch& data,
                              const std::vector<double>& grid, bool clip,
                              bool verbose) {
  if (report.fragile.empty()) {
    throw EmptyFragileSet("targeting needs a nonempty fragile set");
  }
  if (report.null_set.empty()) {
    throw EmptyNullSet("targeting needs a nonempty null set");
  }
  if (grid.empty()) throw InvalidArgument("targeting: empty epsilon grid");
  if (data.count() == 0) throw EmptyData("targeting: empty dataset");
  if (report.kernel_count() != model.first_conv_kernels()) {
    throw IncompatibleReports("fragility report does not match the model");
  }

  TargetingReport out;
  const std::size_t total = data.count();
  constexpr std::size_t kChunk = 200;
  for (double eps : grid) {
    std::size_t s_count = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < total; start += kChunk) {
      const std::size_t stop = std::min(total, start + kChunk);
      idx.resize(stop - start);
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
      Batch part = gather(data, idx);
      Tensor adv = fgsm_perturb(model, part, eps, clip);
      const auto dists = batched_distances(model, part.images, adv);
      for (const auto& d : dists) {
        const double s_f = mean_over(d, report.fragile);
        const double s_n = mean_over(d, report.null_set);
        if (s_f > s_n) ++s_count;
        if (verbose) out.detail.push_back({eps, s_f, s_n});
      }
    }
    TargetingRow row;
    row.epsilon = eps;
    row.s_count = s_count;
    row.total_examples = total;
    row.percent_attacking_s =
        100.0 * static_cast<double>(s_count) / static_cast<double>(total);
    out.rows.push_back(row);
  }
  return out;
}

std::vector<double> compare_original_vs_defended(
    const TargetingReport& original, const TargetingReport& defended) {
  if (original.rows.size() != defended.rows.size()) {
    throw IncompatibleReports("targeting reports have different grids");
  }
  std::vector<double> deltas;
  deltas.reserve(original.rows.size());
  for (std::size_t i = 0; i < original.rows.size(); ++i) {
    if (original.rows[i].epsilon != defended.rows[i].epsilon) {
      throw IncompatibleReports("targeting reports have different grids");
    }
    deltas.push_back(defended.rows[i].percent_attacking_s -
                     original.rows[i].percent_attacking_s);
  }
  return deltas;
}

std::string targeting_to_csv(const TargetingReport& report) {
  std::string out = "epsilon,s_count,total,percent_attacking_s\n";
  for (const TargetingRow& r : report.rows) {
    out += format_double(r.epsilon) + "," + format_size(r.s_count) + "," +
           format_size(r.total_examples) + "," +
           format_double(r.percent_attacking_s) + "\n";
  }
  return out;
}

}  // namespace fk
