#include "fk/fgsm.hpp"

#include <algorithm>

#include "fk/errors.hpp"

namespace fk {

namespace {

// Batched so a big evaluation set does not hold all gradients at once.
constexpr std::size_t kChunk = 200;

}  // namespace

Tensor fgsm_perturb(const Model& model, const Batch& batch, double epsilon,
                    bool clip) {
  if (epsilon < 0.0) throw InvalidArgument("fgsm_perturb: epsilon must be >= 0");
  if (batch.count() == 0) throw EmptyData("fgsm_perturb: empty batch");

  Tensor adv = batch.images;
  const std::size_t n = batch.count();
  const std::size_t per = adv.size() / n;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t stop = std::min(n, start + kChunk);
    idx.resize(stop - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Batch part = gather(batch, idx);
    Tensor grad = input_gradient(model, part);
    double* out = adv.data() + start * per;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double g = grad[i];
      if (g > 0.0) {
        out[i] += epsilon;
      } else if (g < 0.0) {
        out[i] -= epsilon;
      }
      if (clip) out[i] = std::clamp(out[i], 0.0, 1.0);
    }
  }
  return adv;
}

std::vector<SweepPoint> attack_sweep(const Model& model, const Batch& data,
                                     const std::vector<double>& grid,
                                     bool clip) {
  if (grid.empty()) throw InvalidArgument("attack_sweep: empty epsilon grid");
  if (data.count() == 0) throw EmptyData("attack_sweep: empty dataset");
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  for (double eps : grid) {
    Batch attacked;
    attacked.images = fgsm_perturb(model, data, eps, clip);
    attacked.labels = data.labels;
    out.push_back({eps, evaluate_accuracy(model, attacked)});
  }
  return out;
}

}  // namespace fk
