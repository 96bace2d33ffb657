#include "fk/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "fk/errors.hpp"
#include "fk/rng.hpp"

namespace fk {

namespace {

double loss_only(const Model& model, const Batch& batch) {
  LossGrads lg = loss_and_param_grads(model, batch);
  return lg.loss;
}

}  // namespace

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

GradCheckResult check_param_gradients(const Model& model, const Batch& batch,
                                      double step) {
  LossGrads lg = loss_and_param_grads(model, batch);
  Model probe = model;
  GradCheckResult res;
  for (std::size_t li = 0; li < probe.params.size(); ++li) {
    for (std::size_t pi = 0; pi < probe.params[li].size(); ++pi) {
      Tensor& w = probe.params[li][pi];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double keep = w[i];
        w[i] = keep + step;
        const double up = loss_only(probe, batch);
        w[i] = keep - step;
        const double dn = loss_only(probe, batch);
        w[i] = keep;
        const double fd = (up - dn) / (2.0 * step);
        const double an = lg.grads[li][pi][i];
        res.max_rel_err = std::max(res.max_rel_err, relative_error(fd, an));
        ++res.checked;
      }
    }
  }
  return res;
}

GradCheckResult check_input_gradients(const Model& model, const Batch& batch,
                                      std::size_t sample_pixels,
                                      std::uint64_t pick_seed, double step) {
  Tensor analytic = input_gradient(model, batch);
  Batch probe = batch;
  const std::size_t total = probe.images.size();
  std::vector<std::size_t> picks;
  if (sample_pixels == 0 || sample_pixels >= total) {
    picks.resize(total);
    for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  } else {
    Rng rng(pick_seed);
    for (std::size_t i = 0; i < sample_pixels; ++i) {
      picks.push_back(static_cast<std::size_t>(rng.below(total)));
    }
  }
  GradCheckResult res;
  for (std::size_t i : picks) {
    const double keep = probe.images[i];
    probe.images[i] = keep + step;
    const double up = loss_only(model, probe);
    probe.images[i] = keep - step;
    const double dn = loss_only(model, probe);
    probe.images[i] = keep;
    const double fd = (up - dn) / (2.0 * step);
    res.max_rel_err =
        std::max(res.max_rel_err, relative_error(fd, analytic[i]));
    ++res.checked;
  }
  return res;
}

EigenSym eigen_symmetric(const std::vector<double>& a, std::size_t n) {
  if (a.size() != n * n) throw InvalidArgument("eigen_symmetric: bad size");
  std::vector<double> m = a;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += m[p * n + q] * m[p * n + q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (apq == 0.0) continue;
        const double app = m[p * n + p];
        const double aqq = m[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double mrp = m[r * n + p];
          const double mrq = m[r * n + q];
          m[r * n + p] = c * mrp - s * mrq;
          m[r * n + q] = s * mrp + c * mrq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double mpr = m[p * n + r];
          const double mqr = m[q * n + r];
          m[p * n + r] = c * mpr - s * mqr;
          m[q * n + r] = s * mpr + c * mqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v[r * n + p];
          const double vrq = v[r * n + q];
          v[r * n + p] = c * vrp - s * vrq;
          v[r * n + q] = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return m[x * n + x] > m[y * n + y];
  });

  EigenSym e;
  e.n = n;
  e.values.resize(n);
  e.vectors.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.values[j] = m[order[j] * n + order[j]];
    for (std::size_t r = 0; r < n; ++r) {
      e.vectors[r * n + j] = v[r * n + order[j]];
    }
  }
  return e;
}

namespace {

std::vector<double> gram_kkt(const KernelMatrix& k) {
  std::vector<double> g(k.rows * k.rows, 0.0);
  for (std::size_t i = 0; i < k.rows; ++i) {
    for (std::size_t j = i; j < k.rows; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < k.cols; ++c) s += k.at(i, c) * k.at(j, c);
      g[i * k.rows + j] = s;
      g[j * k.rows + i] = s;
    }
  }
  return g;
}

}  // namespace

KernelMatrix eckart_young_rank_approx(const KernelMatrix& k, std::size_t rank) {
  const EigenSym e = eigen_symmetric(gram_kkt(k), k.rows);
  // P = U_r U_r^T K with U_r the top eigenvectors of K K^T.
  std::vector<double> out(k.rows * k.cols, 0.0);
  const std::size_t r = std::min(rank, k.rows);
  for (std::size_t t = 0; t < r; ++t) {
    // row vector u^T K
    std::vector<double> utk(k.cols, 0.0);
    for (std::size_t i = 0; i < k.rows; ++i) {
      const double ui = e.vectors[i * k.rows + t];
      if (ui == 0.0) continue;
      for (std::size_t c = 0; c < k.cols; ++c) utk[c] += ui * k.at(i, c);
    }
    for (std::size_t i = 0; i < k.rows; ++i) {
      const double ui = e.vectors[i * k.rows + t];
      for (std::size_t c = 0; c < k.cols; ++c) {
        out[i * k.cols + c] += ui * utk[c];
      }
    }
  }
  return make_kernel_matrix(k.rows, k.cols, std::move(out), k.kernel_indices);
}

std::vector<double> singular_values_by_eigen(const KernelMatrix& k) {
  const EigenSym e = eigen_symmetric(gram_kkt(k), k.rows);
  std::vector<double> sv;
  sv.reserve(e.values.size());
  for (double lam : e.values) sv.push_back(std::sqrt(std::max(0.0, lam)));
  return sv;
}

KernelMatrix random_matrix(std::size_t rows, std::size_t cols,
                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = 2.0 * rng.uniform01() - 1.0;
  return make_kernel_matrix(rows, cols, std::move(data));
}

namespace {

Batch random_batch(Rng& rng, Shape3 s, std::size_t n, std::size_t classes) {
  Batch b;
  b.images = Tensor::zeros({n, s.c, s.h, s.w});
  for (std::size_t i = 0; i < b.images.size(); ++i) {
    b.images[i] = rng.uniform01();
  }
  b.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels[i] = static_cast<int>(rng.below(classes));
  }
  return b;
}

}  // namespace

std::size_t grad_case_kinds() { return 6; }

const char* grad_case_name(std::size_t kind_tag) {
  switch (kind_tag) {
    case 0: return "conv2d";
    case 1: return "conv2d_strided";
    case 2: return "maxpool2";
    case 3: return "dense";
    case 4: return "residual_block";
    case 5: return "full_stack";
  }
  return "?";
}

GradCase make_grad_case(std::size_t kind_tag, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t classes = 3;
  GradCase gc;
  switch (kind_tag % grad_case_kinds()) {
    case 0: {  // conv2d + relu, padded
      Shape3 in{1 + rng.below(2), 6, 6};
      gc.model = build_model({LayerSpec::conv(2, 3, 3, 1, 1),
                              LayerSpec::relu_(), LayerSpec::flatten_(),
                              LayerSpec::dense_(classes)},
                             in, classes, seed);
      gc.batch = random_batch(rng, in, 2, classes);
      break;
    }
    case 1: {  // strided, unpadded convolution
      Shape3 in{2, 7, 7};
      gc.model = build_model({LayerSpec::conv(2, 3, 3, 2, 0),
                              LayerSpec::relu_(), LayerSpec::flatten_(),
                              LayerSpec::dense_(classes)},
                             in, classes, seed);
      gc.batch = random_batch(rng, in, 2, classes);
      break;
    }
    case 2: {  // maxpool behind a conv
      Shape3 in{1, 8, 8};
      gc.model = build_model({LayerSpec::conv(2, 3, 3, 1, 1),
                              LayerSpec::maxpool(), LayerSpec::flatten_(),
                              LayerSpec::dense_(classes)},
                             in, classes, seed);
      gc.batch = random_batch(rng, in, 2, classes);
      break;
    }
    case 3: {  // dense head only (conv kept minimal)
      Shape3 in{1, 4, 4};
      gc.model = build_model({LayerSpec::conv(1, 1, 1, 1, 0),
                              LayerSpec::flatten_(), LayerSpec::dense_(5),
                              LayerSpec::relu_(), LayerSpec::dense_(classes)},
                             in, classes, seed);
      gc.batch = random_batch(rng, in, 3, classes);
      break;
    }
    case 4: {  // residual block
      Shape3 in{1, 5, 5};
      gc.model = build_model({LayerSpec::conv(2, 3, 3, 1, 1),
                              LayerSpec::residual(), LayerSpec::flatten_(),
                              LayerSpec::dense_(classes)},
                             in, classes, seed);
      gc.batch = random_batch(rng, in, 2, classes);
      break;
    }
    default: {  // the full MiniConvNet vocabulary at toy scale
      Shape3 in{1, 8, 8};
      gc.model = build_model(
          {LayerSpec::conv(2, 3, 3, 1, 1), LayerSpec::relu_(),
           LayerSpec::maxpool(), LayerSpec::conv(3, 3, 3, 1, 1),
           LayerSpec::relu_(), LayerSpec::residual(), LayerSpec::maxpool(),
           LayerSpec::flatten_(), LayerSpec::dense_(classes)},
          in, classes, seed);
      gc.batch = random_batch(rng, in, 2, classes);
      break;
    }
  }
  return gc;
}

}  // namespace fk
