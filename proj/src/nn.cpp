#include "fk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "fk/errors.hpp"

namespace fk {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::residual_block: return "residual_block";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

LayerSpec LayerSpec::conv(std::size_t out_channels, std::size_t kh,
                          std::size_t kw, std::size_t stride,
                          std::size_t pad) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.out_channels = out_channels;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.stride = stride;
  l.pad = pad;
  return l;
}
LayerSpec LayerSpec::relu_() { return LayerSpec{LayerKind::relu}; }
LayerSpec LayerSpec::maxpool() { return LayerSpec{LayerKind::maxpool2}; }
LayerSpec LayerSpec::residual() { return LayerSpec{LayerKind::residual_block}; }
LayerSpec LayerSpec::flatten_() { return LayerSpec{LayerKind::flatten}; }
LayerSpec LayerSpec::dense_(std::size_t out_width) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.out_width = out_width;
  return l;
}

namespace {

// ---------------------------------------------------------------------------
// Shape flow
// ---------------------------------------------------------------------------

struct FlowState {
  bool spatial = true;
  Shape3 s;
  std::size_t width = 0;
};

std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride,
                         std::size_t pad) {
  if (in + 2 * pad < k) throw ShapeError("conv kernel larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

FlowState layer_output_state(const LayerSpec& l, const FlowState& in,
                             std::size_t layer_index) {
  const std::string where =
      std::string(layer_kind_name(l.kind)) + " at layer " +
      std::to_string(layer_index);
  FlowState out = in;
  switch (l.kind) {
    case LayerKind::conv2d: {
      if (!in.spatial) throw ShapeError(where + ": needs spatial input");
      if (l.out_channels == 0 || l.kernel_h == 0 || l.kernel_w == 0 ||
          l.stride == 0) {
        throw ShapeError(where + ": bad hyperparameters");
      }
      out.s.c = l.out_channels;
      out.s.h = conv_out_dim(in.s.h, l.kernel_h, l.stride, l.pad);
      out.s.w = conv_out_dim(in.s.w, l.kernel_w, l.stride, l.pad);
      return out;
    }
    case LayerKind::relu:
      return out;
    case LayerKind::maxpool2:
      if (!in.spatial) throw ShapeError(where + ": needs spatial input");
      if (in.s.h < 2 || in.s.w < 2) throw ShapeError(where + ": input too small");
      out.s.h = in.s.h / 2;
      out.s.w = in.s.w / 2;
      return out;
    case LayerKind::residual_block:
      if (!in.spatial) throw ShapeError(where + ": needs spatial input");
      return out;  // 3x3 pad 1 stride 1 twice keeps the shape
    case LayerKind::flatten:
      if (!in.spatial) throw ShapeError(where + ": input already flat");
      out.spatial = false;
      out.width = in.s.c * in.s.h * in.s.w;
      return out;
    case LayerKind::dense:
      if (in.spatial) throw ShapeError(where + ": needs flattened input");
      if (l.out_width == 0) throw ShapeError(where + ": zero output width");
      out.width = l.out_width;
      return out;
  }
  throw ShapeError(where + ": unknown layer kind");
}

std::vector<FlowState> flow_states(const std::vector<LayerSpec>& layers,
                                   Shape3 input_shape) {
  std::vector<FlowState> states;
  states.reserve(layers.size() + 1);
  states.push_back(FlowState{true, input_shape, 0});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    states.push_back(layer_output_state(layers[i], states.back(), i));
  }
  return states;
}

// ---------------------------------------------------------------------------
// Layer primitives. All gradient outputs accumulate (+=) into caller-zeroed
// buffers and every pointer target may be null to skip that piece.
// ---------------------------------------------------------------------------

void conv2d_forward(const double* x, std::size_t n_images, std::size_t c_in,
                    std::size_t h, std::size_t w, const double* weight,
                    const double* bias, std::size_t oc, std::size_t kh,
                    std::size_t kw, std::size_t stride, std::size_t pad,
                    double* y, std::size_t oh, std::size_t ow,
                    const std::uint8_t* mask) {
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  const std::ptrdiff_t OH = static_cast<std::ptrdiff_t>(oh);
  const std::ptrdiff_t OW = static_cast<std::ptrdiff_t>(ow);
  const std::ptrdiff_t S = static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(pad);
  std::fill(y, y + n_images * oc * oh * ow, 0.0);
  for (std::size_t n = 0; n < n_images; ++n) {
    for (std::size_t o = 0; o < oc; ++o) {
      if (mask && !mask[o]) continue;  // masked kernel: output map stays zero
      double* yp = y + ((n * oc + o) * oh) * ow;
      std::fill(yp, yp + oh * ow, bias[o]);
      for (std::size_t c = 0; c < c_in; ++c) {
        const double* xc = x + ((n * c_in + c) * h) * w;
        for (std::size_t u = 0; u < kh; ++u) {
          const std::ptrdiff_t pu = P - static_cast<std::ptrdiff_t>(u);
          const std::ptrdiff_t oh_lo = pu > 0 ? (pu + S - 1) / S : 0;
          const std::ptrdiff_t top = H - 1 - static_cast<std::ptrdiff_t>(u) + P;
          if (top < 0) continue;
          const std::ptrdiff_t oh_hi = std::min(OH, top / S + 1);
          for (std::size_t v = 0; v < kw; ++v) {
            const double wv = weight[((o * c_in + c) * kh + u) * kw + v];
            const std::ptrdiff_t pv = P - static_cast<std::ptrdiff_t>(v);
            const std::ptrdiff_t ow_lo = pv > 0 ? (pv + S - 1) / S : 0;
            const std::ptrdiff_t side =
                W - 1 - static_cast<std::ptrdiff_t>(v) + P;
            if (side < 0) continue;
            const std::ptrdiff_t ow_hi = std::min(OW, side / S + 1);
            const std::ptrdiff_t voff = static_cast<std::ptrdiff_t>(v) - P;
            for (std::ptrdiff_t i = oh_lo; i < oh_hi; ++i) {
              const double* xrow = xc + (i * S + u - pad) * w;
              double* yrow = yp + i * ow;
              if (S == 1) {
                const double* xs = xrow + voff;
                for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                  yrow[j] += wv * xs[j];
                }
              } else {
                for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                  yrow[j] += wv * xrow[j * S + voff];
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const double* x, const double* weight, const double* g,
                     std::size_t n_images, std::size_t c_in, std::size_t h,
                     std::size_t w, std::size_t oc, std::size_t kh,
                     std::size_t kw, std::size_t stride, std::size_t pad,
                     std::size_t oh, std::size_t ow, double* dweight,
                     double* dbias, double* dx, const std::uint8_t* mask) {
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(w);
  const std::ptrdiff_t OH = static_cast<std::ptrdiff_t>(oh);
  const std::ptrdiff_t OW = static_cast<std::ptrdiff_t>(ow);
  const std::ptrdiff_t S = static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t P = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t n = 0; n < n_images; ++n) {
    for (std::size_t o = 0; o < oc; ++o) {
      const double* gp = g + ((n * oc + o) * oh) * ow;
      if (dbias) {
        double acc = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) acc += gp[i];
        dbias[o] += acc;
      }
      // Gradients w.r.t. a masked kernel's own weights mirror the
      // zero-weight model; only the flow into dx is cut off.
      const bool flows = !mask || mask[o];
      for (std::size_t c = 0; c < c_in; ++c) {
        const double* xc = x + ((n * c_in + c) * h) * w;
        double* dxc = dx ? dx + ((n * c_in + c) * h) * w : nullptr;
        for (std::size_t u = 0; u < kh; ++u) {
          const std::ptrdiff_t pu = P - static_cast<std::ptrdiff_t>(u);
          const std::ptrdiff_t oh_lo = pu > 0 ? (pu + S - 1) / S : 0;
          const std::ptrdiff_t top = H - 1 - static_cast<std::ptrdiff_t>(u) + P;
          if (top < 0) continue;
          const std::ptrdiff_t oh_hi = std::min(OH, top / S + 1);
          for (std::size_t v = 0; v < kw; ++v) {
            const std::ptrdiff_t pv = P - static_cast<std::ptrdiff_t>(v);
            const std::ptrdiff_t ow_lo = pv > 0 ? (pv + S - 1) / S : 0;
            const std::ptrdiff_t side =
                W - 1 - static_cast<std::ptrdiff_t>(v) + P;
            if (side < 0) continue;
            const std::ptrdiff_t ow_hi = std::min(OW, side / S + 1);
            const std::ptrdiff_t voff = static_cast<std::ptrdiff_t>(v) - P;
            if (dweight) {
              double acc = 0.0;
              for (std::ptrdiff_t i = oh_lo; i < oh_hi; ++i) {
                const double* xrow = xc + (i * S + u - pad) * w;
                const double* grow = gp + i * ow;
                if (S == 1) {
                  const double* xs = xrow + voff;
                  for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                    acc += grow[j] * xs[j];
                  }
                } else {
                  for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                    acc += grow[j] * xrow[j * S + voff];
                  }
                }
              }
              dweight[((o * c_in + c) * kh + u) * kw + v] += acc;
            }
            if (dxc && flows) {
              const double wv = weight[((o * c_in + c) * kh + u) * kw + v];
              if (wv != 0.0) {
                for (std::ptrdiff_t i = oh_lo; i < oh_hi; ++i) {
                  double* dxrow = dxc + (i * S + u - pad) * w;
                  const double* grow = gp + i * ow;
                  if (S == 1) {
                    double* dxs = dxrow + voff;
                    for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                      dxs[j] += wv * grow[j];
                    }
                  } else {
                    for (std::ptrdiff_t j = ow_lo; j < ow_hi; ++j) {
                      dxrow[j * S + voff] += wv * grow[j];
                    }
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

void relu_forward(const double* x, std::size_t n, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* g, std::size_t n,
                   double* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void maxpool2_forward(const double* x, std::size_t planes, std::size_t h,
                      std::size_t w, double* y) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* xp = x + p * h * w;
    double* yp = y + p * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double* win = xp + (2 * i) * w + 2 * j;
        double m = win[0];
        if (win[1] > m) m = win[1];
        if (win[w] > m) m = win[w];
        if (win[w + 1] > m) m = win[w + 1];
        yp[i * ow + j] = m;
      }
    }
  }
}

// Ties route the gradient to the first maximum in row-major window order.
void maxpool2_backward(const double* x, const double* g, std::size_t planes,
                       std::size_t h, std::size_t w, double* dx) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* xp = x + p * h * w;
    const double* gp = g + p * oh * ow;
    double* dxp = dx + p * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t base = (2 * i) * w + 2 * j;
        const std::size_t idx[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t arg = idx[0];
        double m = xp[idx[0]];
        for (int t = 1; t < 4; ++t) {
          if (xp[idx[t]] > m) {
            m = xp[idx[t]];
            arg = idx[t];
          }
        }
        dxp[arg] += gp[i * ow + j];
      }
    }
  }
}

void dense_forward(const double* x, std::size_t n_rows, std::size_t in_w,
                   const double* weight, const double* bias, std::size_t out_w,
                   double* y) {
  for (std::size_t n = 0; n < n_rows; ++n) {
    const double* xr = x + n * in_w;
    double* yr = y + n * out_w;
    for (std::size_t o = 0; o < out_w; ++o) {
      const double* wr = weight + o * in_w;
      double acc = bias[o];
      for (std::size_t i = 0; i < in_w; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
}

void dense_backward(const double* x, const double* weight, const double* g,
                    std::size_t n_rows, std::size_t in_w, std::size_t out_w,
                    double* dweight, double* dbias, double* dx) {
  for (std::size_t n = 0; n < n_rows; ++n) {
    const double* xr = x + n * in_w;
    const double* gr = g + n * out_w;
    double* dxr = dx ? dx + n * in_w : nullptr;
    for (std::size_t o = 0; o < out_w; ++o) {
      const double go = gr[o];
      if (dbias) dbias[o] += go;
      if (dweight && go != 0.0) {
        double* dwr = dweight + o * in_w;
        for (std::size_t i = 0; i < in_w; ++i) dwr[i] += go * xr[i];
      }
      if (dxr && go != 0.0) {
        const double* wr = weight + o * in_w;
        for (std::size_t i = 0; i < in_w; ++i) dxr[i] += go * wr[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Forward/backward over the layer graph
// ---------------------------------------------------------------------------

struct Cache {
  std::vector<Tensor> acts;              // acts[i] = input of layer i
  std::vector<std::vector<Tensor>> aux;  // residual internals {t1, r1, pre}
};

std::vector<std::size_t> act_shape(const FlowState& st, std::size_t n) {
  if (st.spatial) return {n, st.s.c, st.s.h, st.s.w};
  return {n, st.width};
}

void check_images_shape(const Model& model, const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != model.input_shape.c ||
      images.dim(2) != model.input_shape.h ||
      images.dim(3) != model.input_shape.w) {
    throw ShapeError("images do not match the model input shape");
  }
}

const std::uint8_t* layer_mask(const Model& model, std::size_t layer) {
  if (layer != model.first_conv_index || model.kernel_mask.empty()) {
    return nullptr;
  }
  bool all = true;
  for (std::uint8_t m : model.kernel_mask) {
    if (!m) {
      all = false;
      break;
    }
  }
  return all ? nullptr : model.kernel_mask.data();
}

void residual_forward(const LayerSpec&, const std::vector<Tensor>& params,
                      const Tensor& x, Shape3 s, std::size_t n, Tensor* t1,
                      Tensor* r1, Tensor* pre, Tensor* y) {
  const std::size_t c = s.c;
  *t1 = Tensor::zeros({n, c, s.h, s.w});
  conv2d_forward(x.data(), n, c, s.h, s.w, params[0].data(), params[1].data(),
                 c, 3, 3, 1, 1, t1->data(), s.h, s.w, nullptr);
  *r1 = Tensor::zeros({n, c, s.h, s.w});
  relu_forward(t1->data(), t1->size(), r1->data());
  *pre = Tensor::zeros({n, c, s.h, s.w});
  conv2d_forward(r1->data(), n, c, s.h, s.w, params[2].data(),
                 params[3].data(), c, 3, 3, 1, 1, pre->data(), s.h, s.w,
                 nullptr);
  for (std::size_t i = 0; i < pre->size(); ++i) (*pre)[i] += x[i];
  *y = Tensor::zeros({n, c, s.h, s.w});
  relu_forward(pre->data(), pre->size(), y->data());
}

Cache run_forward(const Model& model, const Tensor& images) {
  check_images_shape(model, images);
  const std::size_t n = images.dim(0);
  const auto states = flow_states(model.layers, model.input_shape);

  Cache cache;
  cache.acts.reserve(model.layers.size() + 1);
  cache.acts.push_back(images);
  cache.aux.resize(model.layers.size());

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const LayerSpec& l = model.layers[li];
    const FlowState& in = states[li];
    const FlowState& out = states[li + 1];
    const Tensor& x = cache.acts.back();
    Tensor y;
    switch (l.kind) {
      case LayerKind::conv2d: {
        y = Tensor::zeros(act_shape(out, n));
        conv2d_forward(x.data(), n, in.s.c, in.s.h, in.s.w,
                       model.params[li][0].data(), model.params[li][1].data(),
                       l.out_channels, l.kernel_h, l.kernel_w, l.stride, l.pad,
                       y.data(), out.s.h, out.s.w, layer_mask(model, li));
        break;
      }
      case LayerKind::relu: {
        y = Tensor::zeros(act_shape(out, n));
        relu_forward(x.data(), x.size(), y.data());
        break;
      }
      case LayerKind::maxpool2: {
        y = Tensor::zeros(act_shape(out, n));
        maxpool2_forward(x.data(), n * in.s.c, in.s.h, in.s.w, y.data());
        break;
      }
      case LayerKind::residual_block: {
        Tensor t1, r1, pre;
        residual_forward(l, model.params[li], x, in.s, n, &t1, &r1, &pre, &y);
        cache.aux[li] = {std::move(t1), std::move(r1), std::move(pre)};
        break;
      }
      case LayerKind::flatten: {
        y = x.reshaped(act_shape(out, n));
        break;
      }
      case LayerKind::dense: {
        y = Tensor::zeros(act_shape(out, n));
        dense_forward(x.data(), n, in.width, model.params[li][0].data(),
                      model.params[li][1].data(), l.out_width, y.data());
        break;
      }
    }
    cache.acts.push_back(std::move(y));
  }
  return cache;
}

// dlogits -> gradients. Either output may be null.
void run_backward(const Model& model, const Cache& cache,
                  const Tensor& dlogits,
                  std::vector<std::vector<Tensor>>* param_grads,
                  Tensor* input_grad) {
  const std::size_t n = cache.acts.front().dim(0);
  const auto states = flow_states(model.layers, model.input_shape);

  Tensor g = dlogits;
  for (std::size_t ri = model.layers.size(); ri-- > 0;) {
    const LayerSpec& l = model.layers[ri];
    const FlowState& in = states[ri];
    const Tensor& x = cache.acts[ri];
    const bool need_dx = ri > 0 || input_grad != nullptr;
    Tensor dx;
    if (need_dx && l.kind != LayerKind::flatten) {
      dx = Tensor::zeros(act_shape(in, n));
    }
    switch (l.kind) {
      case LayerKind::conv2d: {
        const FlowState& out = states[ri + 1];
        double* dw = nullptr;
        double* db = nullptr;
        if (param_grads) {
          dw = (*param_grads)[ri][0].data();
          db = (*param_grads)[ri][1].data();
        }
        conv2d_backward(x.data(), model.params[ri][0].data(), g.data(), n,
                        in.s.c, in.s.h, in.s.w, l.out_channels, l.kernel_h,
                        l.kernel_w, l.stride, l.pad, out.s.h, out.s.w, dw, db,
                        need_dx ? dx.data() : nullptr, layer_mask(model, ri));
        break;
      }
      case LayerKind::relu: {
        if (need_dx) relu_backward(x.data(), g.data(), x.size(), dx.data());
        break;
      }
      case LayerKind::maxpool2: {
        if (need_dx) {
          maxpool2_backward(x.data(), g.data(), n * in.s.c, in.s.h, in.s.w,
                            dx.data());
        }
        break;
      }
      case LayerKind::residual_block: {
        const Tensor& t1 = cache.aux[ri][0];
        const Tensor& r1 = cache.aux[ri][1];
        const Tensor& pre = cache.aux[ri][2];
        Tensor dpre = Tensor::zeros(act_shape(in, n));
        relu_backward(pre.data(), g.data(), pre.size(), dpre.data());
        double* dw2 = nullptr;
        double* db2 = nullptr;
        double* dw1 = nullptr;
        double* db1 = nullptr;
        if (param_grads) {
          dw1 = (*param_grads)[ri][0].data();
          db1 = (*param_grads)[ri][1].data();
          dw2 = (*param_grads)[ri][2].data();
          db2 = (*param_grads)[ri][3].data();
        }
        Tensor dr1 = Tensor::zeros(act_shape(in, n));
        conv2d_backward(r1.data(), model.params[ri][2].data(), dpre.data(), n,
                        in.s.c, in.s.h, in.s.w, in.s.c, 3, 3, 1, 1, in.s.h,
                        in.s.w, dw2, db2, dr1.data(), nullptr);
        Tensor dt1 = Tensor::zeros(act_shape(in, n));
        relu_backward(t1.data(), dr1.data(), t1.size(), dt1.data());
        if (need_dx || param_grads) {
          conv2d_backward(x.data(), model.params[ri][0].data(), dt1.data(), n,
                          in.s.c, in.s.h, in.s.w, in.s.c, 3, 3, 1, 1, in.s.h,
                          in.s.w, dw1, db1, need_dx ? dx.data() : nullptr,
                          nullptr);
        }
        if (need_dx) {
          // skip connection
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dpre[i];
        }
        break;
      }
      case LayerKind::flatten: {
        if (need_dx) dx = g.reshaped(act_shape(in, n));
        break;
      }
      case LayerKind::dense: {
        double* dw = nullptr;
        double* db = nullptr;
        if (param_grads) {
          dw = (*param_grads)[ri][0].data();
          db = (*param_grads)[ri][1].data();
        }
        dense_backward(x.data(), model.params[ri][0].data(), g.data(), n,
                       in.width, l.out_width, dw, db,
                       need_dx ? dx.data() : nullptr);
        break;
      }
    }
    if (!need_dx) break;
    g = std::move(dx);
  }
  if (input_grad) *input_grad = std::move(g);
}

// Mean cross-entropy over the rows; optionally d(loss)/d(logits).
double softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                  Tensor* dlogits) {
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  if (dlogits) *dlogits = Tensor::zeros({n, k});
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* lr = logits.data() + r * k;
    double mx = lr[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, lr[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(lr[j] - mx);
    const double lse = mx + std::log(sum);
    const int y = labels[r];
    total += lse - lr[static_cast<std::size_t>(y)];
    if (dlogits) {
      double* dr = dlogits->data() + r * k;
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < k; ++j) {
        dr[j] = std::exp(lr[j] - lse) * inv_n;
      }
      dr[static_cast<std::size_t>(y)] -= inv_n;
    }
  }
  return total / static_cast<double>(n);
}

std::vector<std::vector<Tensor>> zero_like_params(const Model& model) {
  std::vector<std::vector<Tensor>> out(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    out[i].reserve(model.params[i].size());
    for (const Tensor& t : model.params[i]) {
      out[i].push_back(Tensor::zeros(t.shape()));
    }
  }
  return out;
}

void check_labels(const Batch& batch, std::size_t num_classes) {
  if (batch.images.rank() != 4 || batch.images.dim(0) != batch.count()) {
    throw ShapeError("batch image count does not match label count");
  }
  for (int y : batch.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ShapeError("label out of range");
    }
  }
}

}  // namespace

Batch gather(const Batch& b, const std::vector<std::size_t>& positions) {
  const std::size_t per = b.images.size() / b.images.dim(0);
  std::vector<std::size_t> shape = b.images.shape();
  shape[0] = positions.size();
  Batch out;
  out.images = Tensor::zeros(shape);
  out.labels.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t p = positions[i];
    std::memcpy(out.images.data() + i * per, b.images.data() + p * per,
                per * sizeof(double));
    out.labels.push_back(b.labels[p]);
  }
  return out;
}

Model build_model(std::vector<LayerSpec> layers, Shape3 input_shape,
                  std::size_t num_classes, std::uint64_t seed) {
  if (layers.empty()) throw ShapeError("model needs at least one layer");
  if (input_shape.c == 0 || input_shape.h == 0 || input_shape.w == 0) {
    throw ShapeError("model input shape has a zero dimension");
  }
  const auto states = flow_states(layers, input_shape);
  const FlowState& out = states.back();
  if (out.spatial || out.width != num_classes) {
    throw ShapeError("model must end in dense(num_classes)");
  }

  Model m;
  m.layers = std::move(layers);
  m.input_shape = input_shape;
  m.num_classes = num_classes;

  bool found_conv = false;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].kind == LayerKind::conv2d) {
      m.first_conv_index = i;
      found_conv = true;
      break;
    }
  }
  if (!found_conv) throw ShapeError("model has no convolutional layer");

  Rng rng(seed);
  m.params.resize(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    const FlowState& in = states[i];
    switch (l.kind) {
      case LayerKind::conv2d: {
        const std::size_t fan_in = in.s.c * l.kernel_h * l.kernel_w;
        m.params[i].push_back(he_init(
            rng, {l.out_channels, in.s.c, l.kernel_h, l.kernel_w}, fan_in));
        m.params[i].push_back(Tensor::zeros({l.out_channels}));
        break;
      }
      case LayerKind::residual_block: {
        const std::size_t c = in.s.c;
        const std::size_t fan_in = c * 9;
        m.params[i].push_back(he_init(rng, {c, c, 3, 3}, fan_in));
        m.params[i].push_back(Tensor::zeros({c}));
        m.params[i].push_back(he_init(rng, {c, c, 3, 3}, fan_in));
        m.params[i].push_back(Tensor::zeros({c}));
        break;
      }
      case LayerKind::dense: {
        m.params[i].push_back(he_init(rng, {l.out_width, in.width}, in.width));
        m.params[i].push_back(Tensor::zeros({l.out_width}));
        break;
      }
      default:
        break;
    }
  }
  m.kernel_mask.assign(m.first_conv_kernels(), 1);
  return m;
}

std::vector<LayerSpec> miniconvnet_layers(std::size_t classes) {
  return {LayerSpec::conv(16, 5, 5, 1, 2), LayerSpec::relu_(),
          LayerSpec::maxpool(),            LayerSpec::conv(32, 3, 3, 1, 1),
          LayerSpec::relu_(),              LayerSpec::maxpool(),
          LayerSpec::flatten_(),           LayerSpec::dense_(classes)};
}

std::vector<LayerSpec> miniresnet_layers(std::size_t classes) {
  return {LayerSpec::conv(16, 5, 5, 1, 2), LayerSpec::relu_(),
          LayerSpec::maxpool(),            LayerSpec::conv(32, 3, 3, 1, 1),
          LayerSpec::relu_(),              LayerSpec::residual(),
          LayerSpec::maxpool(),            LayerSpec::flatten_(),
          LayerSpec::dense_(classes)};
}

Model make_architecture(const std::string& arch, Shape3 input_shape,
                        std::size_t classes, std::uint64_t seed) {
  if (arch == "miniconv") {
    return build_model(miniconvnet_layers(classes), input_shape, classes, seed);
  }
  if (arch == "miniresnet") {
    return build_model(miniresnet_layers(classes), input_shape, classes, seed);
  }
  throw InvalidArgument("unknown architecture: " + arch);
}

std::pair<Tensor, Tensor> forward(const Model& model, const Tensor& images) {
  Cache cache = run_forward(model, images);
  return {cache.acts.back(),
          std::move(cache.acts[model.first_conv_index + 1])};
}

LossGrads loss_and_param_grads(const Model& model, const Batch& batch) {
  if (batch.count() == 0) throw EmptyData("loss_and_param_grads: empty batch");
  check_labels(batch, model.num_classes);
  Cache cache = run_forward(model, batch.images);
  Tensor dlogits;
  LossGrads out;
  out.loss = softmax_ce(cache.acts.back(), batch.labels, &dlogits);
  out.grads = zero_like_params(model);
  run_backward(model, cache, dlogits, &out.grads, nullptr);
  return out;
}

Tensor input_gradient(const Model& model, const Batch& batch) {
  if (batch.count() == 0) throw EmptyData("input_gradient: empty batch");
  check_labels(batch, model.num_classes);
  Cache cache = run_forward(model, batch.images);
  Tensor dlogits;
  softmax_ce(cache.acts.back(), batch.labels, &dlogits);
  Tensor dinput;
  run_backward(model, cache, dlogits, nullptr, &dinput);
  return dinput;
}

Model train(Model model, const Batch& train_data, const TrainConfig& config,
            const EpochObserver& observer) {
  if (config.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (config.batch_size < 1) {
    throw InvalidArgument("train: batch_size must be >= 1");
  }
  if (config.learning_rate < 0.0 || !std::isfinite(config.learning_rate)) {
    throw InvalidArgument("train: learning_rate must be >= 0");
  }
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw InvalidArgument("train: momentum must lie in [0, 1)");
  }
  const std::size_t n = train_data.count();
  if (n == 0) throw EmptyData("train: empty dataset");
  check_labels(train_data, model.num_classes);

  std::vector<std::vector<Tensor>> velocity = zero_like_params(model);
  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::vector<std::size_t> idx(order.begin() + start,
                                         order.begin() + stop);
      Batch mb = gather(train_data, idx);
      LossGrads lg = loss_and_param_grads(model, mb);
      loss_sum += lg.loss * static_cast<double>(mb.count());
      for (std::size_t li = 0; li < model.params.size(); ++li) {
        for (std::size_t pi = 0; pi < model.params[li].size(); ++pi) {
          Tensor& v = velocity[li][pi];
          Tensor& w = model.params[li][pi];
          const Tensor& g = lg.grads[li][pi];
          for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = config.momentum * v[i] + g[i];
            w[i] -= config.learning_rate * v[i];
          }
        }
      }
    }
    if (observer) {
      observer(epoch, loss_sum / static_cast<double>(n), model);
    }
  }
  return model;
}

double evaluate_accuracy(const Model& model, const Batch& data) {
  const std::size_t n = data.count();
  if (n == 0) throw EmptyData("evaluate_accuracy: empty dataset");
  check_labels(data, model.num_classes);
  const std::size_t chunk = 200;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(n, start + chunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    Batch part = gather(data, idx);
    Cache cache = run_forward(model, part.images);
    const Tensor& logits = cache.acts.back();
    const std::size_t k = model.num_classes;
    for (std::size_t r = 0; r < part.count(); ++r) {
      const double* lr = logits.data() + r * k;
      std::size_t arg = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (lr[j] > lr[arg]) arg = j;
      }
      if (static_cast<int>(arg) == part.labels[r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace fk
