#include "fk/tensor.hpp"

#include <cmath>

#include "fk/errors.hpp"

namespace fk {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}

namespace {

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw InvalidShape("tensor shape must not be empty");
  for (std::size_t d : shape) {
    if (d == 0) throw InvalidShape("tensor dimensions must be positive");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_product(shape_), fill);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape,
                         std::vector<double> data) {
  validate_shape(shape);
  if (shape_product(shape) != data.size()) {
    throw InvalidShape("data length does not match shape product");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  validate_shape(new_shape);
  if (shape_product(new_shape) != size()) {
    throw InvalidShape("reshape must preserve element count");
  }
  Tensor t;
  t.shape_ = std::move(new_shape);
  t.data_ = data_;
  return t;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
  return std::sqrt(s);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("sub: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor he_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
  if (fan_in == 0) throw InvalidArgument("he_init: fan_in must be positive");
  Tensor t(std::move(shape), 0.0);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = sd * rng.gaussian();
  return t;
}

}  // namespace fk
