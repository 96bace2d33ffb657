#pragma once

#include <cstddef>
#include <vector>

#include "fk/rng.hpp"

namespace fk {

// Dense n-dimensional array of doubles, row-major. Everything in the
// pipeline (images, activations, gradients, weights) is one of these.
// Treated as immutable once an operation has returned it.
class Tensor {
 public:
  Tensor() = default;

  // All entries set to `fill`. Throws InvalidShape on an empty shape list or
  // a zero dimension.
  Tensor(std::vector<std::size_t> shape, double fill);

  static Tensor zeros(std::vector<std::size_t> shape) {
    return Tensor(std::move(shape), 0.0);
  }
  static Tensor from_data(std::vector<std::size_t> shape,
                          std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Same data, new shape; element count must match.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

double l2_norm(const Tensor& t);

// a - b elementwise; shapes must match.
Tensor sub(const Tensor& a, const Tensor& b);

// Gaussian entries with mean 0 and sd sqrt(2 / fan_in).
Tensor he_init(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in);

}  // namespace fk
