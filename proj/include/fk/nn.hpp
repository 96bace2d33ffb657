#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fk/tensor.hpp"

namespace fk {

enum class LayerKind : std::uint32_t {
  conv2d = 0,
  relu = 1,
  maxpool2 = 2,
  residual_block = 3,
  flatten = 4,
  dense = 5,
};

const char* layer_kind_name(LayerKind kind);

// One layer of the fixed vocabulary. Hyperparameters that do not apply to a
// kind stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel_h = 0;      // conv2d
  std::size_t kernel_w = 0;      // conv2d
  std::size_t stride = 1;        // conv2d
  std::size_t pad = 0;           // conv2d
  std::size_t out_width = 0;     // dense

  static LayerSpec conv(std::size_t out_channels, std::size_t kh,
                        std::size_t kw, std::size_t stride, std::size_t pad);
  static LayerSpec relu_();
  static LayerSpec maxpool();
  static LayerSpec residual();
  static LayerSpec flatten_();
  static LayerSpec dense_(std::size_t out_width);

  bool operator==(const LayerSpec&) const = default;
};

struct Shape3 {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  bool operator==(const Shape3&) const = default;
};

// Ordered layer graph plus parameter store. params[i] holds layer i's
// tensors: conv2d/dense {weight, bias}; residual_block {w1, b1, w2, b2};
// the rest are empty. kernel_mask is an evaluation-time view over the first
// convolution's kernels: a false entry zeroes that kernel's output map,
// exactly as if its weights and bias were zero.
struct Model {
  std::vector<LayerSpec> layers;
  std::vector<std::vector<Tensor>> params;
  Shape3 input_shape;
  std::size_t num_classes = 0;
  std::size_t first_conv_index = 0;
  std::vector<std::uint8_t> kernel_mask;

  std::size_t first_conv_kernels() const {
    return layers[first_conv_index].out_channels;
  }
  bool operator==(const Model&) const = default;
};

struct Batch {
  Tensor images;            // [count, channels, height, width], values in [0,1]
  std::vector<int> labels;  // class indices, one per image

  std::size_t count() const { return labels.size(); }
};

// Copy of the examples at the given positions, in the given order.
Batch gather(const Batch& b, const std::vector<std::size_t>& positions);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

// Validates the layer chain against the input shape and He-initialises all
// weights (biases zero) from the seed.
Model build_model(std::vector<LayerSpec> layers, Shape3 input_shape,
                  std::size_t num_classes, std::uint64_t seed);

// conv2d(16,5x5,pad 2) -> relu -> maxpool2 -> conv2d(32,3x3,pad 1) -> relu
// -> maxpool2 -> flatten -> dense(classes)
std::vector<LayerSpec> miniconvnet_layers(std::size_t classes);
// Same with one identity-skip residual block after the second convolution.
std::vector<LayerSpec> miniresnet_layers(std::size_t classes);

Model make_architecture(const std::string& arch, Shape3 input_shape,
                        std::size_t classes, std::uint64_t seed);

// Logits [count, classes] and the first convolution's output map
// [count, k, h', w'].
std::pair<Tensor, Tensor> forward(const Model& model, const Tensor& images);

// Per-layer parameter gradients of the mean cross-entropy loss.
struct LossGrads {
  double loss = 0.0;
  std::vector<std::vector<Tensor>> grads;
};
LossGrads loss_and_param_grads(const Model& model, const Batch& batch);

// d(mean loss)/d(images), same shape as batch.images.
Tensor input_gradient(const Model& model, const Batch& batch);

// Called after each epoch with the mean training loss over that epoch.
using EpochObserver =
    std::function<void(std::size_t epoch, double mean_loss, const Model&)>;

Model train(Model model, const Batch& train_data, const TrainConfig& config,
            const EpochObserver& observer = nullptr);

double evaluate_accuracy(const Model& model, const Batch& data);

// Reference results quoted from the source experiments at full scale; kept
// for orientation only, never asserted by tests (see docs/reference_results.md).
inline constexpr double kRefCifar10Resnet50CleanAcc = 0.7587;
inline constexpr double kRefCifar10Resnet50FgsmEps = 0.01;
inline constexpr double kRefCifar10Resnet50FgsmAcc = 0.5888;
inline constexpr double kRefMnistResnet50CleanAcc = 0.9942;
inline constexpr double kRefMnistResnet50FgsmEps = 0.34;
inline constexpr double kRefMnistResnet50FgsmAcc = 0.794;

}  // namespace fk
