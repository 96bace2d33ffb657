#include <doctest.h>

#include <cmath>

#include "fk/errors.hpp"
#include "fk/nn.hpp"
#include "fk/oracles.hpp"
#include "fk/rng.hpp"

using namespace fk;

namespace {

Batch uniform_batch(Rng& rng, Shape3 s, std::size_t n, std::size_t classes) {
  Batch b;
  b.images = Tensor::zeros({n, s.c, s.h, s.w});
  for (std::size_t i = 0; i < b.images.size(); ++i) b.images[i] = rng.uniform01();
  b.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels[i] = static_cast<int>(rng.below(classes));
  }
  return b;
}

void zero_params(Model& m) {
  for (auto& ps : m.params) {
    for (Tensor& t : ps) {
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.0;
    }
  }
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("all-zero weights give all-zero outputs") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 4);
  zero_params(m);
  Rng rng(5);
  Batch b = uniform_batch(rng, {1, 28, 28}, 2, 10);
  const auto [logits, layer_l] = forward(m, b.images);
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == 0.0);
  for (std::size_t i = 0; i < layer_l.size(); ++i) CHECK(layer_l[i] == 0.0);
}

TEST_CASE("masked kernels produce exactly zero maps") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 4);
  std::fill(m.kernel_mask.begin(), m.kernel_mask.end(), 0);
  Rng rng(6);
  Batch b = uniform_batch(rng, {1, 28, 28}, 2, 10);
  const auto [logits, layer_l] = forward(m, b.images);
  (void)logits;
  for (std::size_t i = 0; i < layer_l.size(); ++i) CHECK(layer_l[i] == 0.0);
}

TEST_CASE("forward is pure") {
  Model m = make_architecture("miniresnet", {1, 28, 28}, 10, 9);
  Rng rng(10);
  Batch b = uniform_batch(rng, {1, 28, 28}, 3, 10);
  const auto [l1, a1] = forward(m, b.images);
  const auto [l2, a2] = forward(m, b.images);
  CHECK(l1 == l2);
  CHECK(a1 == a2);
}

TEST_CASE("masking equals zeroed kernel weights exactly") {
  Model masked = make_architecture("miniconv", {1, 14, 14}, 10, 21);
  Model zeroed = masked;
  const std::size_t kill = 3;
  masked.kernel_mask[kill] = 0;
  Tensor& w = zeroed.params[zeroed.first_conv_index][0];
  const std::size_t per = w.size() / w.dim(0);
  for (std::size_t i = 0; i < per; ++i) w[kill * per + i] = 0.0;
  zeroed.params[zeroed.first_conv_index][1][kill] = 0.0;

  Rng rng(33);
  Batch b = uniform_batch(rng, {1, 14, 14}, 4, 10);
  const auto [lm, am] = forward(masked, b.images);
  const auto [lz, az] = forward(zeroed, b.images);
  CHECK(lm == lz);
  CHECK(am == az);
  CHECK(input_gradient(masked, b) == input_gradient(zeroed, b));
}

TEST_CASE("uniform logits give ln(classes) loss") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 4);
  zero_params(m);  // logits all zero -> uniform softmax
  Rng rng(3);
  Batch b = uniform_batch(rng, {1, 28, 28}, 5, 10);
  const LossGrads lg = loss_and_param_grads(m, b);
  CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("confident correct prediction drives loss to zero") {
  Model m = build_model({LayerSpec::conv(1, 1, 1, 1, 0), LayerSpec::flatten_(),
                         LayerSpec::dense_(2)},
                        {1, 1, 1}, 2, 1);
  zero_params(m);
  m.params[0][0][0] = 1.0;                   // conv passes the pixel through
  m.params[2][0] = Tensor::from_data({2, 1}, {40.0, -40.0});
  Batch b;
  b.images = Tensor::from_data({1, 1, 1, 1}, {1.0});
  b.labels = {0};
  const LossGrads lg = loss_and_param_grads(m, b);
  CHECK(lg.loss <= 1e-12);
  CHECK(lg.loss >= 0.0);
}

TEST_CASE("parameter gradients match central differences") {
  for (std::size_t kind = 0; kind < grad_case_kinds(); ++kind) {
    CAPTURE(grad_case_name(kind));
    GradCase gc = make_grad_case(kind, 1234 + kind);
    const GradCheckResult r = check_param_gradients(gc.model, gc.batch);
    CHECK(r.max_rel_err <= tol::kGradRelTol);
    CHECK(r.checked > 0);
  }
}

TEST_CASE("input gradients match central differences on sampled pixels") {
  GradCase gc = make_grad_case(5, 777);
  const GradCheckResult r = check_input_gradients(gc.model, gc.batch, 20, 99);
  CHECK(r.max_rel_err <= tol::kGradRelTol);
  CHECK(r.checked == 20);
}

TEST_CASE("zero first-layer weights kill the input gradient") {
  Model m = make_architecture("miniconv", {1, 14, 14}, 10, 8);
  Tensor& w = m.params[m.first_conv_index][0];
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.0;
  Rng rng(2);
  Batch b = uniform_batch(rng, {1, 14, 14}, 2, 10);
  const Tensor g = input_gradient(m, b);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("input gradient is deterministic") {
  Model m = make_architecture("miniresnet", {1, 14, 14}, 10, 13);
  Rng rng(4);
  Batch b = uniform_batch(rng, {1, 14, 14}, 2, 10);
  CHECK(input_gradient(m, b) == input_gradient(m, b));
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  Model m = make_architecture("miniconv", {1, 14, 14}, 10, 3);
  Rng rng(8);
  Batch data = uniform_batch(rng, {1, 14, 14}, 12, 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.0;
  cfg.seed = 5;
  const Model trained = train(m, data, cfg);
  CHECK(trained == m);
}

TEST_CASE("training is bitwise reproducible") {
  Rng rng(14);
  Batch data = uniform_batch(rng, {1, 10, 10}, 24, 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  cfg.seed = 5;
  Model m1 = make_architecture("miniconv", {1, 10, 10}, 10, 77);
  Model m2 = make_architecture("miniconv", {1, 10, 10}, 10, 77);
  CHECK(train(std::move(m1), data, cfg) == train(std::move(m2), data, cfg));
}

TEST_CASE("train rejects bad configs and empty data") {
  Model m = make_architecture("miniconv", {1, 10, 10}, 10, 1);
  Batch data;
  data.images = Tensor::zeros({1, 1, 10, 10});
  data.labels = {};
  TrainConfig cfg;
  CHECK_THROWS_AS(train(m, data, cfg), EmptyData);
  Rng rng(1);
  Batch ok = uniform_batch(rng, {1, 10, 10}, 4, 10);
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(m, ok, cfg), InvalidArgument);
  cfg.epochs = 1;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(train(m, ok, cfg), InvalidArgument);
}

TEST_CASE("accuracy of a constant predictor on balanced data is chance") {
  Model m = make_architecture("miniconv", {1, 10, 10}, 10, 2);
  zero_params(m);
  m.params.back()[1][3] = 5.0;  // dense bias forces constant argmax = 3
  Batch b;
  b.images = Tensor::zeros({20, 1, 10, 10});
  b.labels.resize(20);
  for (int i = 0; i < 20; ++i) b.labels[i] = i % 10;
  CHECK(evaluate_accuracy(m, b) == doctest::Approx(0.10));
}

TEST_CASE("shape mismatch raises ShapeError") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 4);
  Tensor wrong = Tensor::zeros({1, 1, 14, 14});
  CHECK_THROWS_AS(forward(m, wrong), ShapeError);
}

// The finite-difference oracle must catch a corrupted gradient: nudge one
// analytic conv-weight gradient and confirm the comparison trips.
TEST_CASE("gradient oracle flags an injected fault") {
  GradCase gc = make_grad_case(0, 321);
  const LossGrads lg = loss_and_param_grads(gc.model, gc.batch);
  const std::size_t conv = gc.model.first_conv_index;

  Model probe = gc.model;
  Tensor& w = probe.params[conv][0];
  const double keep = w[0];
  const double step = tol::kFdStep;
  w[0] = keep + step;
  const double up = loss_and_param_grads(probe, gc.batch).loss;
  w[0] = keep - step;
  const double dn = loss_and_param_grads(probe, gc.batch).loss;
  w[0] = keep;
  const double fd = (up - dn) / (2.0 * step);

  const double healthy = lg.grads[conv][0][0];
  CHECK(relative_error(fd, healthy) <= tol::kGradRelTol);
  const double mutated = healthy + 1e-2;
  CHECK(relative_error(fd, mutated) > tol::kGradRelTol);
}

// Accuracy counts integer-exactly, so any batch partitioning of the
// evaluation set gives the same result as one pass over everything.
TEST_CASE("evaluation is independent of batch partitioning") {
  Model m = make_architecture("miniconv", {1, 10, 10}, 10, 23);
  Rng rng(24);
  const Batch data = uniform_batch(rng, {1, 10, 10}, 503, 10);  // odd size
  const double chunked = evaluate_accuracy(m, data);

  const auto [logits, maps] = forward(m, data.images);
  (void)maps;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.count(); ++r) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 10; ++j) {
      if (logits[r * 10 + j] > logits[r * 10 + arg]) arg = j;
    }
    if (static_cast<int>(arg) == data.labels[r]) ++correct;
  }
  CHECK(chunked == static_cast<double>(correct) / 503.0);
}

TEST_CASE("memorizing three samples reaches accuracy 1.0") {
  Rng rng(19);
  Batch three = uniform_batch(rng, {1, 8, 8}, 3, 10);
  three.labels = {2, 7, 4};
  Model m = build_model({LayerSpec::conv(4, 3, 3, 1, 1), LayerSpec::relu_(),
                         LayerSpec::flatten_(), LayerSpec::dense_(10)},
                        {1, 8, 8}, 10, 20);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 3;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  const Model trained = train(std::move(m), three, cfg);
  CHECK(evaluate_accuracy(trained, three) == 1.0);
}

}  // TEST_SUITE
