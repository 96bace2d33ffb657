#include <doctest.h>

#include <cmath>

#include "fk/checkpoint.hpp"
#include "fk/defense.hpp"
#include "fk/errors.hpp"
#include "fk/fgsm.hpp"
#include "fk/oracles.hpp"
#include "fk/rng.hpp"
#include "fk/synthdata.hpp"

using namespace fk;

namespace {

FragilityReport synthetic_report(std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> acc(k);
  for (double& a : acc) a = 0.5 + 0.4 * rng.uniform01();
  FragilityReport r = partition_by_mean(acc);
  r.baseline_accuracy = 0.9;
  return r;
}

}  // namespace

TEST_SUITE("defense") {

TEST_CASE("stack/unstack round-trip and shapes") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 61);
  const std::vector<std::size_t> idx{1, 4, 9};
  const KernelMatrix k = stack_kernels(m, idx);
  CHECK(k.rows == 3);
  CHECK(k.cols == 25);  // 1 * 5 * 5
  CHECK(k.kernel_indices == idx);

  const Tensor& w = m.params[m.first_conv_index][0];
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 25; ++c) {
      CHECK(k.at(r, c) == w[idx[r] * 25 + c]);
    }
  }

  Model m2 = m;
  unstack_kernels(m2, k);
  CHECK(m2 == m);

  CHECK_THROWS_AS(stack_kernels(m, {}), EmptySet);
  CHECK_THROWS_AS(stack_kernels(m, {99}), InvalidIndex);
}

TEST_CASE("single kernel stack is its flattened weights") {
  Model m = build_model({LayerSpec::conv(2, 3, 3, 1, 1), LayerSpec::flatten_(),
                         LayerSpec::dense_(10)},
                        {1, 8, 8}, 10, 5);
  const KernelMatrix k = stack_kernels(m, {0});
  CHECK(k.rows == 1);
  CHECK(k.cols == 9);
  const Tensor& w = m.params[0][0];
  for (std::size_t i = 0; i < 9; ++i) CHECK(k.data[i] == w[i]);
}

TEST_CASE("filtering at zero noise is exact identity") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 62);
  const FragilityReport rep = synthetic_report(16, 1);
  DefenseConfig cfg;
  cfg.noise_level = 0.0;
  const FilterResult fr = filter_null_kernels(m, rep.null_set, cfg);
  CHECK(fr.removed_sigma.empty());
  CHECK(fr.k_tilde.data == stack_kernels(m, rep.null_set).data);
}

TEST_CASE("huge noise removes everything in truncate mode") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 62);
  const FragilityReport rep = synthetic_report(16, 1);
  DefenseConfig cfg;
  cfg.noise_level = 1e6;
  const FilterResult fr = filter_null_kernels(m, rep.null_set, cfg);
  for (double x : fr.k_tilde.data) CHECK(x == 0.0);
  CHECK(fr.removed_sigma.size() ==
        std::min(rep.null_set.size(), std::size_t(25)));
}

TEST_CASE("mid threshold matches the eigen-route rank approximation") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 63);
  const FragilityReport rep = synthetic_report(16, 2);
  const KernelMatrix k = stack_kernels(m, rep.null_set);
  const SvdFactors f = svd(k);

  // pick a noise level whose tau lands between sigma[2] and sigma[1]
  const std::size_t mm = std::min(k.rows, k.cols);
  const std::size_t nn = std::max(k.rows, k.cols);
  const double lam = lambda_beta(double(mm) / double(nn)) * std::sqrt(double(nn));
  const double tau_target = 0.5 * (f.sigma[1] + f.sigma[2]);
  DefenseConfig cfg;
  cfg.noise_level = tau_target / lam;
  const FilterResult fr = filter_null_kernels(m, rep.null_set, cfg);
  CHECK(fr.removed_sigma.size() == f.r - 2);

  const KernelMatrix oracle = eckart_young_rank_approx(k, 2);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < oracle.data.size(); ++i) {
    const double d = oracle.data[i] - fr.k_tilde.data[i];
    num += d * d;
    den += oracle.data[i] * oracle.data[i];
  }
  CHECK(std::sqrt(num / den) <= 1e-8);
}

TEST_CASE("amplification factor") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 64);
  const FragilityReport rep = synthetic_report(16, 3);
  const KernelMatrix k = stack_kernels(m, rep.null_set);
  CHECK(amplification_factor(k, k, NormKind::spectral) == 1.0);

  // remove exactly one singular value: alpha = 1 + that value
  const SvdFactors f = svd(k);
  auto cut = f.sigma;
  const double removed = cut.back();
  cut.back() = 0.0;
  const KernelMatrix kt = reconstruct(f, cut, k.kernel_indices);
  CHECK(amplification_factor(k, kt, NormKind::spectral) ==
        doctest::Approx(1.0 + removed).epsilon(1e-9));

  KernelMatrix wrong = make_kernel_matrix(1, 2, {0, 0});
  CHECK_THROWS_AS(amplification_factor(k, wrong, NormKind::spectral),
                  InvalidArgument);
}

TEST_CASE("alpha grows with the noise level under truncate") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 65);
  const FragilityReport rep = synthetic_report(16, 4);
  double prev = -1.0;
  for (double level : {0.0, 0.005, 0.01, 0.02, 0.05, 0.1}) {
    DefenseConfig cfg;
    cfg.noise_level = level;
    const DefenseOutcome out = apply_defense(m, rep, cfg);
    CHECK(out.alpha >= 1.0);
    CHECK(out.alpha >= prev);
    prev = out.alpha;
  }
}

TEST_CASE("zero-noise defense is a bitwise no-op") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 66);
  const FragilityReport rep = synthetic_report(16, 5);
  DefenseConfig cfg;
  cfg.noise_level = 0.0;
  const DefenseOutcome out = apply_defense(m, rep, cfg);
  CHECK(out.alpha == 1.0);
  CHECK(out.removed_sigma.empty());
  CHECK(out.modified_model == m);
  CHECK(serialize_model(out.modified_model) == serialize_model(m));
}

TEST_CASE("defense touches only layer-L fragile/null kernel weights") {
  Model m = make_architecture("miniresnet", {1, 28, 28}, 10, 67);
  const FragilityReport rep = synthetic_report(16, 6);
  DefenseConfig cfg;
  cfg.noise_level = 0.05;
  const DefenseOutcome out = apply_defense(m, rep, cfg);
  const Model& d = out.modified_model;

  for (std::size_t li = 0; li < m.params.size(); ++li) {
    for (std::size_t pi = 0; pi < m.params[li].size(); ++pi) {
      if (li == m.first_conv_index && pi == 0) continue;
      CHECK(d.params[li][pi] == m.params[li][pi]);  // biases and other layers
    }
  }

  // forced alpha on an identity filter: fragile kernels double exactly
  const double alpha = out.alpha;
  const Tensor& w0 = m.params[m.first_conv_index][0];
  const Tensor& w1 = d.params[d.first_conv_index][0];
  const std::size_t per = w0.size() / 16;
  for (std::size_t idx : rep.fragile) {
    for (std::size_t i = 0; i < per; ++i) {
      CHECK(w1[idx * per + i] == w0[idx * per + i] * alpha);
    }
  }

  // write-back fidelity: stacking S' out of the defended model returns K~
  const FilterResult fr = filter_null_kernels(m, rep.null_set, cfg);
  const KernelMatrix restacked = stack_kernels(d, rep.null_set);
  CHECK(restacked.data == fr.k_tilde.data);
}

TEST_CASE("degenerate sets are rejected") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 68);
  FragilityReport all_null = partition_by_mean(std::vector<double>(16, 0.5));
  DefenseConfig cfg;
  CHECK_THROWS_AS(apply_defense(m, all_null, cfg), EmptyFragileSet);

  FragilityReport wrong_k = synthetic_report(8, 9);
  CHECK_THROWS_AS(apply_defense(m, wrong_k, cfg), IncompatibleReports);
}

TEST_CASE("search picks the best grid value, ties to the smaller level") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 69);
  const FragilityReport rep = synthetic_report(16, 7);
  const Batch val = synth::make_digits(60, 21);
  CHECK_THROWS_AS(search_noise_level(m, rep, {}, val, 0.1), EmptyGrid);

  CHECK(search_noise_level(m, rep, {0.0}, val, 0.1) == 0.0);

  const double a = search_noise_level(m, rep, {0.0, 0.01, 0.05}, val, 0.1);
  const double b = search_noise_level(m, rep, {0.0, 0.01, 0.01, 0.05}, val, 0.1);
  CHECK(a == b);  // duplicates change nothing

  // exhaustive oracle: evaluate each level by hand and compare
  double best_level = 0.0, best_acc = -1.0;
  for (double level : {0.0, 0.01, 0.05}) {
    DefenseConfig c;
    c.noise_level = level;
    const DefenseOutcome out = apply_defense(m, rep, c);
    Batch attacked;
    attacked.images = fgsm_perturb(out.modified_model, val, 0.1, true);
    attacked.labels = val.labels;
    const double acc = evaluate_accuracy(out.modified_model, attacked);
    if (acc > best_acc || (acc == best_acc && level < best_level)) {
      best_acc = acc;
      best_level = level;
    }
  }
  CHECK(a == best_level);
}

}  // TEST_SUITE
