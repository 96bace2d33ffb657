#pragma once

#include <cstdint>
#include <vector>

#include "fk/nn.hpp"
#include "fk/svd.hpp"

namespace fk {

// Centralised tolerances so every suite pins the same numbers.
namespace tol {
inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradRelTol = 1e-4;
inline constexpr double kGradDenomFloor = 1e-6;
inline constexpr double kSvdOrtho = 1e-10;
inline constexpr double kSvdReconRel = 1e-9;
inline constexpr double kEigenOracle = 1e-8;
inline constexpr double kLambdaAnalytic = 1e-6;
}  // namespace tol

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = tol::kGradDenomFloor);

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

// Central finite differences of the mean cross-entropy loss against the
// analytic parameter gradients, every coordinate of every parameter tensor.
GradCheckResult check_param_gradients(const Model& model, const Batch& batch,
                                      double step = tol::kFdStep);

// Same for d(loss)/d(input) on `sample_pixels` deterministically chosen
// pixels (0 = all).
GradCheckResult check_input_gradients(const Model& model, const Batch& batch,
                                      std::size_t sample_pixels,
                                      std::uint64_t pick_seed,
                                      double step = tol::kFdStep);

// Classical two-sided Jacobi eigen-decomposition of a symmetric matrix,
// eigenvalues descending, eigenvectors in columns. This is the independent
// route used to cross-check the one-sided SVD.
struct EigenSym {
  std::size_t n = 0;
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // n x n, column j pairs with values[j]
};
EigenSym eigen_symmetric(const std::vector<double>& a, std::size_t n);

// Best rank-r approximation of k computed purely from the eigenvectors of
// K K^T (never through fk::svd).
KernelMatrix eckart_young_rank_approx(const KernelMatrix& k, std::size_t rank);

// Singular values of k via eigenvalues of K K^T.
std::vector<double> singular_values_by_eigen(const KernelMatrix& k);

// Random test matrix with entries uniform in [-1, 1].
KernelMatrix random_matrix(std::size_t rows, std::size_t cols,
                           std::uint64_t seed);

// Small randomized model + batch for gradient checks, one per layer-kind
// focus. `kind_tag` picks the layer mix; see the implementation table.
struct GradCase {
  Model model;
  Batch batch;
};
GradCase make_grad_case(std::size_t kind_tag, std::uint64_t seed);
std::size_t grad_case_kinds();
const char* grad_case_name(std::size_t kind_tag);

}  // namespace fk
