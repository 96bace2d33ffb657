#pragma once

#include <cstddef>
#include <vector>

namespace fk {

// m x n matrix of flattened first-layer kernels. Rows are kernels; each row
// keeps the original layer kernel index it came from.
struct KernelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;                  // row-major, rows*cols
  std::vector<std::size_t> kernel_indices;   // distinct, ascending, size==rows

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

KernelMatrix make_kernel_matrix(std::size_t rows, std::size_t cols,
                                std::vector<double> data,
                                std::vector<std::size_t> kernel_indices = {});

// Thin SVD, r = min(m, n). U holds the left singular vectors in its columns
// (m x r row-major), V the right ones (n x r). sigma is descending.
struct SvdFactors {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r = 0;
  std::vector<double> u;      // m x r
  std::vector<double> sigma;  // r
  std::vector<double> v;      // n x r
};

// One-sided Jacobi. Deterministic; sign convention: the largest-magnitude
// entry of each U column is made positive. Rank-deficient inputs get their
// null singular directions completed to an orthonormal basis.
SvdFactors svd(const KernelMatrix& k);

enum class ThresholdMode { truncate, clamp };

// Threshold coefficient for aspect ratio beta in (0, 1].
double lambda_beta(double beta);

// tau = lambda_beta(m/n) * sqrt(n) * noise_level. Requires 1 <= m <= n.
double threshold_tau(std::size_t m, std::size_t n, double noise_level);

// truncate: zero every value strictly below tau (default filtering mode).
// clamp: replace each value with min(value, tau).
std::vector<double> apply_threshold(const std::vector<double>& sigma,
                                    double tau, ThresholdMode mode);

// U * diag(sigma_mod) * V^T with the input's kernel_indices carried over.
KernelMatrix reconstruct(const SvdFactors& factors,
                         const std::vector<double>& sigma_mod,
                         const std::vector<std::size_t>& kernel_indices);

// Largest singular value.
double spectral_norm(const KernelMatrix& k);

double frobenius_norm(const KernelMatrix& k);

}  // namespace fk
