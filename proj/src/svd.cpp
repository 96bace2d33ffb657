#include "fk/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fk/errors.hpp"

namespace fk {

KernelMatrix make_kernel_matrix(std::size_t rows, std::size_t cols,
                                std::vector<double> data,
                                std::vector<std::size_t> kernel_indices) {
  if (rows == 0 || cols == 0) {
    throw InvalidShape("kernel matrix needs m >= 1 and n >= 1");
  }
  if (data.size() != rows * cols) {
    throw InvalidShape("kernel matrix data length mismatch");
  }
  if (kernel_indices.empty()) {
    kernel_indices.resize(rows);
    std::iota(kernel_indices.begin(), kernel_indices.end(), 0);
  }
  if (kernel_indices.size() != rows) {
    throw InvalidArgument("kernel_indices must have one entry per row");
  }
  for (std::size_t i = 1; i < kernel_indices.size(); ++i) {
    if (kernel_indices[i] <= kernel_indices[i - 1]) {
      throw InvalidArgument("kernel_indices must be distinct and ascending");
    }
  }
  KernelMatrix k;
  k.rows = rows;
  k.cols = cols;
  k.data = std::move(data);
  k.kernel_indices = std::move(kernel_indices);
  return k;
}

namespace {

// Hestenes one-sided Jacobi on a p x q matrix with p >= q, stored row-major.
// Columns of b are rotated until pairwise orthogonal; v accumulates the
// rotations (q x q). On exit sigma[j] = ||b[:,j]||.
void one_sided_jacobi(std::vector<double>& b, std::size_t p, std::size_t q,
                      std::vector<double>& v, std::vector<double>& sigma) {
  v.assign(q * q, 0.0);
  for (std::size_t i = 0; i < q; ++i) v[i * q + i] = 1.0;

  const double tol = 1e-15;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        double a = 0.0, bb = 0.0, c = 0.0;
        for (std::size_t r = 0; r < p; ++r) {
          const double bi = b[r * q + i];
          const double bj = b[r * q + j];
          a += bi * bi;
          bb += bj * bj;
          c += bi * bj;
        }
        if (c == 0.0 || std::abs(c) <= tol * std::sqrt(a * bb)) continue;
        rotated = true;
        const double zeta = (bb - a) / (2.0 * c);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t r = 0; r < p; ++r) {
          const double bi = b[r * q + i];
          const double bj = b[r * q + j];
          b[r * q + i] = cs * bi - sn * bj;
          b[r * q + j] = sn * bi + cs * bj;
        }
        for (std::size_t r = 0; r < q; ++r) {
          const double vi = v[r * q + i];
          const double vj = v[r * q + j];
          v[r * q + i] = cs * vi - sn * vj;
          v[r * q + j] = sn * vi + cs * vj;
        }
      }
    }
    if (!rotated) break;
  }

  sigma.assign(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      const double x = b[r * q + j];
      s += x * x;
    }
    sigma[j] = std::sqrt(s);
  }
}

// Replace zero columns of u (p x q) with unit vectors orthogonal to the
// nonzero ones so the factor keeps orthonormal columns. Picks, among the
// standard basis vectors, the one with the largest residual after projecting
// out the columns filled so far; two Gram-Schmidt passes.
void complete_orthonormal(std::vector<double>& u, std::size_t p,
                          std::size_t q,
                          const std::vector<bool>& is_zero_col) {
  auto project_out = [&](std::vector<double>& e, std::size_t upto_zero_col) {
    for (std::size_t k = 0; k < q; ++k) {
      if (is_zero_col[k] && k >= upto_zero_col) continue;  // not yet filled
      double dot = 0.0;
      for (std::size_t r = 0; r < p; ++r) dot += e[r] * u[r * q + k];
      for (std::size_t r = 0; r < p; ++r) e[r] -= dot * u[r * q + k];
    }
  };
  for (std::size_t j = 0; j < q; ++j) {
    if (!is_zero_col[j]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t cand = 0; cand < p; ++cand) {
      std::vector<double> e(p, 0.0);
      e[cand] = 1.0;
      project_out(e, j);
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(e);
      }
    }
    project_out(best, j);
    double nrm = 0.0;
    for (double x : best) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < p; ++r) u[r * q + j] = best[r] / nrm;
  }
}

}  // namespace

SvdFactors svd(const KernelMatrix& k) {
  for (double x : k.data) {
    if (!std::isfinite(x)) throw NumericError("svd: non-finite input entry");
  }

  const std::size_t m = k.rows;
  const std::size_t n = k.cols;
  const bool transposed = m < n;
  const std::size_t p = transposed ? n : m;  // working rows
  const std::size_t q = transposed ? m : n;  // working cols, q = r

  std::vector<double> b(p * q);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (transposed) {
        b[j * q + i] = k.at(i, j);
      } else {
        b[i * q + j] = k.at(i, j);
      }
    }
  }

  std::vector<double> w;  // q x q rotation accumulator
  std::vector<double> sigma;
  one_sided_jacobi(b, p, q, w, sigma);

  // Sort singular values descending; carry columns of b and w along.
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return sigma[a] > sigma[c];
  });

  std::vector<double> bs(p * q), ws(q * q), ss(q);
  for (std::size_t j = 0; j < q; ++j) {
    const std::size_t src = order[j];
    ss[j] = sigma[src];
    for (std::size_t r = 0; r < p; ++r) bs[r * q + j] = b[r * q + src];
    for (std::size_t r = 0; r < q; ++r) ws[r * q + j] = w[r * q + src];
  }

  // Normalise columns of b into the left factor of the working orientation.
  std::vector<bool> zero_col(q, false);
  for (std::size_t j = 0; j < q; ++j) {
    if (ss[j] > 0.0) {
      for (std::size_t r = 0; r < p; ++r) bs[r * q + j] /= ss[j];
    } else {
      zero_col[j] = true;
      for (std::size_t r = 0; r < p; ++r) bs[r * q + j] = 0.0;
    }
  }
  complete_orthonormal(bs, p, q, zero_col);

  SvdFactors f;
  f.m = m;
  f.n = n;
  f.r = q;
  f.sigma = std::move(ss);
  if (transposed) {
    f.u = std::move(ws);  // m x q
    f.v = std::move(bs);  // n x q
  } else {
    f.u = std::move(bs);
    f.v = std::move(ws);
  }

  // Sign convention: largest-magnitude entry of each U column positive.
  for (std::size_t j = 0; j < f.r; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < m; ++r) {
      const double mag = std::abs(f.u[r * f.r + j]);
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    if (f.u[arg * f.r + j] < 0.0) {
      for (std::size_t r = 0; r < m; ++r) f.u[r * f.r + j] = -f.u[r * f.r + j];
      for (std::size_t r = 0; r < n; ++r) f.v[r * f.r + j] = -f.v[r * f.r + j];
    }
  }
  return f;
}

double lambda_beta(double beta) {
  if (!(beta > 0.0) || beta > 1.0) {
    throw InvalidArgument("lambda_beta: beta must lie in (0, 1]");
  }
  const double c1 = 8.0;
  const double c2 = 14.0;
  return std::sqrt(2.0 * (beta + 1.0) +
                   c1 * beta / ((beta + 1.0) +
                                std::sqrt(beta * beta + c2 * beta + 1.0)));
}

double threshold_tau(std::size_t m, std::size_t n, double noise_level) {
  if (m == 0 || n == 0) throw InvalidArgument("threshold_tau: empty matrix");
  if (m > n) {
    throw InvalidOrientation("threshold_tau: requires m <= n (transpose first)");
  }
  if (noise_level < 0.0) {
    throw InvalidArgument("threshold_tau: noise_level must be >= 0");
  }
  const double beta = static_cast<double>(m) / static_cast<double>(n);
  return lambda_beta(beta) * std::sqrt(static_cast<double>(n)) * noise_level;
}

std::vector<double> apply_threshold(const std::vector<double>& sigma,
                                    double tau, ThresholdMode mode) {
  std::vector<double> out = sigma;
  if (mode == ThresholdMode::truncate) {
    for (double& s : out) {
      if (s < tau) s = 0.0;
    }
  } else {
    for (double& s : out) s = std::min(s, tau);
  }
  return out;
}

KernelMatrix reconstruct(const SvdFactors& f,
                         const std::vector<double>& sigma_mod,
                         const std::vector<std::size_t>& kernel_indices) {
  if (sigma_mod.size() != f.r) {
    throw InvalidArgument("reconstruct: sigma_mod length must equal r");
  }
  std::vector<double> out(f.m * f.n, 0.0);
  for (std::size_t i = 0; i < f.m; ++i) {
    for (std::size_t k = 0; k < f.r; ++k) {
      const double uis = f.u[i * f.r + k] * sigma_mod[k];
      if (uis == 0.0) continue;
      for (std::size_t j = 0; j < f.n; ++j) {
        out[i * f.n + j] += uis * f.v[j * f.r + k];
      }
    }
  }
  return make_kernel_matrix(f.m, f.n, std::move(out), kernel_indices);
}

double spectral_norm(const KernelMatrix& k) {
  SvdFactors f = svd(k);
  return f.sigma.empty() ? 0.0 : f.sigma.front();
}

double frobenius_norm(const KernelMatrix& k) {
  double s = 0.0;
  for (double x : k.data) s += x * x;
  return std::sqrt(s);
}

}  // namespace fk
