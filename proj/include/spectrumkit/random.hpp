#pragma once

#include <cstdint>
#include <random>

#include "linalg.hpp"

namespace spectrumkit {

using Rng = std::mt19937_64;

inline Complex complex_gaussian(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian(rng);
  return m;
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of diag(R) removed.
inline Matrix haar_unitary(Eigen::Index n, Rng& rng) {
  const Matrix z = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

/// Uniform point on the probability simplex.
inline RealVector dirichlet_uniform(Eigen::Index d, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  RealVector x(d);
  for (Eigen::Index k = 0; k < d; ++k) x[k] = expo(rng);
  return x / x.sum();
}

/// Deterministic child seed so that restarts are reproducible independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace spectrumkit
