#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

namespace spectrumkit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted non-increasing.
struct HermitianEig {
  RealVector values;
  Matrix vectors;  // column k belongs to values[k]
};

inline HermitianEig hermitian_eig(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  const Eigen::Index n = h.rows();
  HermitianEig out{RealVector(n), Matrix(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = solver.eigenvalues()[n - 1 - k];
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

inline RealVector spectrum(const Matrix& h) { return hermitian_eig(h).values; }

/// rho^exponent for a PSD matrix; eigenvalues below rel_cutoff * lambda_max are
/// treated as zero (pseudo-inverse for negative exponents).
inline Matrix psd_power(const Matrix& rho, double exponent, double rel_cutoff = 1e-13) {
  const HermitianEig eig = hermitian_eig(rho);
  const double top = std::max(eig.values.size() ? eig.values[0] : 0.0, 0.0);
  RealVector f(eig.values.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const double lam = eig.values[k];
    f[k] = (lam > rel_cutoff * top && lam > 0.0) ? std::pow(lam, exponent) : 0.0;
  }
  return eig.vectors * f.asDiagonal() * eig.vectors.adjoint();
}

/// exp(h) for Hermitian h.
inline Matrix hermitian_exp(const Matrix& h) {
  const HermitianEig eig = hermitian_eig(h);
  RealVector f = eig.values.array().exp();
  return eig.vectors * f.asDiagonal() * eig.vectors.adjoint();
}

/// exp(i h) for Hermitian h; unitary.
inline Matrix unitary_exp(const Matrix& h) {
  const HermitianEig eig = hermitian_eig(h);
  ComplexVector f(eig.values.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = std::polar(1.0, eig.values[k]);
  return eig.vectors * f.asDiagonal() * eig.vectors.adjoint();
}

inline RealVector singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

/// Number of singular values above rel_tol * sigma_max (and above an absolute floor).
inline int numerical_rank(const Matrix& m, double rel_tol = 1e-9) {
  if (m.size() == 0) return 0;
  const RealVector s = singular_values(m);
  if (s.size() == 0 || s[0] <= 1e-300) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > rel_tol * s[0]) ++r;
  return r;
}

inline double condition_number(const Matrix& m) {
  const RealVector s = singular_values(m);
  if (s.size() == 0) return 1.0;
  const double lo = s[s.size() - 1];
  return lo <= 0.0 ? std::numeric_limits<double>::infinity() : s[0] / lo;
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_hermitian(const Matrix& h, double tol = 1e-10) {
  if (h.rows() != h.cols()) return false;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Base-2 Shannon entropy with 0 log 0 = 0; negative round-off entries are clamped.
inline double shannon_entropy(const RealVector& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double x = p[k];
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

}  // namespace spectrumkit
