#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace spectrumkit {

using Dims = std::vector<int>;
/// Multi-index into a tensor, 0-based (file formats use 1-based indices).
using MultiIndex = std::vector<int>;

/// Default relative threshold for numerical supports.
inline constexpr double kDefaultEta = 1e-9;

namespace detail {

inline Eigen::Index product(const Dims& dims, std::size_t from = 0, std::size_t to = SIZE_MAX) {
  Eigen::Index p = 1;
  to = std::min(to, dims.size());
  for (std::size_t k = from; k < to; ++k) p *= dims[k];
  return p;
}

using RowMajorMap = Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace detail

/// Dense complex tensor in C^{n_1} x ... x C^{n_d}, d >= 2, stored row-major
/// (the first leg varies slowest).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Dims dims) : dims_(std::move(dims)) {
    validate_dims();
    entries_ = ComplexVector::Zero(detail::product(dims_));
  }

  Tensor(Dims dims, ComplexVector entries) : dims_(std::move(dims)), entries_(std::move(entries)) {
    validate_dims();
    detail::require(entries_.size() == detail::product(dims_),
                    "tensor: entry count does not match the product of dims");
  }

  const Dims& dims() const { return dims_; }
  int order() const { return static_cast<int>(dims_.size()); }
  int dim(int leg) const { return dims_.at(static_cast<std::size_t>(leg)); }
  Eigen::Index size() const { return entries_.size(); }
  const ComplexVector& entries() const { return entries_; }

  Eigen::Index linear_index(const MultiIndex& idx) const {
    detail::require(idx.size() == dims_.size(), "tensor: index has wrong length");
    Eigen::Index lin = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      detail::require(idx[k] >= 0 && idx[k] < dims_[k], "tensor: index out of range");
      lin = lin * dims_[k] + idx[k];
    }
    return lin;
  }

  MultiIndex multi_index(Eigen::Index lin) const {
    MultiIndex idx(dims_.size());
    for (std::size_t k = dims_.size(); k-- > 0;) {
      idx[k] = static_cast<int>(lin % dims_[k]);
      lin /= dims_[k];
    }
    return idx;
  }

  Complex operator()(const MultiIndex& idx) const { return entries_[linear_index(idx)]; }
  void set(const MultiIndex& idx, Complex value) { entries_[linear_index(idx)] = value; }

  double norm() const { return entries_.norm(); }
  bool is_zero() const { return entries_.size() == 0 || entries_.cwiseAbs().maxCoeff() == 0.0; }

  Tensor normalized() const {
    detail::require(!is_zero(), "tensor: cannot normalize the zero tensor");
    return Tensor(dims_, entries_ / norm());
  }

  Tensor scaled(Complex c) const { return Tensor(dims_, entries_ * c); }

  /// Applies `m` (size n_leg x n_leg) to one leg.
  Tensor apply_on_leg(int leg, const Matrix& m) const {
    detail::require(leg >= 0 && leg < order(), "tensor: leg out of range");
    const int n = dims_[leg];
    detail::require(m.rows() == n && m.cols() == n, "tensor: leg operator has wrong shape");
    const Eigen::Index before = detail::product(dims_, 0, leg);
    const Eigen::Index after = detail::product(dims_, leg + 1);
    ComplexVector out(entries_.size());
    for (Eigen::Index a = 0; a < before; ++a) {
      detail::ConstRowMajorMap in(entries_.data() + a * n * after, n, after);
      detail::RowMajorMap dst(out.data() + a * n * after, n, after);
      dst.noalias() = m * in;
    }
    return Tensor(dims_, std::move(out));
  }

 private:
  void validate_dims() const {
    detail::require(dims_.size() >= 2, "tensor: order d must be at least 2");
    for (int n : dims_) detail::require(n >= 1, "tensor: dims must be positive");
  }

  Dims dims_;
  ComplexVector entries_;
};

/// Tuple of invertible leg operators g = (g_1, ..., g_d).
struct GroupElement {
  std::vector<Matrix> factors;
  bool unitary = false;

  static GroupElement identity(const Dims& dims) {
    GroupElement g;
    for (int n : dims) g.factors.push_back(Matrix::Identity(n, n));
    g.unitary = true;
    return g;
  }

  int order() const { return static_cast<int>(factors.size()); }

  /// Checks shapes against `dims`, invertibility (condition number) and, when
  /// flagged, unitarity to 1e-10.
  void validate(const Dims& dims, double max_condition = 1e12) const {
    detail::require(factors.size() == dims.size(), "group element: wrong number of factors");
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const Matrix& f = factors[k];
      detail::require(f.rows() == dims[k] && f.cols() == dims[k],
                      "group element: factor " + std::to_string(k + 1) + " has wrong shape");
      detail::require(condition_number(f) < max_condition,
                      "group element: factor " + std::to_string(k + 1) + " is singular");
      if (unitary)
        detail::require(is_unitary(f), "group element: factor " + std::to_string(k + 1) + " is not unitary");
    }
  }

  /// this * other, factor-wise.
  GroupElement compose(const GroupElement& other) const {
    GroupElement out;
    out.unitary = unitary && other.unitary;
    for (std::size_t k = 0; k < factors.size(); ++k) out.factors.push_back(factors[k] * other.factors.at(k));
    return out;
  }
};

/// Set of index tuples where a tensor is (numerically) nonzero, sorted row-major.
struct SupportSet {
  Dims dims;
  std::vector<MultiIndex> points;

  int order() const { return static_cast<int>(dims.size()); }
  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  bool operator==(const SupportSet& o) const { return dims == o.dims && points == o.points; }
  bool operator<(const SupportSet& o) const {
    return dims != o.dims ? dims < o.dims : points < o.points;
  }
};

/// List of m complex n x n matrices (A_1, ..., A_m).
struct MatrixTuple {
  int n = 0;
  std::vector<Matrix> mats;

  void validate() const {
    detail::require(n >= 1, "matrix tuple: n must be positive");
    detail::require(!mats.empty(), "matrix tuple: at least one matrix required");
    for (std::size_t k = 0; k < mats.size(); ++k)
      detail::require(mats[k].rows() == n && mats[k].cols() == n,
                      "matrix tuple: mats[" + std::to_string(k) + "] is not n x n");
  }
  int count() const { return static_cast<int>(mats.size()); }
};

// --- constructors --------------------------------------------------------

/// Unit tensor <r> of order d: ones on the diagonal.
inline Tensor make_unit(int r, int d) {
  detail::require(r >= 1, "make_unit: r must be at least 1");
  detail::require(d >= 2, "make_unit: d must be at least 2");
  Tensor t(Dims(d, r));
  for (int i = 0; i < r; ++i) t.set(MultiIndex(d, i), 1.0);
  return t;
}

/// W tensor e_2 x e_1 x ... x e_1 + ... + e_1 x ... x e_2 of order d.
inline Tensor make_w(int d = 3) {
  detail::require(d >= 2, "make_w: d must be at least 2");
  Tensor t(Dims(d, 2));
  for (int k = 0; k < d; ++k) {
    MultiIndex idx(d, 0);
    idx[k] = 1;
    t.set(idx, 1.0);
  }
  return t;
}

/// Matrix multiplication tensor <l,m,n> = sum e_(ij) x e_(jk) x e_(ki).
inline Tensor make_matmul(int l, int m, int n) {
  detail::require(l >= 1 && m >= 1 && n >= 1, "make_matmul: sizes must be positive");
  Tensor t(Dims{l * m, m * n, n * l});
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < n; ++k) t.set({i * m + j, j * n + k, k * l + i}, 1.0);
  return t;
}

/// n x n x m tensor with t_{ijk} = (A_k)_{ij}.
inline Tensor tuple_to_tensor(const MatrixTuple& a) {
  a.validate();
  Tensor t(Dims{a.n, a.n, a.count()});
  for (int k = 0; k < a.count(); ++k)
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < a.n; ++j) t.set({i, j, k}, a.mats[k](i, j));
  return t;
}

inline MatrixTuple tensor_to_tuple(const Tensor& t) {
  detail::require(t.order() == 3 && t.dim(0) == t.dim(1), "tensor_to_tuple: need an n x n x m tensor");
  MatrixTuple a;
  a.n = t.dim(0);
  for (int k = 0; k < t.dim(2); ++k) {
    Matrix m(a.n, a.n);
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < a.n; ++j) m(i, j) = t({i, j, k});
    a.mats.push_back(m);
  }
  return a;
}

// --- algebra -------------------------------------------------------------

/// Kronecker product of tensors; leg k pairs (i_k, j_k) -> i_k * m_k + j_k.
inline Tensor tensor_product(const Tensor& s, const Tensor& t) {
  detail::require(s.order() == t.order(), "tensor_product: order mismatch");
  const int d = s.order();
  Dims dims(d);
  for (int k = 0; k < d; ++k) dims[k] = s.dim(k) * t.dim(k);
  Tensor out(dims);
  ComplexVector entries = ComplexVector::Zero(out.size());
  for (Eigen::Index a = 0; a < s.size(); ++a) {
    const Complex sa = s.entries()[a];
    if (sa == 0.0) continue;
    const MultiIndex i = s.multi_index(a);
    for (Eigen::Index b = 0; b < t.size(); ++b) {
      const Complex tb = t.entries()[b];
      if (tb == 0.0) continue;
      const MultiIndex j = t.multi_index(b);
      Eigen::Index lin = 0;
      for (int k = 0; k < d; ++k) lin = lin * dims[k] + (i[k] * t.dim(k) + j[k]);
      entries[lin] = sa * tb;
    }
  }
  return Tensor(dims, std::move(entries));
}

/// Block-diagonal direct sum: s occupies the leading indices, t the trailing ones.
inline Tensor direct_sum(const Tensor& s, const Tensor& t) {
  detail::require(s.order() == t.order(), "direct_sum: order mismatch");
  const int d = s.order();
  Dims dims(d);
  for (int k = 0; k < d; ++k) dims[k] = s.dim(k) + t.dim(k);
  Tensor out(dims);
  for (Eigen::Index a = 0; a < s.size(); ++a)
    if (s.entries()[a] != 0.0) out.set(s.multi_index(a), s.entries()[a]);
  for (Eigen::Index b = 0; b < t.size(); ++b) {
    if (t.entries()[b] == 0.0) continue;
    MultiIndex j = t.multi_index(b);
    for (int k = 0; k < d; ++k) j[k] += s.dim(k);
    out.set(j, t.entries()[b]);
  }
  return out;
}

/// (g_1 x ... x g_d) t.
inline Tensor apply_group(const GroupElement& g, const Tensor& t, double max_condition = 1e12) {
  g.validate(t.dims(), max_condition);
  Tensor out = t;
  for (int k = 0; k < t.order(); ++k) out = out.apply_on_leg(k, g.factors[k]);
  return out;
}

/// Same as apply_group without the invertibility check; used internally where the
/// factors come from well-defined PD or unitary updates.
inline Tensor apply_factors(const std::vector<Matrix>& factors, const Tensor& t) {
  Tensor out = t;
  for (int k = 0; k < t.order(); ++k)
    if (k < static_cast<int>(factors.size()) && factors[k].size() > 0) out = out.apply_on_leg(k, factors[k]);
  return out;
}

/// i-th flattening: n_i x prod_{j != i} n_j, co-index row-major over the other legs.
inline Matrix flattening(const Tensor& t, int leg) {
  detail::require(leg >= 0 && leg < t.order(), "flattening: leg out of range");
  const int n = t.dim(leg);
  const Eigen::Index before = detail::product(t.dims(), 0, leg);
  const Eigen::Index after = detail::product(t.dims(), leg + 1);
  Matrix f(n, before * after);
  for (Eigen::Index a = 0; a < before; ++a) {
    detail::ConstRowMajorMap blk(t.entries().data() + a * n * after, n, after);
    f.middleCols(a * after, after) = blk;
  }
  return f;
}

/// Unnormalized Gram matrix of the leg-i flattening, sum_a X_a X_a^dagger.
inline Matrix leg_gram(const Tensor& t, int leg) {
  detail::require(leg >= 0 && leg < t.order(), "marginal: leg out of range");
  const int n = t.dim(leg);
  const Eigen::Index before = detail::product(t.dims(), 0, leg);
  const Eigen::Index after = detail::product(t.dims(), leg + 1);
  Matrix g = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < before; ++a) {
    detail::ConstRowMajorMap blk(t.entries().data() + a * n * after, n, after);
    g.noalias() += blk * blk.adjoint();
  }
  return g;
}

/// Quantum marginal rho_i = t_i t_i^dagger / ||t||^2 (trace one, PSD).
inline Matrix marginal(const Tensor& t, int leg) {
  detail::require(!t.is_zero(), "marginal: zero tensor");
  Matrix g = leg_gram(t, leg);
  g /= t.entries().squaredNorm();
  return 0.5 * (g + g.adjoint());
}

/// Index tuples with |t| > eta * max|t| (eta = 0: exact nonzero test).
inline SupportSet support(const Tensor& t, double eta = kDefaultEta) {
  detail::require(!t.is_zero(), "support: zero tensor");
  detail::require(eta >= 0.0, "support: eta must be nonnegative");
  const double cut = eta * t.entries().cwiseAbs().maxCoeff();
  SupportSet s{t.dims(), {}};
  for (Eigen::Index a = 0; a < t.size(); ++a)
    if (std::abs(t.entries()[a]) > cut) s.points.push_back(t.multi_index(a));
  return s;
}

}  // namespace spectrumkit
