#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace spectrumkit {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

/// min (or max) c^T x  s.t.  A x (<=,=,>=) b,  lower <= x <= upper.
/// Infinite bounds are allowed; the default is x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constraints;
  std::vector<RowSense> senses;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;  // empty = all zeros
  Eigen::VectorXd upper;  // empty = all +inf
  bool maximize = false;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_rows() const { return constraints.rows(); }

  void validate() const {
    detail::require(constraints.cols() == objective.size() || constraints.rows() == 0,
                    "lp: constraint matrix has wrong column count");
    detail::require(static_cast<Eigen::Index>(senses.size()) == constraints.rows(),
                    "lp: one sense per row required");
    detail::require(rhs.size() == constraints.rows(), "lp: rhs has wrong length");
    detail::require(lower.size() == 0 || lower.size() == objective.size(), "lp: lower bounds have wrong length");
    detail::require(upper.size() == 0 || upper.size() == objective.size(), "lp: upper bounds have wrong length");
  }
};

struct LpSolution {
  double value = 0.0;
  Eigen::VectorXd primal;
  /// Row multipliers y in the sign convention of the problem as stated
  /// (for a minimization: y >= 0 on >= rows, y <= 0 on <= rows).
  Eigen::VectorXd dual;
  /// Reduced costs c - A^T y (in the stated objective sense).
  Eigen::VectorXd reduced_costs;
  double dual_value = 0.0;
  int iterations = 0;

  double duality_gap() const { return std::abs(value - dual_value); }
};

/// Called after every solve_lp when set (debug dumps, audits). Install it before
/// any solver threads start; the callee must be thread-safe.
inline std::function<void(const LinearProgram&, const LpSolution&)>& lp_observer() {
  static std::function<void(const LinearProgram&, const LpSolution&)> observer;
  return observer;
}

namespace detail {

/// Dense two-phase tableau simplex on  min c^T x, A x = b, x >= 0, b >= 0,
/// with Bland's rule. Returns the optimal basis.
class StandardFormSimplex {
 public:
  StandardFormSimplex(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd c, double tol)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), tol_(tol) {}

  /// Returns basis column indices (one per kept row) and the kept rows.
  void solve() {
    const Eigen::Index m = a_.rows();
    const Eigen::Index n = a_.cols();
    // Tableau columns: n structural + m artificial + rhs.
    tab_ = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
    tab_.topLeftCorner(m, n) = a_;
    tab_.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
    tab_.col(n + m).head(m) = b_;
    basis_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) basis_[i] = n + i;
    rows_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) rows_[i] = i;

    // Phase 1: minimize the sum of artificials.
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    set_objective(phase1);
    run(n + m);
    if (-tab_(m, n + m) > tol_ * std::max(1.0, b_.cwiseAbs().sum())) throw Infeasible("lp: infeasible");

    // Drive artificials out of the basis; drop redundant rows.
    for (Eigen::Index i = 0; i < tab_.rows() - 1; ++i) {
      if (basis_[i] < n) continue;
      Eigen::Index pivot_col = -1;
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(tab_(i, j)) > tol_) {
          pivot_col = j;
          break;
        }
      if (pivot_col >= 0) {
        pivot(i, pivot_col);
      } else {
        remove_row(i);
        --i;
      }
    }
    // Phase 2 over structural columns only.
    const Eigen::Index mm = tab_.rows() - 1;
    Eigen::MatrixXd trimmed(mm + 1, n + 1);
    trimmed.leftCols(n) = tab_.leftCols(n);
    trimmed.col(n) = tab_.col(tab_.cols() - 1);
    tab_ = trimmed;
    Eigen::VectorXd c2 = c_;
    set_objective(c2);
    run(n);
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }
  const std::vector<Eigen::Index>& rows() const { return rows_; }
  int iterations() const { return iterations_; }

 private:
  void set_objective(const Eigen::VectorXd& c) {
    const Eigen::Index m = tab_.rows() - 1;
    const Eigen::Index ncols = tab_.cols() - 1;
    tab_.row(m).setZero();
    tab_.row(m).head(ncols) = c.head(ncols).transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double cb = c[basis_[i]];
      if (cb != 0.0) tab_.row(m) -= cb * tab_.row(i);
    }
  }

  void run(Eigen::Index usable_cols) {
    const Eigen::Index m = tab_.rows() - 1;
    const Eigen::Index rhs = tab_.cols() - 1;
    const int max_iter = 50000;
    for (int it = 0; it < max_iter; ++it) {
      // Bland: smallest index with negative reduced cost.
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < usable_cols; ++j)
        if (tab_(m, j) < -tol_) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        const double aij = tab_(i, enter);
        if (aij <= tol_) continue;
        const double ratio = tab_(i, rhs) / aij;
        if (ratio < best - tol_ || (std::abs(ratio - best) <= tol_ && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) throw Unbounded("lp: unbounded");
      pivot(leave, enter);
      ++iterations_;
    }
    throw ResourceLimit("lp: iteration limit");
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    tab_.row(row) /= tab_(row, col);
    for (Eigen::Index i = 0; i < tab_.rows(); ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(row);
    }
    basis_[row] = col;
  }

  void remove_row(Eigen::Index row) {
    const Eigen::Index r = tab_.rows();
    Eigen::MatrixXd t(r - 1, tab_.cols());
    t.topRows(row) = tab_.topRows(row);
    t.bottomRows(r - 1 - row) = tab_.bottomRows(r - 1 - row);
    tab_ = t;
    basis_.erase(basis_.begin() + row);
    rows_.erase(rows_.begin() + row);
  }

  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
  double tol_;
  Eigen::MatrixXd tab_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> rows_;
  int iterations_ = 0;
};

}  // namespace detail

/// Solves a small dense LP exactly up to floating point with a primal simplex
/// (Bland's rule). The final basis is re-solved with LU to recover x and y.
inline LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-9) {
  lp.validate();
  const Eigen::Index n = lp.num_vars();
  const Eigen::Index m = lp.num_rows();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo = lp.lower.size() ? lp.lower : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd hi = lp.upper.size() ? lp.upper : Eigen::VectorXd::Constant(n, inf);
  const Eigen::VectorXd c = lp.maximize ? Eigen::VectorXd(-lp.objective) : lp.objective;

  // Column map: original var j -> (column, sign) pairs with x_j = offset + sum sign * x'_col.
  struct Part {
    Eigen::Index col;
    double sign;
  };
  std::vector<std::vector<Part>> parts(n);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  Eigen::Index ncols = 0;
  std::vector<std::pair<Eigen::Index, double>> upper_rows;  // (var, width)
  for (Eigen::Index j = 0; j < n; ++j) {
    detail::require(!(lo[j] > hi[j]), "lp: lower bound exceeds upper bound");
    if (std::isfinite(lo[j])) {
      offset[j] = lo[j];
      parts[j].push_back({ncols++, 1.0});
      if (std::isfinite(hi[j])) upper_rows.push_back({j, hi[j] - lo[j]});
    } else if (std::isfinite(hi[j])) {
      offset[j] = hi[j];
      parts[j].push_back({ncols++, -1.0});
    } else {
      parts[j].push_back({ncols++, 1.0});
      parts[j].push_back({ncols++, -1.0});
    }
  }
  const Eigen::Index rows = m + static_cast<Eigen::Index>(upper_rows.size());
  // One slack per inequality row.
  std::vector<Eigen::Index> slack_col(rows, -1);
  std::vector<double> slack_sign(rows, 0.0);
  std::vector<RowSense> sense(rows);
  for (Eigen::Index i = 0; i < m; ++i) sense[i] = lp.senses[i];
  for (Eigen::Index i = m; i < rows; ++i) sense[i] = RowSense::kLessEqual;
  for (Eigen::Index i = 0; i < rows; ++i)
    if (sense[i] != RowSense::kEqual) {
      slack_col[i] = ncols++;
      slack_sign[i] = sense[i] == RowSense::kLessEqual ? 1.0 : -1.0;
    }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, ncols);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < m; ++i) {
    double shift = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aij = lp.constraints(i, j);
      if (aij == 0.0) continue;
      shift += aij * offset[j];
      for (const Part& p : parts[j]) a(i, p.col) += aij * p.sign;
    }
    b[i] = lp.rhs[i] - shift;
  }
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    const Eigen::Index i = m + static_cast<Eigen::Index>(k);
    a(i, parts[upper_rows[k].first][0].col) = 1.0;
    b[i] = upper_rows[k].second;
  }
  for (Eigen::Index i = 0; i < rows; ++i)
    if (slack_col[i] >= 0) a(i, slack_col[i]) = slack_sign[i];
  Eigen::VectorXd row_flip = Eigen::VectorXd::Ones(rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] *= -1.0;
      row_flip[i] = -1.0;
    }
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(ncols);
  double c_offset = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    c_offset += c[j] * offset[j];
    for (const Part& p : parts[j]) cs[p.col] += c[j] * p.sign;
  }

  detail::StandardFormSimplex simplex(a, b, cs, tol);
  simplex.solve();
  const auto& basis = simplex.basis();
  const auto& kept = simplex.rows();
  const Eigen::Index mk = static_cast<Eigen::Index>(kept.size());

  // Recover x_B and y from the optimal basis.
  Eigen::MatrixXd bmat(mk, mk);
  Eigen::VectorXd bb(mk), cb(mk);
  for (Eigen::Index i = 0; i < mk; ++i) {
    bb[i] = b[kept[i]];
    cb[i] = cs[basis[i]];
    for (Eigen::Index k = 0; k < mk; ++k) bmat(k, i) = a(kept[k], basis[i]);
  }
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(ncols);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(rows);
  if (mk > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    const Eigen::VectorXd xb = lu.solve(bb);
    for (Eigen::Index i = 0; i < mk; ++i) xs[basis[i]] = std::max(0.0, xb[i]);
    const Eigen::VectorXd yk = bmat.transpose().fullPivLu().solve(cb);
    for (Eigen::Index i = 0; i < mk; ++i) ys[kept[i]] = yk[i] * row_flip[kept[i]];
  }

  LpSolution sol;
  sol.iterations = simplex.iterations();
  sol.primal = offset;
  for (Eigen::Index j = 0; j < n; ++j)
    for (const Part& p : parts[j]) sol.primal[j] += p.sign * xs[p.col];
  const double internal_value = c.dot(sol.primal);
  // Duals on user rows; bound rows fold into reduced costs.
  Eigen::VectorXd y = ys.head(m);
  Eigen::VectorXd d = c;
  if (m > 0) d -= lp.constraints.transpose() * y;
  double dual_value = m > 0 ? lp.rhs.dot(y) : 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (d[j] > tol) {
      dual_value += std::isfinite(lo[j]) ? d[j] * lo[j] : -inf;
    } else if (d[j] < -tol) {
      dual_value += std::isfinite(hi[j]) ? d[j] * hi[j] : -inf;
    } else {
      // Basic or degenerate: the value is pinned by whichever bound is active.
      if (std::isfinite(lo[j]) && std::abs(sol.primal[j] - lo[j]) <= tol)
        dual_value += d[j] * lo[j];
      else if (std::isfinite(hi[j]) && std::abs(sol.primal[j] - hi[j]) <= tol)
        dual_value += d[j] * hi[j];
      else
        dual_value += d[j] * sol.primal[j];
    }
  }
  const double sgn = lp.maximize ? -1.0 : 1.0;
  sol.value = sgn * internal_value;
  sol.dual_value = sgn * dual_value;
  sol.dual = sgn * y;
  sol.reduced_costs = sgn * d;
  (void)c_offset;
  if (const auto& obs = lp_observer()) obs(lp, sol);
  return sol;
}

}  // namespace spectrumkit
