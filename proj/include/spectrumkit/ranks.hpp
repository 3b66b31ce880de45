#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "basis_search.hpp"
#include "convex.hpp"
#include "functionals.hpp"
#include "hypergraph.hpp"
#include "nelder_mead.hpp"
#include "parallel.hpp"

namespace spectrumkit {

/// One route's value. Integer routes that round keep the pre-rounding value in `raw`.
struct RouteValue {
  double value = 0.0;
  std::optional<double> raw;
  bool integral = false;

  double comparable() const { return raw.value_or(value); }
};

struct RankReport {
  std::string quantity;  // "slice", "gstable", "ncrank"
  double value = 0.0;
  std::map<std::string, RouteValue> routes;
  double gap = 0.0;
  std::string status = "ok";  // "ok", "warning", "disagree"
  bool converged = true;
  std::vector<std::string> notes;

  RealVector theta;
  GroupElement basis;
  std::string origin;
  SupportSet support;
  JointDistribution distribution;
  MarginalTuple witness;
  std::optional<FractionalCover> cover;
  std::optional<BipartiteCover> bipartite;
};

struct RankOptions {
  SearchConfig search;
  int ncrank_restarts = 40;
  double grid_step = 0.0;  // 0: 1/64 for order 3, 1/16 for higher orders
  int refine_starts = 3;
  double agreement_tol = 2e-3;
  int blowup_trials = 3;
  int blowup_max = 0;  // 0: n + 1
};

/// Half-up rounding.
inline long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

namespace detail {

/// All theta = k / steps with k a composition of `steps` into d parts, lexicographic.
inline std::vector<RealVector> simplex_grid(int d, int steps) {
  std::vector<RealVector> out;
  std::vector<int> k(static_cast<std::size_t>(d), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == d - 1) {
      k[static_cast<std::size_t>(pos)] = left;
      RealVector th(d);
      for (int i = 0; i < d; ++i) th[i] = static_cast<double>(k[static_cast<std::size_t>(i)]) / steps;
      out.push_back(th);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      k[static_cast<std::size_t>(pos)] = a;
      rec(pos + 1, left - a);
    }
  };
  rec(0, steps);
  return out;
}

inline void finish_real_report(RankReport& r, double tol) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [name, v] : r.routes) {
    lo = std::min(lo, v.comparable());
    hi = std::max(hi, v.comparable());
  }
  r.gap = hi - lo;
  if (!(r.gap <= tol)) r.status = "disagree";
}

inline BipartiteGraph bipartite_of_support(const SupportSet& s) {
  BipartiteGraph b{s.dims[0], s.dims[1], {}};
  for (const MultiIndex& p : s.points) b.edges.push_back({p[0], p[1]});
  std::sort(b.edges.begin(), b.edges.end());
  b.edges.erase(std::unique(b.edges.begin(), b.edges.end()), b.edges.end());
  return b;
}

}  // namespace detail

/// SR~_xi(t) by two routes:
///   theta_min:     min over theta of F_theta(t)^{1 / <theta, xi>} (grid, then Nelder-Mead);
///   support_cover: min over bases g of the asymptotic xi-cover of the support hypergraph of g.t.
inline RankReport asymptotic_slice_rank(const Tensor& t, const ThetaWeights& xi, const RankOptions& opt = {}) {
  detail::require(!t.is_zero(), "asymptotic_slice_rank: zero tensor");
  xi.validate();
  detail::require(xi.role == ThetaWeights::Role::kXi, "asymptotic_slice_rank: weights must be in the xi role");
  const int d = t.order();
  detail::require(xi.size() == d, "asymptotic_slice_rank: xi length differs from order");
  RankReport r;
  r.quantity = "slice";

  // Objective-only stopping: on non-stable tensors the spectra keep drifting long
  // after the value has settled.
  ScalingOptions so;
  so.tol = 1e-9;
  so.spectrum_tol = std::numeric_limits<double>::infinity();
  so.max_iter = 20000;
  // Each run yields h = (H(p_1), ..., H(p_d)) of a point of the moment polytope, so
  // theta . h <= log2 F_theta for every theta. Grid runs are short; their values are
  // lifted by the planes of all grid runs.
  auto entropies = [&](const RealVector& theta, int max_iter) {
    ScalingOptions o = so;
    o.max_iter = max_iter;
    const ScalingResult q = entropic_scaling_run(t, theta / theta.sum(), o);
    RealVector h(d);
    for (int j = 0; j < d; ++j) h[j] = shannon_entropy(q.spectra[j]);
    return std::pair{std::max(q.bits, theta.dot(h) / theta.sum()), h};
  };
  const double step = opt.grid_step > 0.0 ? opt.grid_step : (d == 3 ? 1.0 / 64 : 1.0 / 16);
  const int steps = std::max(1, static_cast<int>(std::lround(1.0 / step)));
  const std::vector<RealVector> grid = detail::simplex_grid(d, steps);
  const auto runs = parallel_map(grid.size(), opt.search.jobs, [&](std::size_t k) { return entropies(grid[k], 1000); });
  Eigen::MatrixXd planes(d, static_cast<Eigen::Index>(runs.size()));
  for (std::size_t k = 0; k < runs.size(); ++k) planes.col(static_cast<Eigen::Index>(k)) = runs[k].second;
  auto lifted = [&](const RealVector& theta, double bits) {
    return std::max(bits, (theta.transpose() * planes).maxCoeff());
  };
  // log2 of F_theta^{1/<theta,xi>}; +inf outside the simplex or where <theta,xi> = 0.
  auto ratio = [&](const RealVector& theta, double bits) {
    const double w = theta.dot(xi.values);
    if (theta.minCoeff() < 0.0 || w <= 1e-12) return std::numeric_limits<double>::infinity();
    return lifted(theta, bits) / w;
  };
  std::vector<double> vals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = ratio(grid[k], runs[k].first);

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  double best = vals[order[0]];
  RealVector best_theta = grid[order[0]];
  const int starts = std::min<int>(opt.refine_starts, static_cast<int>(grid.size()));
  auto to_theta = [d](const RealVector& x) {
    RealVector th(d);
    th.head(d - 1) = x;
    th[d - 1] = 1.0 - x.sum();
    return th;
  };
  const std::vector<NelderMeadResult> refined =
      parallel_map(static_cast<std::size_t>(starts), opt.search.jobs, [&](std::size_t k) {
        NelderMeadOptions nm;
        nm.initial_step = 0.5 / steps;
        nm.ftol = 1e-9;
        nm.xtol = 1e-5;
        nm.max_evals = 150;
        return nelder_mead(
            [&](const RealVector& x) {
              const RealVector th = to_theta(x);
              if (th.minCoeff() < 0.0 || th.dot(xi.values) <= 1e-12) return std::numeric_limits<double>::infinity();
              return ratio(th, entropies(th, 4000).first);
            },
            grid[order[k]].head(d - 1), nm);
      });
  for (const NelderMeadResult& nm : refined)
    if (nm.value < best) {
      best = nm.value;
      best_theta = to_theta(nm.x);
    }
  if (!std::isfinite(best)) throw InvalidArgument("asymptotic_slice_rank: no theta with <theta, xi> > 0");
  best_theta = best_theta.cwiseMax(0.0);
  best_theta /= best_theta.sum();
  so.tol = 1e-10;
  so.max_iter = 200000;
  const ScalingResult q = entropic_scaling_run(t, best_theta, so);
  r.routes["theta_min"] = RouteValue{std::exp2(std::min(best, ratio(best_theta, q.bits))), std::nullopt, false};
  r.theta = best_theta;
  r.witness = q.spectra;
  r.converged = q.trace.converged;

  const SearchResult sb = search_bases(
      t, [&](const SupportSet& s) { return asymptotic_vertex_cover(Hypergraph{s.dims, s.points}, xi); }, opt.search, {},
      {q.trace.group});
  const MaxMinEntropy mm = max_min_weighted_entropy(sb.support, xi);
  r.routes["support_cover"] = RouteValue{std::exp2(mm.bits), std::nullopt, false};
  r.basis = sb.basis;
  r.origin = sb.origin;
  r.support = sb.support;
  r.distribution = mm.distribution;

  r.value = std::min(r.routes["theta_min"].value, r.routes["support_cover"].value);
  detail::finish_real_report(r, opt.agreement_tol);
  return r;
}

/// rk^G_alpha(t) by two routes:
///   fractional_cover: min over bases g of the fractional alpha-cover of the support hypergraph of g.t;
///   moment_linf:      1 / min over the moment polytope of max_i ||p_i||_inf / alpha_i.
inline RankReport g_stable_rank(const Tensor& t, const ThetaWeights& alpha, const RankOptions& opt = {}) {
  detail::require(!t.is_zero(), "g_stable_rank: zero tensor");
  alpha.validate();
  detail::require(alpha.role == ThetaWeights::Role::kAlpha, "g_stable_rank: weights must be in the alpha role");
  detail::require(alpha.size() == t.order(), "g_stable_rank: alpha length differs from order");
  RankReport r;
  r.quantity = "gstable";

  const MaxNormRatio f(alpha);
  const DescentResult desc = geodesic_descent(t, f);
  r.routes["moment_linf"] = RouteValue{1.0 / desc.value, std::nullopt, false};
  r.witness = desc.spectra;
  r.converged = desc.converged;
  if (!desc.converged) r.notes.push_back("moment descent hit its iteration cap");

  const SearchResult sb = search_bases(
      t, [&](const SupportSet& s) { return fractional_vertex_cover(Hypergraph{s.dims, s.points}, alpha).value; },
      opt.search, {}, {desc.group});
  r.cover = fractional_vertex_cover(Hypergraph{sb.support.dims, sb.support.points}, alpha);
  r.routes["fractional_cover"] = RouteValue{r.cover->value, std::nullopt, false};
  r.basis = sb.basis;
  r.origin = sb.origin;
  r.support = sb.support;
  r.value = r.cover->value;
  detail::finish_real_report(r, opt.agreement_tol);
  return r;
}

/// Tuple restricted to the complements of the common left and right kernels:
/// A'_k = L^dagger A_k R, of shape rows x cols.
struct ReducedTuple {
  int rows = 0;
  int cols = 0;
  std::vector<Matrix> mats;
  bool degenerate = false;

  bool empty() const { return rows == 0 || cols == 0; }

  Tensor tensor() const {
    Tensor t(Dims{rows, cols, static_cast<int>(mats.size())});
    for (int k = 0; k < static_cast<int>(mats.size()); ++k)
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.set({i, j, k}, mats[static_cast<std::size_t>(k)](i, j));
    return t;
  }
};

inline ReducedTuple reduce_tuple(const MatrixTuple& a, double rel_tol = 1e-10) {
  a.validate();
  const int n = a.n, m = a.count();
  Matrix vert(static_cast<Eigen::Index>(n) * m, n), horiz(n, static_cast<Eigen::Index>(n) * m);
  for (int k = 0; k < m; ++k) {
    vert.middleRows(static_cast<Eigen::Index>(k) * n, n) = a.mats[static_cast<std::size_t>(k)];
    horiz.middleCols(static_cast<Eigen::Index>(k) * n, n) = a.mats[static_cast<std::size_t>(k)];
  }
  ReducedTuple out;
  const double top = vert.cwiseAbs().maxCoeff();
  if (top == 0.0) {
    out.degenerate = true;
    return out;
  }
  Eigen::JacobiSVD<Matrix> sv(vert, Eigen::ComputeFullV);
  Eigen::JacobiSVD<Matrix> sh(horiz, Eigen::ComputeFullU);
  const double smax = sv.singularValues()[0];
  int q = 0, p = 0;
  for (Eigen::Index k = 0; k < sv.singularValues().size(); ++k)
    if (sv.singularValues()[k] > rel_tol * smax) ++q;
  for (Eigen::Index k = 0; k < sh.singularValues().size(); ++k)
    if (sh.singularValues()[k] > rel_tol * smax) ++p;
  out.rows = p;
  out.cols = q;
  out.degenerate = p < n || q < n;
  const Matrix right = sv.matrixV().leftCols(q);
  const Matrix left = sh.matrixU().leftCols(p);
  for (const Matrix& mat : a.mats) out.mats.push_back(out.degenerate ? Matrix(left.adjoint() * mat * right) : mat);
  return out;
}

/// Fortin-Reutenauer route: min over bases (g, h) of the bipartite vertex cover
/// number of the support graph of (g A_k h^T). Always an upper bound on ncrk.
inline RankReport ncrank_fr(const MatrixTuple& a, const SearchConfig& cfg) {
  RankReport r;
  r.quantity = "ncrank";
  const ReducedTuple red = reduce_tuple(a);
  if (red.degenerate) r.notes.push_back("tuple has common kernels; computed on the reduced " + std::to_string(red.rows) +
                                        "x" + std::to_string(red.cols) + " tuple");
  if (red.empty()) {
    r.routes["fortin_reutenauer"] = RouteValue{0.0, std::nullopt, true};
    r.bipartite = BipartiteCover{};
    return r;
  }
  ActionSpec lr;
  lr.legs = {true, true, false};
  const SearchResult sb = search_bases(
      red.tensor(), [](const SupportSet& s) { return double(bipartite_vertex_cover(detail::bipartite_of_support(s)).size); },
      cfg, lr);
  r.bipartite = bipartite_vertex_cover(detail::bipartite_of_support(sb.support));
  r.value = r.bipartite->size;
  r.routes["fortin_reutenauer"] = RouteValue{r.value, std::nullopt, true};
  r.basis = sb.basis;
  r.origin = sb.origin;
  r.support = sb.support;
  return r;
}

/// max over e in 1..max_e and random Gaussian B_k of floor(rank(sum_k B_k (x) A_k) / e).
inline int ncrank_blowup(const MatrixTuple& a, int max_e = 0, int trials = 3, std::uint64_t seed = 0) {
  a.validate();
  const int n = a.n;
  if (max_e <= 0) max_e = n + 1;
  int best = 0;
  for (int e = 1; e <= max_e; ++e)
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(1000 * e + trial)));
      Matrix big = Matrix::Zero(static_cast<Eigen::Index>(e) * n, static_cast<Eigen::Index>(e) * n);
      for (const Matrix& ak : a.mats) {
        const Matrix b = gaussian_matrix(e, e, rng);
        for (int i = 0; i < e; ++i)
          for (int j = 0; j < e; ++j) big.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) += b(i, j) * ak;
      }
      best = std::max(best, numerical_rank(big, 1e-9) / e);
      if (best == n) return best;
    }
  return best;
}

struct MomentRank {
  double raw = 0.0;
  long long rounded = 0;
  double l1 = 0.0;  // exact l1 distance at the final point
  int n = 0;        // size of the square tuple the formula ran on
  int offset = 0;   // rank of the generic padding block, subtracted from the formula
  bool converged = true;
  MarginalTuple spectra;
};

/// ncrk = n - (n/2) min over the left-right moment polytope of ||p_1 - u||_1 + ||p_2 - u||_1.
/// Tuples with common kernels are reduced; a rectangular reduction p x q is made square
/// by a block-diagonal generic q x p pencil of rank min(p, q).
inline MomentRank ncrank_moment(const MatrixTuple& a, const DescentOptions& dopt = {}, std::uint64_t seed = 0) {
  MomentRank out;
  const ReducedTuple red = reduce_tuple(a);
  if (red.empty()) return out;
  int n = red.rows;
  std::vector<Matrix> mats = red.mats;
  if (red.rows != red.cols) {
    const int p = red.rows, q = red.cols;
    const int small = std::min(p, q), large = std::max(p, q);
    const int extra = (large + small - 1) / small + 1;
    const int count = std::max(static_cast<int>(mats.size()), extra);
    n = p + q;
    out.offset = small;
    Rng rng(derive_seed(seed, 77));
    std::vector<Matrix> padded;
    for (int k = 0; k < count; ++k) {
      Matrix m = Matrix::Zero(n, n);
      if (k < static_cast<int>(mats.size())) m.topLeftCorner(p, q) = mats[static_cast<std::size_t>(k)];
      if (k < extra) m.bottomRightCorner(q, p) = gaussian_matrix(q, p, rng);
      padded.push_back(std::move(m));
    }
    mats = std::move(padded);
  }
  const Tensor t = tuple_to_tensor(MatrixTuple{n, mats});
  const L1ToUniform f({true, true, false});
  const DescentResult d = geodesic_descent(t, f, {true, true, false}, dopt);
  out.n = n;
  out.l1 = d.value;
  out.raw = n - 0.5 * n * d.value - out.offset;
  out.rounded = round_half_up(out.raw);
  out.converged = d.converged;
  out.spectra = d.spectra;
  return out;
}

/// All three noncommutative rank routes with agreement status.
inline RankReport ncrank(const MatrixTuple& a, const RankOptions& opt = {}) {
  SearchConfig cfg = opt.search;
  cfg.restarts = opt.ncrank_restarts;
  RankReport r = ncrank_fr(a, cfg);
  const int blow = ncrank_blowup(a, opt.blowup_max, opt.blowup_trials, opt.search.seed);
  r.routes["blowup"] = RouteValue{double(blow), std::nullopt, true};
  const MomentRank mr = ncrank_moment(a, {}, opt.search.seed);
  r.routes["moment_l1"] = RouteValue{double(mr.rounded), mr.raw, true};
  r.witness = mr.spectra;
  r.converged = mr.converged;
  if (!mr.converged) r.notes.push_back("moment descent hit its iteration cap");
  if (mr.offset > 0) r.notes.push_back("moment formula ran on a padded " + std::to_string(mr.n) + "x" + std::to_string(mr.n) + " tuple");

  const double fr = r.routes["fortin_reutenauer"].value;
  r.value = fr;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  bool same = true;
  for (const auto& [name, v] : r.routes) {
    lo = std::min(lo, v.comparable());
    hi = std::max(hi, v.comparable());
    same = same && v.value == fr;
  }
  r.gap = hi - lo;
  if (!same || blow > fr) {
    r.status = "disagree";
  } else if (r.gap > 0.25) {
    r.status = "warning";
  }
  return r;
}

}  // namespace spectrumkit
