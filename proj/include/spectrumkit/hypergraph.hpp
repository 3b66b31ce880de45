#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "convex.hpp"
#include "distribution.hpp"
#include "entropy_opt.hpp"
#include "errors.hpp"
#include "lp.hpp"
#include "tensor.hpp"

namespace spectrumkit {

/// d-partite d-uniform hypergraph; vertices of part i are 0..parts[i]-1.
struct Hypergraph {
  Dims parts;
  std::vector<MultiIndex> edges;

  int order() const { return static_cast<int>(parts.size()); }
  std::size_t num_edges() const { return edges.size(); }

  void validate() const {
    detail::require(parts.size() >= 2, "hypergraph: at least two parts required");
    for (int n : parts) detail::require(n >= 1, "hypergraph: part sizes must be positive");
    std::set<MultiIndex> seen;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const MultiIndex& e = edges[k];
      detail::require(e.size() == parts.size(), "hypergraph: edge " + std::to_string(k + 1) + " has wrong arity");
      for (std::size_t i = 0; i < e.size(); ++i)
        detail::require(e[i] >= 0 && e[i] < parts[i],
                        "hypergraph: edge " + std::to_string(k + 1) + " index out of range");
      detail::require(seen.insert(e).second, "hypergraph: duplicate edge " + std::to_string(k + 1));
    }
  }

  SupportSet as_support() const {
    SupportSet s{parts, edges};
    std::sort(s.points.begin(), s.points.end());
    return s;
  }
};

/// Bipartite graph on left vertices 0..left-1 and right vertices 0..right-1.
struct BipartiteGraph {
  int left = 0;
  int right = 0;
  std::vector<std::pair<int, int>> edges;

  void validate() const {
    detail::require(left >= 0 && right >= 0, "bipartite graph: negative size");
    for (const auto& [a, b] : edges)
      detail::require(a >= 0 && a < left && b >= 0 && b < right, "bipartite graph: edge index out of range");
  }
};

inline Hypergraph hypergraph_of(const Tensor& t, double eta = kDefaultEta) {
  const SupportSet s = support(t, eta);
  return Hypergraph{s.dims, s.points};
}

/// Support graph of a matrix tuple: (i, j) is an edge iff some A_k(i, j) is nonzero.
inline BipartiteGraph bipartite_of(const MatrixTuple& a, double eta = kDefaultEta) {
  a.validate();
  double top = 0.0;
  for (const Matrix& m : a.mats) top = std::max(top, m.cwiseAbs().maxCoeff());
  BipartiteGraph b{a.n, a.n, {}};
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      for (const Matrix& m : a.mats)
        if (std::abs(m(i, j)) > eta * top) {
          b.edges.push_back({i, j});
          break;
        }
  return b;
}

/// H^{x n}: part sizes n_i^n, edges E(H)^n with vertex (v, v') -> v * n'_i + v'.
inline Hypergraph kronecker_power(const Hypergraph& h, int n, std::size_t max_edges = 1000000) {
  h.validate();
  detail::require(n >= 1, "kronecker_power: exponent must be at least 1");
  const double count = std::pow(static_cast<double>(h.num_edges()), n);
  if (count > static_cast<double>(max_edges))
    throw ResourceLimit("kronecker_power: " + std::to_string(static_cast<long long>(count)) +
                        " edges exceed the cap of " + std::to_string(max_edges));
  Hypergraph out = h;
  for (int step = 1; step < n; ++step) {
    Hypergraph next;
    for (std::size_t i = 0; i < h.parts.size(); ++i) next.parts.push_back(out.parts[i] * h.parts[i]);
    next.edges.reserve(out.edges.size() * h.edges.size());
    for (const MultiIndex& e : out.edges)
      for (const MultiIndex& f : h.edges) {
        MultiIndex g(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) g[i] = e[i] * h.parts[i] + f[i];
        next.edges.push_back(std::move(g));
      }
    out = std::move(next);
  }
  return out;
}

struct FractionalCover {
  double value = 0.0;
  std::vector<RealVector> cover;  // u_{i,j}
  RealVector matching;            // y_e, one per edge
  double dual_value = 0.0;
};

/// alpha-weighted fractional vertex cover LP with its dual fractional matching.
inline FractionalCover fractional_vertex_cover(const Hypergraph& h, const ThetaWeights& alpha) {
  h.validate();
  alpha.validate();
  detail::require(alpha.size() == h.order(), "fractional_vertex_cover: weight length differs from order");
  FractionalCover out;
  std::vector<Eigen::Index> offset(h.parts.size() + 1, 0);
  for (std::size_t i = 0; i < h.parts.size(); ++i) offset[i + 1] = offset[i] + h.parts[i];
  for (int n : h.parts) out.cover.push_back(RealVector::Zero(n));
  if (h.edges.empty()) return out;

  const Eigen::Index nv = offset.back();
  const Eigen::Index ne = static_cast<Eigen::Index>(h.edges.size());
  LinearProgram lp;
  lp.objective.resize(nv);
  for (std::size_t i = 0; i < h.parts.size(); ++i)
    lp.objective.segment(offset[i], h.parts[i]).setConstant(alpha[static_cast<int>(i)]);
  lp.constraints = Eigen::MatrixXd::Zero(ne, nv);
  lp.rhs = RealVector::Ones(ne);
  lp.senses.assign(static_cast<std::size_t>(ne), RowSense::kGreaterEqual);
  for (Eigen::Index e = 0; e < ne; ++e)
    for (std::size_t i = 0; i < h.parts.size(); ++i)
      lp.constraints(e, offset[i] + h.edges[static_cast<std::size_t>(e)][i]) = 1.0;
  const LpSolution sol = solve_lp(lp);
  out.value = sol.value;
  out.dual_value = sol.dual_value;
  out.matching = sol.dual.cwiseMax(0.0);
  for (std::size_t i = 0; i < h.parts.size(); ++i) out.cover[i] = sol.primal.segment(offset[i], h.parts[i]);
  return out;
}

/// max over p in the edge polytope of min_i alpha_i / ||p_i||_inf, through the
/// reciprocal program min_P max_i ||p_i||_inf / alpha_i.
inline double fractional_cover_via_polytope(const Hypergraph& h, const ThetaWeights& alpha) {
  h.validate();
  if (h.edges.empty()) return 0.0;
  const SupportMinimum m = MaxNormRatio(alpha).exact_minimum(h.as_support()).value();
  return 1.0 / m.value;
}

/// 2^{max_{p} min_{i: xi_i > 0} H(p_i) / xi_i} over distributions on the edges.
inline double asymptotic_vertex_cover(const Hypergraph& h, const ThetaWeights& xi) {
  h.validate();
  xi.validate();
  detail::require(!h.edges.empty(), "asymptotic_vertex_cover: empty edge set");
  return std::exp2(max_min_weighted_entropy(h.as_support(), xi).bits);
}

struct VertexCover {
  double value = 0.0;
  std::vector<std::vector<int>> cover;  // chosen vertices per part
  std::uint64_t nodes = 0;
};

namespace detail {

class CoverSearch {
 public:
  CoverSearch(const Hypergraph& h, const ThetaWeights& xi) : h_(h), xi_(xi), d_(h.order()) {
    offset_.assign(static_cast<std::size_t>(d_) + 1, 0);
    for (int i = 0; i < d_; ++i) offset_[i + 1] = offset_[i] + h.parts[i];
    nv_ = offset_.back();
    linear_ = true;
    for (int i = 0; i < d_; ++i)
      if (xi_[i] != 1.0) linear_ = false;
    incident_.assign(static_cast<std::size_t>(nv_), {});
    for (std::size_t e = 0; e < h.edges.size(); ++e)
      for (int i = 0; i < d_; ++i) incident_[vertex(i, h.edges[e][i])].push_back(static_cast<int>(e));
    state_.assign(static_cast<std::size_t>(nv_), kFree);
    for (int i = 0; i < d_; ++i)
      if (xi_[i] == 0.0)
        for (int v = 0; v < h.parts[i]; ++v) state_[vertex(i, v)] = kOut;
    cover_count_.assign(h.edges.size(), 0);
    counts_.assign(static_cast<std::size_t>(d_), 0);
  }

  VertexCover run() {
    for (std::size_t e = 0; e < h_.edges.size(); ++e)
      if (dead(static_cast<int>(e))) throw Infeasible("vertex_cover: an edge lies only in excluded parts");
    best_ = std::numeric_limits<double>::infinity();
    greedy_incumbent();
    branch();
    VertexCover out;
    out.value = best_;
    out.nodes = nodes_;
    out.cover.assign(static_cast<std::size_t>(d_), {});
    for (int i = 0; i < d_; ++i)
      for (int v = 0; v < h_.parts[i]; ++v)
        if (best_state_[vertex(i, v)] == kIn) out.cover[i].push_back(v);
    return out;
  }

 private:
  enum State : std::uint8_t { kFree, kIn, kOut };

  std::size_t vertex(int part, int v) const { return static_cast<std::size_t>(offset_[part] + v); }
  int part_of(std::size_t vtx) const {
    int i = 0;
    while (offset_[i + 1] <= static_cast<int>(vtx)) ++i;
    return i;
  }

  double part_cost(int i, int c) const {
    if (c == 0) return 0.0;
    return xi_[i] == 1.0 ? static_cast<double>(c) : std::pow(static_cast<double>(c), 1.0 / xi_[i]);
  }
  double cost() const {
    double f = 0.0;
    for (int i = 0; i < d_; ++i) f += part_cost(i, counts_[i]);
    return f;
  }

  bool dead(int e) const {
    if (cover_count_[e] > 0) return false;
    for (int i = 0; i < d_; ++i)
      if (state_[vertex(i, h_.edges[e][i])] != kOut) return false;
    return true;
  }

  void set_in(std::size_t vtx) {
    state_[vtx] = kIn;
    ++counts_[part_of(vtx)];
    for (int e : incident_[vtx]) ++cover_count_[e];
  }
  void unset_in(std::size_t vtx) {
    state_[vtx] = kFree;
    --counts_[part_of(vtx)];
    for (int e : incident_[vtx]) --cover_count_[e];
  }

  std::vector<int> uncovered() const {
    std::vector<int> u;
    for (std::size_t e = 0; e < h_.edges.size(); ++e)
      if (cover_count_[e] == 0) u.push_back(static_cast<int>(e));
    return u;
  }

  /// Lower bound on the extra cost needed to cover `open`.
  double completion_bound(const std::vector<int>& open) const {
    if (open.empty()) return 0.0;
    if (linear_) {
      // Fractional cover of the open edges on free vertices.
      std::vector<int> col(static_cast<std::size_t>(nv_), -1);
      int nc = 0;
      for (int e : open)
        for (int i = 0; i < d_; ++i) {
          const std::size_t v = vertex(i, h_.edges[e][i]);
          if (state_[v] == kFree && col[v] < 0) col[v] = nc++;
        }
      LinearProgram lp;
      lp.objective = RealVector::Ones(nc);
      lp.constraints = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(open.size()), nc);
      lp.rhs = RealVector::Ones(static_cast<Eigen::Index>(open.size()));
      lp.senses.assign(open.size(), RowSense::kGreaterEqual);
      for (std::size_t r = 0; r < open.size(); ++r)
        for (int i = 0; i < d_; ++i) {
          const std::size_t v = vertex(i, h_.edges[open[r]][i]);
          if (col[v] >= 0) lp.constraints(static_cast<Eigen::Index>(r), col[v]) = 1.0;
        }
      return solve_lp(lp).value - 1e-9;
    }
    // Greedy disjoint open edges: each forces a distinct new vertex; charge the
    // cheapest convex increments over the parts that may still take vertices.
    std::vector<char> used(static_cast<std::size_t>(nv_), 0);
    int m = 0;
    for (int e : open) {
      bool free = true;
      for (int i = 0; i < d_ && free; ++i)
        if (used[vertex(i, h_.edges[e][i])]) free = false;
      if (!free) continue;
      for (int i = 0; i < d_; ++i) used[vertex(i, h_.edges[e][i])] = 1;
      ++m;
    }
    std::vector<int> c = counts_;
    double extra = 0.0;
    for (int k = 0; k < m; ++k) {
      int bi = -1;
      double inc = std::numeric_limits<double>::infinity();
      for (int i = 0; i < d_; ++i) {
        if (xi_[i] == 0.0) continue;
        const double di = part_cost(i, c[i] + 1) - part_cost(i, c[i]);
        if (di < inc) {
          inc = di;
          bi = i;
        }
      }
      ++c[bi];
      extra += inc;
    }
    return extra - 1e-9;
  }

  void greedy_incumbent() {
    std::vector<std::size_t> added;
    for (;;) {
      const std::vector<int> open = uncovered();
      if (open.empty()) break;
      std::size_t pick = pick_vertex(open);
      set_in(pick);
      added.push_back(pick);
    }
    best_ = cost();
    best_state_ = state_;
    for (auto it = added.rbegin(); it != added.rend(); ++it) unset_in(*it);
  }

  /// Free vertex of maximum degree in the open edges; ties by index.
  std::size_t pick_vertex(const std::vector<int>& open) const {
    std::vector<int> deg(static_cast<std::size_t>(nv_), 0);
    for (int e : open)
      for (int i = 0; i < d_; ++i) {
        const std::size_t v = vertex(i, h_.edges[e][i]);
        if (state_[v] == kFree) ++deg[v];
      }
    std::size_t best = 0;
    int bd = -1;
    for (std::size_t v = 0; v < deg.size(); ++v)
      if (deg[v] > bd) {
        bd = deg[v];
        best = v;
      }
    return best;
  }

  void branch() {
    ++nodes_;
    const std::vector<int> open = uncovered();
    const double here = cost();
    if (open.empty()) {
      if (here < best_ - 1e-12) {
        best_ = here;
        best_state_ = state_;
      }
      return;
    }
    for (int e : open)
      if (dead(e)) return;
    if (here + completion_bound(open) >= best_ - 1e-12) return;
    const std::size_t v = pick_vertex(open);
    set_in(v);
    branch();
    unset_in(v);
    state_[v] = kOut;
    branch();
    state_[v] = kFree;
  }

  const Hypergraph& h_;
  const ThetaWeights& xi_;
  int d_;
  std::vector<int> offset_;
  int nv_ = 0;
  bool linear_ = true;
  std::vector<std::vector<int>> incident_;
  std::vector<State> state_;
  std::vector<State> best_state_;
  std::vector<int> cover_count_;
  std::vector<int> counts_;
  double best_ = 0.0;
  std::uint64_t nodes_ = 0;
};

}  // namespace detail

/// Exact xi-weighted vertex cover: min sum_i |C_i|^{1/xi_i} over covers (C_1..C_d),
/// parts with xi_i = 0 excluded. Branch-and-bound, deterministic.
inline VertexCover vertex_cover(const Hypergraph& h, const ThetaWeights& xi) {
  h.validate();
  xi.validate();
  detail::require(xi.size() == h.order(), "vertex_cover: weight length differs from order");
  if (h.edges.empty()) return VertexCover{0.0, std::vector<std::vector<int>>(h.parts.size()), 0};
  return detail::CoverSearch(h, xi).run();
}

struct BipartiteCover {
  int size = 0;
  std::vector<int> left_cover;
  std::vector<int> right_cover;
  std::vector<std::pair<int, int>> matching;
};

/// Maximum matching (Hopcroft-Karp) and a minimum vertex cover of equal size (Konig).
inline BipartiteCover bipartite_vertex_cover(const BipartiteGraph& b) {
  b.validate();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(b.left));
  for (const auto& [u, v] : b.edges) adj[u].push_back(v);
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> match_l(static_cast<std::size_t>(b.left), -1), match_r(static_cast<std::size_t>(b.right), -1);
  std::vector<int> dist(static_cast<std::size_t>(b.left));

  auto bfs = [&] {
    std::queue<int> q;
    bool found = false;
    for (int u = 0; u < b.left; ++u) {
      dist[u] = match_l[u] < 0 ? 0 : inf;
      if (match_l[u] < 0) q.push(u);
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        const int w = match_r[v];
        if (w < 0) {
          found = true;
        } else if (dist[w] == inf) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };
  std::function<bool(int)> dfs = [&](int u) {
    for (int v : adj[u]) {
      const int w = match_r[v];
      if (w < 0 || (dist[w] == dist[u] + 1 && dfs(w))) {
        match_l[u] = v;
        match_r[v] = u;
        return true;
      }
    }
    dist[u] = inf;
    return false;
  };
  BipartiteCover out;
  while (bfs())
    for (int u = 0; u < b.left; ++u)
      if (match_l[u] < 0 && dfs(u)) ++out.size;

  // Konig: Z = vertices reachable from free left vertices by alternating paths;
  // cover = (L \ Z) u (R n Z).
  std::vector<char> zl(static_cast<std::size_t>(b.left), 0), zr(static_cast<std::size_t>(b.right), 0);
  std::queue<int> q;
  for (int u = 0; u < b.left; ++u)
    if (match_l[u] < 0) {
      zl[u] = 1;
      q.push(u);
    }
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (zr[v] || match_l[u] == v) continue;
      zr[v] = 1;
      const int w = match_r[v];
      if (w >= 0 && !zl[w]) {
        zl[w] = 1;
        q.push(w);
      }
    }
  }
  for (int u = 0; u < b.left; ++u)
    if (!zl[u]) out.left_cover.push_back(u);
  for (int v = 0; v < b.right; ++v)
    if (zr[v]) out.right_cover.push_back(v);
  for (int u = 0; u < b.left; ++u)
    if (match_l[u] >= 0) out.matching.push_back({u, match_l[u]});
  return out;
}

}  // namespace spectrumkit
