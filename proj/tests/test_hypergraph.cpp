#include <gtest/gtest.h>

#include <limits>

#include <spectrumkit/hypergraph.hpp>

#include "test_util.hpp"

using namespace spectrumkit;

namespace {

Hypergraph w_graph() { return hypergraph_of(make_w(), 0.0); }

/// Oracle: exhaustive min over vertex subsets of sum_i |C_i|^{1/xi_i}.
double brute_force_cover(const Hypergraph& h, const RealVector& xi) {
  int nv = 0;
  std::vector<int> off{0};
  for (int n : h.parts) off.push_back(nv += n);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << nv); ++mask) {
    bool ok = true;
    for (int i = 0; i < h.order() && ok; ++i)
      if (xi[i] == 0.0)
        for (int v = 0; v < h.parts[i]; ++v)
          if (mask >> (off[i] + v) & 1u) ok = false;
    if (!ok) continue;
    for (const MultiIndex& e : h.edges) {
      bool hit = false;
      for (int i = 0; i < h.order(); ++i) hit = hit || (mask >> (off[i] + e[i]) & 1u);
      if (!hit) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    double f = 0.0;
    for (int i = 0; i < h.order(); ++i) {
      int c = 0;
      for (int v = 0; v < h.parts[i]; ++v) c += mask >> (off[i] + v) & 1u;
      if (c > 0) f += std::pow(c, 1.0 / xi[i]);
    }
    best = std::min(best, f);
  }
  return best;
}

Hypergraph random_hypergraph(const Dims& parts, int max_edges, std::uint64_t seed) {
  Rng rng(seed);
  Hypergraph h{parts, {}};
  std::set<MultiIndex> seen;
  std::uniform_int_distribution<int> count(1, max_edges);
  const int m = count(rng);
  for (int k = 0; k < 4 * m && static_cast<int>(seen.size()) < m; ++k) {
    MultiIndex e;
    for (int n : parts) e.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));
    seen.insert(e);
  }
  h.edges.assign(seen.begin(), seen.end());
  return h;
}

int brute_force_matching(const BipartiteGraph& b) {
  // Simple augmenting paths (Kuhn) as an independent oracle.
  std::vector<int> mr(b.right, -1);
  int size = 0;
  for (int u = 0; u < b.left; ++u) {
    std::vector<char> seen(b.right, 0);
    std::function<bool(int)> aug = [&](int x) {
      for (const auto& [l, r] : b.edges)
        if (l == x && !seen[r]) {
          seen[r] = 1;
          if (mr[r] < 0 || aug(mr[r])) {
            mr[r] = x;
            return true;
          }
        }
      return false;
    };
    if (aug(u)) ++size;
  }
  return size;
}

}  // namespace

TEST(HypergraphOf, Examples) {
  const Hypergraph u = hypergraph_of(make_unit(2, 3), 0.0);
  EXPECT_EQ(u.parts, (Dims{2, 2, 2}));
  EXPECT_EQ(u.num_edges(), 2u);
  EXPECT_EQ(w_graph().num_edges(), 3u);
  EXPECT_EQ(hypergraph_of(make_matmul(2, 2, 2), 0.0).num_edges(), 8u);
}

TEST(Hypergraph, Validation) {
  Hypergraph h{{2, 2}, {{0, 0}, {0, 0}}};
  EXPECT_THROW(h.validate(), InvalidArgument);
  h.edges = {{0, 2}};
  EXPECT_THROW(h.validate(), InvalidArgument);
}

TEST(KroneckerPower, Examples) {
  const Hypergraph u2 = kronecker_power(hypergraph_of(make_unit(2, 3), 0.0), 2);
  EXPECT_EQ(u2.parts, (Dims{4, 4, 4}));
  EXPECT_EQ(u2.num_edges(), 4u);
  EXPECT_NEAR(fractional_vertex_cover(u2, ThetaWeights::ones_alpha(3)).value, 4.0, 1e-9);
  EXPECT_EQ(kronecker_power(w_graph(), 2).num_edges(), 9u);
  const Hypergraph h = w_graph();
  EXPECT_EQ(kronecker_power(h, 1).edges, h.edges);
  EXPECT_THROW(kronecker_power(h, 0), InvalidArgument);
}

TEST(KroneckerPower, MatchesTensorPowerSupport) {
  const Tensor w = make_w();
  const Hypergraph direct = hypergraph_of(tensor_product(w, w), 0.0);
  Hypergraph power = kronecker_power(w_graph(), 2);
  std::sort(power.edges.begin(), power.edges.end());
  EXPECT_EQ(power.edges, direct.edges);
}

TEST(KroneckerPower, Cap) {
  const Hypergraph h = hypergraph_of(make_matmul(2, 2, 2), 0.0);
  EXPECT_THROW(kronecker_power(h, 7), ResourceLimit);
  EXPECT_THROW(kronecker_power(h, 3, 100), ResourceLimit);
}

TEST(VertexCover, Examples) {
  const ThetaWeights ones = ThetaWeights::ones_xi(3);
  for (int r = 1; r <= 4; ++r) EXPECT_DOUBLE_EQ(vertex_cover(hypergraph_of(make_unit(r, 3), 0.0), ones).value, r);
  EXPECT_DOUBLE_EQ(vertex_cover(w_graph(), ones).value, 2.0);
  EXPECT_DOUBLE_EQ(brute_force_cover(w_graph(), RealVector::Ones(3)), 2.0);
  const Hypergraph w2 = kronecker_power(w_graph(), 2);
  // Three vertices suffice: the (1,1) vertex of each part covers the pairs of
  // edges avoiding that part's "2", and every pair avoids at least one part.
  const VertexCover c = vertex_cover(w2, ones);
  EXPECT_DOUBLE_EQ(brute_force_cover(w2, RealVector::Ones(3)), 3.0);
  EXPECT_DOUBLE_EQ(c.value, 3.0);
}

TEST(VertexCover, ReturnedCoverIsValid) {
  const Hypergraph h = random_hypergraph({3, 3, 3}, 8, 4);
  const VertexCover c = vertex_cover(h, ThetaWeights::ones_xi(3));
  double size = 0;
  for (const MultiIndex& e : h.edges) {
    bool hit = false;
    for (int i = 0; i < 3; ++i)
      hit = hit || std::find(c.cover[i].begin(), c.cover[i].end(), e[i]) != c.cover[i].end();
    EXPECT_TRUE(hit);
  }
  for (const auto& part : c.cover) size += part.size();
  EXPECT_DOUBLE_EQ(size, c.value);
}

TEST(VertexCover, WeightedMatchesBruteForce) {
  std::vector<RealVector> weights;
  RealVector a(3), b(3), z(3);
  a << 1.0, 0.5, 1.0;
  b << 1.0, 1.0 / 3, 0.5;
  z << 1.0, 0.0, 1.0;
  weights = {RealVector::Ones(3), a, b, z};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Hypergraph h = random_hypergraph({3, 3, 2}, 8, seed);
    for (const RealVector& xi : weights)
      EXPECT_NEAR(vertex_cover(h, ThetaWeights::xi(xi)).value, brute_force_cover(h, xi), 1e-9)
          << "seed " << seed << " xi " << xi.transpose();
  }
}

TEST(VertexCover, EmptyGraph) {
  EXPECT_EQ(vertex_cover(Hypergraph{{2, 2, 2}, {}}, ThetaWeights::ones_xi(3)).value, 0.0);
}

TEST(FractionalCover, Examples) {
  const ThetaWeights ones = ThetaWeights::ones_alpha(3);
  for (int r = 1; r <= 3; ++r)
    EXPECT_NEAR(fractional_vertex_cover(hypergraph_of(make_unit(r, 3), 0.0), ones).value, r, 1e-9);
  const FractionalCover w = fractional_vertex_cover(w_graph(), ones);
  EXPECT_NEAR(w.value, 1.5, 1e-9);
  EXPECT_NEAR(w.matching.sum(), 1.5, 1e-9);
  RealVector a(3);
  a << 2.0, 1.0, 1.0;
  const ThetaWeights alpha = ThetaWeights::alpha(a);
  EXPECT_NEAR(fractional_vertex_cover(w_graph(), alpha).value, fractional_cover_via_polytope(w_graph(), alpha), 1e-6);
}

TEST(FractionalCover, LpDualityAndPolytopeRoute) {
  Rng rng(77);
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Hypergraph h = random_hypergraph({3, 4, 3}, 10, 100 + seed);
    RealVector a(3);
    for (int i = 0; i < 3; ++i) a[i] = pos(rng);
    const ThetaWeights alpha = ThetaWeights::alpha(a);
    const FractionalCover f = fractional_vertex_cover(h, alpha);
    EXPECT_NEAR(f.value, f.dual_value, 1e-9);
    EXPECT_NEAR(f.value, f.matching.sum(), 1e-9);
    EXPECT_NEAR(f.value, fractional_cover_via_polytope(h, alpha), 1e-6);
  }
}

TEST(AsymptoticCover, Examples) {
  const ThetaWeights ones = ThetaWeights::ones_xi(3);
  EXPECT_NEAR(asymptotic_vertex_cover(hypergraph_of(make_unit(3, 3), 0.0), ones), 3.0, 1e-8);
  EXPECT_NEAR(asymptotic_vertex_cover(w_graph(), ones), 1.8898815748423097, 1e-8);
  EXPECT_NEAR(asymptotic_vertex_cover(Hypergraph{{2, 2, 2}, {{1, 0, 1}}}, ones), 1.0, 1e-12);
  EXPECT_THROW(asymptotic_vertex_cover(Hypergraph{{2, 2, 2}, {}}, ones), InvalidArgument);
}

TEST(Covers, SandwichAndMonotonicity) {
  const ThetaWeights xi = ThetaWeights::ones_xi(3);
  const ThetaWeights alpha = ThetaWeights::ones_alpha(3);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Hypergraph h = random_hypergraph({3, 3, 3}, 8, 500 + seed);
    const double tf = fractional_vertex_cover(h, alpha).value;
    const double ta = asymptotic_vertex_cover(h, xi);
    const double ti = vertex_cover(h, xi).value;
    EXPECT_LE(tf, ta + 1e-6);
    EXPECT_LE(ta, ti + 1e-6);
    // Add an edge not yet present.
    for (int a = 0; a < 27; ++a) {
      MultiIndex e{a / 9, (a / 3) % 3, a % 3};
      if (std::find(h.edges.begin(), h.edges.end(), e) == h.edges.end()) {
        h.edges.push_back(e);
        break;
      }
    }
    EXPECT_GE(fractional_vertex_cover(h, alpha).value, tf - 1e-9);
    EXPECT_GE(asymptotic_vertex_cover(h, xi), ta - 1e-8);
    EXPECT_GE(vertex_cover(h, xi).value, ti);
  }
}

TEST(Bipartite, Examples) {
  BipartiteGraph perfect{3, 3, {{0, 0}, {1, 1}, {2, 2}}};
  EXPECT_EQ(bipartite_vertex_cover(perfect).size, 3);
  BipartiteGraph small{2, 2, {{0, 0}, {0, 1}, {1, 1}}};
  EXPECT_EQ(bipartite_vertex_cover(small).size, 2);
  BipartiteGraph empty{4, 4, {}};
  const BipartiteCover c = bipartite_vertex_cover(empty);
  EXPECT_EQ(c.size, 0);
  EXPECT_TRUE(c.left_cover.empty() && c.right_cover.empty());
}

TEST(Bipartite, KonigOnRandomGraphs) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int l = std::uniform_int_distribution<int>(1, 12)(rng);
    const int r = std::uniform_int_distribution<int>(1, 12)(rng);
    const double density = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    std::bernoulli_distribution coin(density);
    BipartiteGraph b{l, r, {}};
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < r; ++j)
        if (coin(rng)) b.edges.push_back({i, j});
    const BipartiteCover c = bipartite_vertex_cover(b);
    EXPECT_EQ(static_cast<int>(c.matching.size()), c.size);
    EXPECT_EQ(static_cast<int>(c.left_cover.size() + c.right_cover.size()), c.size);
    EXPECT_EQ(c.size, brute_force_matching(b));
    for (const auto& [i, j] : b.edges)
      EXPECT_TRUE(std::binary_search(c.left_cover.begin(), c.left_cover.end(), i) ||
                  std::binary_search(c.right_cover.begin(), c.right_cover.end(), j));
  }
}
