#include <gtest/gtest.h>

#include <spectrumkit/ranks.hpp>

#include "test_util.hpp"

using namespace spectrumkit;
using testutil::elementary;
using testutil::h2;
using testutil::random_tensor;

namespace {

constexpr double kFW = 1.8898815748423097;

RankOptions fast_options() {
  RankOptions opt;
  opt.search.restarts = 4;
  opt.grid_step = 1.0 / 16;
  opt.ncrank_restarts = 10;
  return opt;
}

Tensor product_state() {
  Tensor t({2, 2, 2});
  t.set({0, 0, 0}, 1.0);
  return t;
}

/// W: weights (w_0, w_1, w_2) on the points with the 1 in leg 0, 1, 2; leg i has
/// marginal (1 - w_i, w_i). Grid oracles for the two support-side programs.
double w_slice_oracle() {
  double best = 0.0;
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    best = std::max(best, std::min({h2(a), h2(b), h2(c)}));
  });
  return std::exp2(best);
}

double w_gstable_oracle() {
  double best = 0.0;
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    const double worst = std::max({a, 1 - a, b, 1 - b, c, 1 - c});
    best = std::max(best, 1.0 / worst);
  });
  return best;
}

}  // namespace

TEST(SimplexGrid, CountsAndSums) {
  EXPECT_EQ(detail::simplex_grid(3, 64).size(), 2145u);
  EXPECT_EQ(detail::simplex_grid(4, 16).size(), 969u);
  for (const RealVector& th : detail::simplex_grid(4, 5)) {
    EXPECT_NEAR(th.sum(), 1.0, 1e-15);
    EXPECT_GE(th.minCoeff(), 0.0);
  }
}

TEST(NelderMead, Quadratic) {
  RealVector x0(2);
  x0 << 0.0, 0.0;
  NelderMeadOptions nm;
  nm.initial_step = 0.1;
  nm.xtol = 1e-8;
  nm.ftol = 1e-14;
  const NelderMeadResult r = nelder_mead(
      [](const RealVector& x) { return std::pow(x[0] - 0.3, 2) + 2 * std::pow(x[1] + 0.2, 2); }, x0, nm);
  EXPECT_NEAR(r.x[0], 0.3, 1e-6);
  EXPECT_NEAR(r.x[1], -0.2, 1e-6);
}

TEST(NelderMead, RespectsInfiniteBarrier) {
  RealVector x0(1);
  x0 << 0.5;
  const NelderMeadResult r = nelder_mead(
      [](const RealVector& x) { return x[0] < 0.25 ? std::numeric_limits<double>::infinity() : x[0]; }, x0);
  EXPECT_NEAR(r.x[0], 0.25, 1e-5);
}

TEST(RoundHalfUp, Values) {
  EXPECT_EQ(round_half_up(1.5), 2);
  EXPECT_EQ(round_half_up(1.4999), 1);
  EXPECT_EQ(round_half_up(2.5), 3);
  EXPECT_EQ(round_half_up(-0.2), 0);
}

TEST(SliceRank, UnitTensors) {
  for (int r = 1; r <= 3; ++r) {
    const RankReport rep = asymptotic_slice_rank(make_unit(r, 3), ThetaWeights::ones_xi(3), fast_options());
    EXPECT_NEAR(rep.value, r, 1e-6);
    EXPECT_EQ(rep.status, "ok");
  }
}

TEST(SliceRank, WBothRoutes) {
  RankOptions opt = fast_options();
  opt.grid_step = 1.0 / 64;
  const RankReport rep = asymptotic_slice_rank(make_w(), ThetaWeights::ones_xi(3), opt);
  const double oracle = w_slice_oracle();
  EXPECT_NEAR(oracle, kFW, 1e-3);
  EXPECT_NEAR(rep.routes.at("theta_min").value, oracle, 2e-3);
  EXPECT_NEAR(rep.routes.at("support_cover").value, oracle, 2e-3);
  EXPECT_EQ(rep.status, "ok");
  // Optimal theta is uniform.
  EXPECT_LT((rep.theta.array() - 1.0 / 3).abs().maxCoeff(), 1e-2);
}

TEST(SliceRank, Matmul) {
  const RankReport rep = asymptotic_slice_rank(make_matmul(2, 2, 2), ThetaWeights::ones_xi(3), fast_options());
  EXPECT_NEAR(rep.value, 4.0, 2e-3);
  EXPECT_EQ(rep.status, "ok");
}

TEST(SliceRank, ZeroXiLegsDropOut) {
  RealVector xi(3);
  xi << 1.0, 0.0, 0.0;
  // Only leg 1 counts: 2^{max H(p_1)} = flattening rank for W.
  const RankReport rep = asymptotic_slice_rank(make_w(), ThetaWeights::xi(xi), fast_options());
  EXPECT_NEAR(rep.routes.at("theta_min").value, 2.0, 2e-3);
  EXPECT_NEAR(rep.routes.at("support_cover").value, 2.0, 1e-6);
}

TEST(SliceRank, BoundsOnRandomTensors) {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const Tensor t = random_tensor({2, 3, 3}, seed);
    const RankReport rep = asymptotic_slice_rank(t, ThetaWeights::ones_xi(3), fast_options());
    EXPECT_GE(rep.value, 1.0 - 1e-9);
    EXPECT_LE(rep.value, 2.0 + 1e-6);
    EXPECT_LE(rep.gap, 2e-3);
  }
}

TEST(SliceRank, RejectsBadWeights) {
  EXPECT_THROW(asymptotic_slice_rank(make_w(), ThetaWeights::uniform_theta(3)), InvalidArgument);
  EXPECT_THROW(asymptotic_slice_rank(Tensor({2, 2, 2}), ThetaWeights::ones_xi(3)), InvalidArgument);
}

TEST(ThetaConvexity, MidpointOnGrid) {
  // log2 F_theta is a max of linear functions of theta.
  for (const Tensor& t : {make_w(), random_tensor({2, 3, 4}, 4)}) {
    const std::vector<RealVector> grid = detail::simplex_grid(3, 8);
    std::map<std::pair<long, long>, double> bits;
    auto key = [](const RealVector& th) { return std::pair{std::lround(th[0] * 16), std::lround(th[1] * 16)}; };
    auto eval = [&](const RealVector& th) {
      auto it = bits.find(key(th));
      if (it != bits.end()) return it->second;
      ScalingOptions so;
      so.tol = 1e-12;
      so.spectrum_tol = std::numeric_limits<double>::infinity();
      const double v = entropic_scaling_run(t, th, so).bits;
      bits[key(th)] = v;
      return v;
    };
    for (std::size_t a = 0; a < grid.size(); a += 3)
      for (std::size_t b = a + 1; b < grid.size(); b += 4) {
        const RealVector mid = 0.5 * (grid[a] + grid[b]);
        EXPECT_LE(eval(mid), 0.5 * (eval(grid[a]) + eval(grid[b])) + 1e-6);
      }
  }
}

TEST(GStableRank, Examples) {
  const RankOptions opt = fast_options();
  for (int r = 1; r <= 3; ++r) EXPECT_NEAR(g_stable_rank(make_unit(r, 3), ThetaWeights::ones_alpha(3), opt).value, r, 1e-6);
  const RankReport w = g_stable_rank(make_w(), ThetaWeights::ones_alpha(3), opt);
  const double oracle = w_gstable_oracle();
  EXPECT_NEAR(oracle, 1.5, 1e-3);
  EXPECT_NEAR(w.routes.at("fractional_cover").value, 1.5, 1e-9);
  EXPECT_NEAR(w.routes.at("moment_linf").value, oracle, 1e-3);
  ASSERT_TRUE(w.cover.has_value());
  EXPECT_NEAR(w.cover->dual_value, 1.5, 1e-9);
  EXPECT_NEAR(g_stable_rank(product_state(), ThetaWeights::ones_alpha(3), opt).value, 1.0, 1e-9);
}

TEST(GStableRank, WeightedW) {
  // alpha = (2,1,1): LP min 2u_1 + ... over covers of H_W; the moment route must agree.
  RealVector a(3);
  a << 2.0, 1.0, 1.0;
  const RankReport rep = g_stable_rank(make_w(), ThetaWeights::alpha(a), fast_options());
  EXPECT_LE(rep.gap, 2e-3);
  EXPECT_NEAR(rep.value, fractional_vertex_cover(hypergraph_of(make_w()), ThetaWeights::alpha(a)).value, 1e-9);
}

TEST(GStableRank, BelowSliceRank) {
  const RankOptions opt = fast_options();
  for (const Tensor& t : {make_w(), random_tensor({2, 2, 3}, 2), direct_sum(make_unit(2, 3), make_w())}) {
    const RankReport g = g_stable_rank(t, ThetaWeights::ones_alpha(3), opt);
    const RankReport s = asymptotic_slice_rank(t, ThetaWeights::ones_xi(3), opt);
    EXPECT_LE(g.value, s.value + 1e-3);
    EXPECT_LE(g.gap, 2e-3);
  }
}

TEST(ReduceTuple, CommonKernels) {
  const MatrixTuple row{2, {elementary(2, 0, 0), elementary(2, 0, 1)}};
  const ReducedTuple r = reduce_tuple(row);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.rows, 1);
  EXPECT_EQ(r.cols, 2);
  const MatrixTuple id{3, {Matrix::Identity(3, 3)}};
  EXPECT_FALSE(reduce_tuple(id).degenerate);
  const MatrixTuple zero{2, {Matrix::Zero(2, 2)}};
  EXPECT_TRUE(reduce_tuple(zero).empty());
}

TEST(NcRank, Examples) {
  const RankOptions opt = fast_options();
  for (int n = 1; n <= 4; ++n) {
    const RankReport r = ncrank(MatrixTuple{n, {Matrix::Identity(n, n)}}, opt);
    EXPECT_EQ(r.value, n);
    EXPECT_EQ(r.status, "ok");
    EXPECT_NEAR(*r.routes.at("moment_l1").raw, n, 1e-6);
  }
  const RankReport row = ncrank(MatrixTuple{2, {elementary(2, 0, 0), elementary(2, 0, 1)}}, opt);
  EXPECT_EQ(row.value, 1);
  EXPECT_EQ(row.routes.at("moment_l1").value, 1);
  EXPECT_EQ(row.status, "ok");
  // A generic tuple spanning all of 2 x 2.
  const MatrixTuple span{2, {elementary(2, 0, 0), elementary(2, 0, 1), elementary(2, 1, 0), elementary(2, 1, 1)}};
  EXPECT_EQ(ncrank(span, opt).value, 2);
  EXPECT_EQ(ncrank(MatrixTuple{2, {Matrix::Zero(2, 2)}}, opt).value, 0);
}

TEST(NcRank, BlowupExamples) {
  EXPECT_EQ(ncrank_blowup(MatrixTuple{2, {Matrix::Identity(2, 2)}}, 1), 2);
  const MatrixTuple row{2, {elementary(2, 0, 0), elementary(2, 0, 1)}};
  Rng rng(3);
  for (int e = 1; e <= 3; ++e) {
    EXPECT_EQ(ncrank_blowup(row, e), 1);
    // Only block row 1 is nonzero, so the rank is at most e.
    Matrix big = Matrix::Zero(2 * e, 2 * e);
    for (const Matrix& a : row.mats) {
      const Matrix b = gaussian_matrix(e, e, rng);
      for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j) big.block(2 * i, 2 * j, 2, 2) += b(i, j) * a;
    }
    EXPECT_EQ(numerical_rank(big), e);
  }
}

TEST(NcRank, SkewSymmetricRoutesAgree) {
  // Commutative rank 2 (odd skew-symmetric), but the routes must agree with each other.
  RankOptions opt = fast_options();
  opt.ncrank_restarts = 40;
  const RankReport r = ncrank(testutil::skew3(), opt);
  EXPECT_EQ(r.status, "ok");
  EXPECT_EQ(r.routes.at("blowup").value, r.routes.at("fortin_reutenauer").value);
  EXPECT_EQ(r.value, 3);
}

TEST(NcRank, HiddenShrunkSubspaces) {
  RankOptions opt = fast_options();
  opt.ncrank_restarts = 40;
  int k = 0;
  for (int n = 2; n <= 4; ++n)
    for (int c = 1; c <= n; ++c) {
      const int d = n + 1 - c;
      const MatrixTuple a = testutil::hidden_block_tuple(n, 2 + k % 3, c, d, 100 + k);
      ++k;
      const RankReport r = ncrank(a, opt);
      const int blow = static_cast<int>(r.routes.at("blowup").value);
      EXPECT_LE(blow, 2 * n - c - d);
      EXPECT_EQ(r.value, blow) << "n=" << n << " block " << c << "x" << d;
      EXPECT_NEAR(*r.routes.at("moment_l1").raw, blow, 0.1);
      EXPECT_EQ(r.status, "ok");
    }
}

TEST(NcRank, RandomTuplesFullRank) {
  const RankOptions opt = fast_options();
  for (int n = 1; n <= 4; ++n) {
    const RankReport r = ncrank(testutil::random_tuple(n, 2, 50 + n), opt);
    EXPECT_EQ(r.value, n);
    EXPECT_EQ(r.status, "ok");
  }
}
