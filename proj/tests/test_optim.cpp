#include <gtest/gtest.h>

#include <limits>
#include <numeric>

#include <spectrumkit/convex.hpp>
#include <spectrumkit/entropy_opt.hpp>
#include <spectrumkit/lp.hpp>

#include "test_util.hpp"

using namespace spectrumkit;
using testutil::h2;

namespace {

/// Oracle: min c.x over {A x >= b, x >= 0} by enumerating all basic solutions.
double vertex_enumeration_min(const Eigen::MatrixXd& a, const RealVector& b, const RealVector& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  // Stack constraints: rows of A then identity rows (x_j >= 0).
  Eigen::MatrixXd g(m + n, n);
  g << a, Eigen::MatrixXd::Identity(n, n);
  RealVector h(m + n);
  h << b, RealVector::Zero(n);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n);
  std::vector<bool> mask(m + n, false);
  std::fill(mask.begin(), mask.begin() + n, true);
  std::sort(mask.begin(), mask.end());
  do {
    int k = 0;
    for (int r = 0; r < m + n; ++r)
      if (mask[r]) pick[k++] = r;
    Eigen::MatrixXd s(n, n);
    RealVector rhs(n);
    for (int r = 0; r < n; ++r) {
      s.row(r) = g.row(pick[r]);
      rhs[r] = h[pick[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (lu.rank() < n) continue;
    const RealVector x = lu.solve(rhs);
    if (((g * x - h).array() >= -1e-12).all()) best = std::min(best, c.dot(x));
  } while (std::next_permutation(mask.begin(), mask.end()));
  return best;
}

SupportSet support_of(const Dims& dims, std::vector<MultiIndex> pts) {
  std::sort(pts.begin(), pts.end());
  return SupportSet{dims, pts};
}

SupportSet w_support() { return support(make_w(), 0.0); }

}  // namespace

// --- LP ---------------------------------------------------------------

TEST(SolveLp, SingleBound) {
  LinearProgram lp;
  lp.objective = RealVector::Ones(1);
  lp.constraints = Eigen::MatrixXd::Ones(1, 1);
  lp.rhs = RealVector::Constant(1, 3.0);
  lp.senses = {RowSense::kGreaterEqual};
  const LpSolution s = solve_lp(lp);
  EXPECT_NEAR(s.value, 3.0, 1e-12);
  EXPECT_NEAR(s.primal[0], 3.0, 1e-12);
  EXPECT_NEAR(s.dual[0], 1.0, 1e-12);
  EXPECT_LE(s.duality_gap(), 1e-9);
}

TEST(SolveLp, WCoverAgainstVertexEnumeration) {
  // Vertices: part i, index 0/1 -> column 2i + index. Edges (1,0,0),(0,1,0),(0,0,1).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 6);
  a(0, 1) = a(0, 2) = a(0, 4) = 1;
  a(1, 0) = a(1, 3) = a(1, 4) = 1;
  a(2, 0) = a(2, 2) = a(2, 5) = 1;
  const RealVector b = RealVector::Ones(3);
  const RealVector c = RealVector::Ones(6);
  const double oracle = vertex_enumeration_min(a, b, c);
  EXPECT_NEAR(oracle, 1.5, 1e-12);

  LinearProgram lp{c, a, {3, RowSense::kGreaterEqual}, b, {}, {}, false};
  const LpSolution cover = solve_lp(lp);
  EXPECT_NEAR(cover.value, oracle, 1e-9);
  EXPECT_LE(cover.duality_gap(), 1e-9 * (1 + std::abs(cover.value)));

  // Matching LP: max sum y s.t. A^T y <= 1.
  LinearProgram match{RealVector::Ones(3), a.transpose(), {6, RowSense::kLessEqual}, RealVector::Ones(6), {}, {}, true};
  const LpSolution m = solve_lp(match);
  EXPECT_NEAR(m.value, 1.5, 1e-9);
  EXPECT_LE(m.duality_gap(), 1e-9);
}

TEST(SolveLp, RandomCoversMatchVertexEnumeration) {
  Rng rng(17);
  std::bernoulli_distribution coin(0.4);
  std::uniform_real_distribution<double> cost(0.5, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 4, n = 6;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
    for (int i = 0; i < m; ++i) {
      a(i, i % n) = 1.0;
      for (int j = 0; j < n; ++j)
        if (coin(rng)) a(i, j) = 1.0;
    }
    RealVector c(n);
    for (int j = 0; j < n; ++j) c[j] = cost(rng);
    const RealVector b = RealVector::Ones(m);
    LinearProgram lp{c, a, {static_cast<std::size_t>(m), RowSense::kGreaterEqual}, b, {}, {}, false};
    const LpSolution s = solve_lp(lp);
    EXPECT_NEAR(s.value, vertex_enumeration_min(a, b, c), 1e-9);
    EXPECT_LE(s.duality_gap(), 1e-9 * (1 + std::abs(s.value)));
    // Primal and dual feasibility, complementary slackness.
    const RealVector slack = a * s.primal - b;
    EXPECT_GE(slack.minCoeff(), -1e-9);
    EXPECT_GE(s.dual.minCoeff(), -1e-9);
    EXPECT_GE(s.reduced_costs.minCoeff(), -1e-9);
    EXPECT_NEAR(slack.dot(s.dual), 0.0, 1e-9);
    EXPECT_NEAR(s.primal.dot(s.reduced_costs), 0.0, 1e-9);
  }
}

TEST(SolveLp, BoundsAndFreeVariables) {
  // min x - y, x + y = 1, -2 <= x <= 3, y free but y <= 4.
  LinearProgram lp;
  lp.objective = RealVector(2);
  lp.objective << 1, -1;
  lp.constraints = Eigen::MatrixXd::Ones(1, 2);
  lp.rhs = RealVector::Ones(1);
  lp.senses = {RowSense::kEqual};
  lp.lower = RealVector(2);
  lp.lower << -2, -std::numeric_limits<double>::infinity();
  lp.upper = RealVector(2);
  lp.upper << 3, 4;
  const LpSolution s = solve_lp(lp);
  EXPECT_NEAR(s.value, -5.0, 1e-9);
  EXPECT_NEAR(s.primal[0], -2.0, 1e-9);
  EXPECT_NEAR(s.primal[1], 3.0, 1e-9);
  EXPECT_LE(s.duality_gap(), 1e-9);
}

TEST(SolveLp, InfeasibleAndUnbounded) {
  LinearProgram lp;
  lp.objective = RealVector::Ones(1);
  lp.constraints = Eigen::MatrixXd::Ones(2, 1);
  lp.rhs = RealVector(2);
  lp.rhs << 1, 2;
  lp.senses = {RowSense::kLessEqual, RowSense::kGreaterEqual};
  lp.constraints(0, 0) = 1;
  lp.rhs[1] = 2;
  EXPECT_THROW(solve_lp(lp), Infeasible);

  LinearProgram unb;
  unb.objective = -RealVector::Ones(1);
  unb.constraints = Eigen::MatrixXd::Ones(1, 1);
  unb.rhs = RealVector::Ones(1);
  unb.senses = {RowSense::kGreaterEqual};
  EXPECT_THROW(solve_lp(unb), Unbounded);
}

TEST(SolveLp, RedundantEqualities) {
  LinearProgram lp;
  lp.objective = RealVector(2);
  lp.objective << 1, 2;
  lp.constraints = Eigen::MatrixXd(2, 2);
  lp.constraints << 1, 1, 2, 2;
  lp.rhs = RealVector(2);
  lp.rhs << 1, 2;
  lp.senses = {RowSense::kEqual, RowSense::kEqual};
  const LpSolution s = solve_lp(lp);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  EXPECT_LE(s.duality_gap(), 1e-9);
}

// --- distributions ----------------------------------------------------

TEST(Marginals, Examples) {
  const MarginalTuple mw = marginals_of(JointDistribution::uniform(w_support()));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(mw[i][0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(mw[i][1], 1.0 / 3.0, 1e-15);
  }
  const SupportSet point = support_of({2, 2, 2}, {{0, 0, 0}});
  const MarginalTuple mp = marginals_of(JointDistribution::uniform(point));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(mp[i][0], 1.0);
  const MarginalTuple mu = marginals_of(JointDistribution::uniform(support(make_unit(2, 3), 0.0)));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(mu[i][1], 0.5);
}

TEST(Marginals, AffineInWeights) {
  const SupportSet s = support(make_matmul(2, 2, 2), 0.0);
  Rng rng(3);
  const RealVector p = dirichlet_uniform(8, rng), q = dirichlet_uniform(8, rng);
  const double lam = 0.3;
  const MarginalTuple mix = marginals_of(s, lam * p + (1 - lam) * q);
  const MarginalTuple a = marginals_of(s, p), b = marginals_of(s, q);
  for (int i = 0; i < 3; ++i) EXPECT_LT((mix[i] - (lam * a[i] + (1 - lam) * b[i])).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Weights, RoleValidation) {
  EXPECT_THROW(ThetaWeights::theta(RealVector::Constant(3, 0.3)), InvalidArgument);
  EXPECT_THROW(ThetaWeights::xi(RealVector::Constant(3, 0.5)), InvalidArgument);
  EXPECT_THROW(ThetaWeights::alpha(RealVector::Zero(2)), InvalidArgument);
  EXPECT_NO_THROW(ThetaWeights::xi(RealVector::Ones(3)));
}

// --- entropy maximization --------------------------------------------

TEST(MaxWeightedEntropy, UnitTensor) {
  for (int r = 1; r <= 4; ++r) {
    const EntropyMaximum m = max_weighted_entropy(support(make_unit(r, 3), 0.0), ThetaWeights::uniform_theta(3));
    EXPECT_NEAR(std::exp2(m.bits), r, 1e-8);
  }
}

TEST(MaxWeightedEntropy, WMatchesGridOracle) {
  const SupportSet s = w_support();
  // Grid over weights on the three points, step 1e-3.
  double oracle = 0.0;
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    RealVector w(3);
    w << a, b, c;
    oracle = std::max(oracle, weighted_entropy(marginals_of(s, w), RealVector::Constant(3, 1.0 / 3)));
  });
  const EntropyMaximum m = max_weighted_entropy(s, ThetaWeights::uniform_theta(3));
  EXPECT_NEAR(m.bits, h2(1.0 / 3), 1e-8);
  EXPECT_GE(m.bits, oracle - 1e-12);
  EXPECT_LE(m.bits - oracle, 1e-5);
  EXPECT_NEAR(std::exp2(m.bits), 1.8898815748423097, 1e-8);
  // The returned distribution attains the value.
  EXPECT_NEAR(weighted_entropy(marginals_of(m.distribution), RealVector::Constant(3, 1.0 / 3)), m.bits, 1e-12);
}

TEST(MaxWeightedEntropy, WNonUniformThetaGridOracle) {
  const SupportSet s = w_support();
  RealVector th(3);
  th << 0.6, 0.3, 0.1;
  double oracle = 0.0;
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    RealVector w(3);
    w << a, b, c;
    oracle = std::max(oracle, weighted_entropy(marginals_of(s, w), th));
  });
  const EntropyMaximum m = max_weighted_entropy(s, ThetaWeights::theta(th));
  EXPECT_GE(m.bits, oracle - 1e-12);
  EXPECT_LE(m.bits - oracle, 1e-5);
  EXPECT_TRUE(m.converged);
}

TEST(MaxWeightedEntropy, MatmulIsTwoBits) {
  const SupportSet s = support(make_matmul(2, 2, 2), 0.0);
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const ThetaWeights th = ThetaWeights::theta(dirichlet_uniform(3, rng));
    EXPECT_NEAR(max_weighted_entropy(s, th).bits, 2.0, 1e-8);
  }
}

TEST(MaxWeightedEntropy, BoundsAndConvexityInTheta) {
  Rng rng(21);
  const Tensor t = testutil::random_tensor({2, 3, 3}, 4);
  // Sparse random support.
  SupportSet s{t.dims(), {}};
  std::bernoulli_distribution coin(0.35);
  for (Eigen::Index a = 0; a < t.size(); ++a)
    if (coin(rng)) s.points.push_back(t.multi_index(a));
  ASSERT_FALSE(s.empty());
  for (int k = 0; k < 5; ++k) {
    const RealVector a = dirichlet_uniform(3, rng), b = dirichlet_uniform(3, rng);
    const double va = max_weighted_entropy(s, ThetaWeights::theta(a)).bits;
    const double vb = max_weighted_entropy(s, ThetaWeights::theta(b)).bits;
    const double vm = max_weighted_entropy(s, ThetaWeights::theta(0.5 * (a + b))).bits;
    EXPECT_LE(vm, 0.5 * (va + vb) + 1e-8);
    const double cap = a[0] * 1.0 + a[1] * std::log2(3.0) + a[2] * std::log2(3.0);
    EXPECT_GE(va, -1e-12);
    EXPECT_LE(va, cap + 1e-12);
  }
}

TEST(MaxWeightedEntropy, ObjectiveIsConcaveOnRandomPairs) {
  const SupportSet s = support(testutil::random_tensor({3, 3, 2}, 2), 0.0);
  const RealVector th = RealVector::Constant(3, 1.0 / 3);
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = static_cast<Eigen::Index>(s.size());
  for (int k = 0; k < 50; ++k) {
    const RealVector p = dirichlet_uniform(n, rng), q = dirichlet_uniform(n, rng);
    const double lam = u(rng);
    const double mix = weighted_entropy(marginals_of(s, lam * p + (1 - lam) * q), th);
    EXPECT_GE(mix, lam * weighted_entropy(marginals_of(s, p), th) +
                       (1 - lam) * weighted_entropy(marginals_of(s, q), th) - 1e-10);
  }
}

TEST(MaxWeightedEntropy, EmptySupport) {
  EXPECT_THROW(max_weighted_entropy(SupportSet{{2, 2}, {}}, ThetaWeights::uniform_theta(2)), InvalidArgument);
}

TEST(MaxMinEntropy, Examples) {
  const ThetaWeights ones = ThetaWeights::ones_xi(3);
  EXPECT_NEAR(max_min_weighted_entropy(support(make_unit(4, 3), 0.0), ones).bits, 2.0, 1e-8);
  EXPECT_NEAR(max_min_weighted_entropy(w_support(), ones).bits, h2(1.0 / 3), 1e-8);
  EXPECT_NEAR(max_min_weighted_entropy(support_of({2, 2, 2}, {{1, 0, 1}}), ones).bits, 0.0, 1e-12);
}

TEST(MaxMinEntropy, WGridOracle) {
  const SupportSet s = w_support();
  RealVector xi(3);
  xi << 1.0, 0.5, 0.25;
  double oracle = 0.0;
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    RealVector w(3);
    w << a, b, c;
    const MarginalTuple m = marginals_of(s, w);
    double v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) v = std::min(v, shannon_entropy(m[i]) / xi[i]);
    oracle = std::max(oracle, v);
  });
  const MaxMinEntropy r = max_min_weighted_entropy(s, ThetaWeights::xi(xi));
  EXPECT_GE(r.bits, oracle - 1e-12);
  EXPECT_LE(r.bits - oracle, 1e-4);
  EXPECT_LE(r.upper_bound - r.bits, 1e-6);
}

TEST(MaxMinEntropy, ZeroWeightLegDropsOut) {
  // Leg 3 is constant, so H(p_3) = 0; with xi_3 = 0 it does not constrain.
  const SupportSet s = support_of({2, 2, 1}, {{0, 0, 0}, {1, 1, 0}});
  RealVector xi(3);
  xi << 1.0, 1.0, 0.0;
  EXPECT_NEAR(max_min_weighted_entropy(s, ThetaWeights::xi(xi)).bits, 1.0, 1e-8);
  EXPECT_NEAR(max_min_weighted_entropy(s, ThetaWeights::ones_xi(3)).bits, 0.0, 1e-12);
}

TEST(MaxMinEntropy, MatchesThetaGridFormula) {
  Rng rng(12);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 3; ++trial) {
    SupportSet s{{3, 3, 3}, {}};
    for (int a = 0; a < 27; ++a)
      if (coin(rng)) s.points.push_back({a / 9, (a / 3) % 3, a % 3});
    if (s.empty()) continue;
    RealVector xi(3);
    xi << 1.0, 0.7, 0.4;
    double grid = std::numeric_limits<double>::infinity();
    testutil::simplex_grid(1.0 / 32, [&](double a, double b, double c) {
      RealVector th(3);
      th << a, b, c;
      const double inner = th.dot(xi);
      if (inner <= 0) return;
      // Clamp the rounded grid point to an exact probability vector.
      th /= th.sum();
      grid = std::min(grid, max_weighted_entropy(s, ThetaWeights::theta(th)).bits / inner);
    });
    const double v = max_min_weighted_entropy(s, ThetaWeights::xi(xi)).bits;
    // The grid only sees 1/32-spaced theta, so it can only overestimate.
    EXPECT_LE(v, grid + 1e-8);
    EXPECT_GE(v, grid - 2e-2);
  }
}

// --- convex minimization ----------------------------------------------

TEST(MinConvex, NegEntropyIsSameProgram) {
  const SupportSet s = w_support();
  const SupportMinimum m = min_convex_over_support(s, NegWeightedEntropy(ThetaWeights::uniform_theta(3)));
  EXPECT_NEAR(m.value, -max_weighted_entropy(s, ThetaWeights::uniform_theta(3)).bits, 1e-12);
}

TEST(MinConvex, MaxNormOnWGridOracle) {
  const SupportSet s = w_support();
  const MaxNormRatio f(ThetaWeights::ones_alpha(3));
  double oracle = std::numeric_limits<double>::infinity();
  testutil::simplex_grid(1e-3, [&](double a, double b, double c) {
    RealVector w(3);
    w << a, b, c;
    oracle = std::min(oracle, f.value(marginals_of(s, w)));
  });
  const SupportMinimum m = min_convex_over_support(s, f);
  EXPECT_NEAR(m.value, 2.0 / 3.0, 1e-9);
  EXPECT_LE(m.value, oracle + 1e-12);
  EXPECT_TRUE(m.exact);
}

TEST(MinConvex, L1ToUniformPerfectMatching) {
  const SupportSet s = support_of({2, 2}, {{0, 0}, {1, 1}, {0, 1}});
  const SupportMinimum m = min_convex_over_support(s, L1ToUniform());
  EXPECT_NEAR(m.value, 0.0, 1e-9);
}

TEST(MinConvex, SmoothingPathAgreesWithLp) {
  // Same max-norm function wrapped without a direct program.
  const MaxNormRatio inner(ThetaWeights::ones_alpha(3));
  struct Wrapped final : SymmetricConvexFunction {
    const MaxNormRatio* f;
    std::string name() const override { return "wrapped"; }
    double value(const MarginalTuple& p) const override { return f->value(p); }
    double smoothed(const MarginalTuple& p, double mu, MarginalTuple* g) const override { return f->smoothed(p, mu, g); }
    std::vector<double> smoothing_schedule() const override { return f->smoothing_schedule(); }
  } wrapped;
  wrapped.f = &inner;
  const SupportSet s = support(make_matmul(1, 2, 2), 0.0);
  const double lp = min_convex_over_support(s, inner).value;
  const double smooth = min_convex_over_support(s, wrapped).value;
  EXPECT_NEAR(smooth, lp, 1e-6);
  EXPECT_NEAR(min_convex_over_support(w_support(), wrapped).value, 2.0 / 3.0, 1e-6);
}

TEST(MinConvex, InfiniteEverywhere) {
  const CallbackFunction inf(
      "inf", [](const MarginalTuple&) { return std::numeric_limits<double>::infinity(); },
      [](const MarginalTuple& p) { return detail::zeros_like(p); });
  EXPECT_THROW(min_convex_over_support(w_support(), inf), Infeasible);
}
