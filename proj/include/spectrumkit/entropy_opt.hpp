#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "lp.hpp"

namespace spectrumkit {

/// A concave function of the marginal tuple with partial derivatives d/dp_{j,a}.
template <class Obj>
concept MarginalObjective = requires(const Obj& o, const MarginalTuple& p) {
  { o.value(p) } -> std::convertible_to<double>;
  { o.gradient(p) } -> std::same_as<MarginalTuple>;
};

struct AscentOptions {
  double gap_tol = 1e-11;     // Frank-Wolfe gap certifying optimality
  double stall_tol = 1e-13;   // improvement over `window` iterations
  int window = 50;
  int max_iter = 200000;
};

struct AscentResult {
  double value = 0.0;
  JointDistribution distribution;
  MarginalTuple marginals;
  double gap = 0.0;  // value + gap bounds the true maximum
  int iterations = 0;
  bool converged = false;
};

/// Maximizes a concave objective of the marginals over joint distributions on `s`
/// by exponentiated-gradient ascent on the weight simplex with an adaptive step.
/// Each step is accepted only if it does not decrease the objective, and the
/// Frank-Wolfe gap max_w g_w - <P, g> serves as the optimality certificate.
template <MarginalObjective Obj>
AscentResult maximize_over_support(const SupportSet& s, const Obj& obj, const AscentOptions& opt = {},
                                   const RealVector* start = nullptr) {
  detail::require(!s.empty(), "entropy maximization: empty support");
  const Eigen::Index n = static_cast<Eigen::Index>(s.points.size());
  RealVector w = start ? *start : RealVector::Constant(n, 1.0 / static_cast<double>(n));
  constexpr double kFloor = 1e-250;

  auto point_gradient = [&](const MarginalTuple& g) {
    RealVector gw(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      double acc = 0.0;
      const MultiIndex& pt = s.points[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < pt.size(); ++j) acc += g.legs[j][pt[j]];
      gw[k] = acc;
    }
    return gw;
  };

  AscentResult res;
  MarginalTuple m = marginals_of(s, w);
  double f = obj.value(m);
  std::vector<double> history{f};
  double step = 1.0;
  int it = 0;
  for (; it < opt.max_iter && std::isfinite(f); ++it) {
    const RealVector gw = point_gradient(obj.gradient(m));
    const double gmax = gw.maxCoeff();
    res.gap = std::max(0.0, gmax - w.dot(gw));
    if (res.gap <= opt.gap_tol || n == 1) {
      res.converged = true;
      break;
    }
    if (static_cast<int>(history.size()) > opt.window &&
        history.back() - history[history.size() - 1 - opt.window] <= opt.stall_tol) {
      res.converged = res.gap <= 1e-6;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 80; ++tries) {
      RealVector trial = (w.array() * ((gw.array() - gmax) * step).exp()).matrix();
      trial = trial.cwiseMax(kFloor);
      trial /= trial.sum();
      const MarginalTuple mt = marginals_of(s, trial);
      const double ft = obj.value(mt);
      if (ft >= f) {
        w = std::move(trial);
        m = mt;
        f = ft;
        accepted = true;
        step = std::min(step * 1.5, 1e8);
        break;
      }
      step *= 0.5;
    }
    history.push_back(f);
    if (!accepted) {
      res.converged = res.gap <= 1e-6;
      break;
    }
  }
  res.iterations = it;
  res.value = f;
  res.marginals = m;
  res.distribution = JointDistribution{s, w};
  return res;
}

/// Objective sum_j c_j H(p_j) (bits) with arbitrary nonnegative leg coefficients.
struct WeightedEntropyObjective {
  RealVector coeffs;

  double value(const MarginalTuple& p) const { return weighted_entropy(p, coeffs); }

  MarginalTuple gradient(const MarginalTuple& p) const {
    MarginalTuple g;
    for (int j = 0; j < p.order(); ++j) {
      RealVector gj = RealVector::Zero(p[j].size());
      if (coeffs[j] != 0.0)
        for (Eigen::Index a = 0; a < gj.size(); ++a)
          gj[a] = -coeffs[j] * (std::log2(std::max(p[j][a], 1e-300)) + 1.0 / std::log(2.0));
      g.legs.push_back(std::move(gj));
    }
    return g;
  }
};

struct EntropyMaximum {
  double bits = 0.0;
  JointDistribution distribution;
  MarginalTuple marginals;
  double gap = 0.0;
  bool converged = false;
};

/// max over P supported on `s` of sum_j theta_j H(p_j), in bits.
inline EntropyMaximum max_weighted_entropy(const SupportSet& s, const ThetaWeights& theta,
                                           const AscentOptions& opt = {}) {
  detail::require(!s.empty(), "max_weighted_entropy: empty support");
  detail::require(theta.size() == s.order(), "max_weighted_entropy: weight length differs from order");
  const AscentResult r = maximize_over_support(s, WeightedEntropyObjective{theta.values}, opt);
  return {r.value, r.distribution, r.marginals, r.gap, r.converged};
}

struct MaxMinEntropy {
  double bits = 0.0;          // certified by `distribution`
  double upper_bound = 0.0;   // from the dual side
  JointDistribution distribution;
  MarginalTuple marginals;
  RealVector lambda;          // final leg multipliers (zero on xi_i = 0 legs)
};

/// max over P on `s` of min_{i: xi_i > 0} H(p_i) / xi_i (bits). Legs with xi_i = 0
/// contribute +infinity and drop out of the minimum.
///
/// Solved as min over leg multipliers lambda of h(lambda) = max_P sum_i lambda_i H(p_i)/xi_i
/// with Kelley cutting planes; the LP duals mix the collected distributions into a
/// primal certificate, so the returned value is always attained by an explicit P.
inline MaxMinEntropy max_min_weighted_entropy(const SupportSet& s, const ThetaWeights& xi, double tol = 1e-9,
                                              int max_rounds = 200) {
  detail::require(!s.empty(), "max_min_weighted_entropy: empty support");
  detail::require(xi.size() == s.order(), "max_min_weighted_entropy: weight length differs from order");
  const int d = s.order();
  std::vector<int> active;
  for (int i = 0; i < d; ++i)
    if (xi[i] > 0.0) active.push_back(i);
  detail::require(!active.empty(), "max_min_weighted_entropy: all weights are zero");
  const int k = static_cast<int>(active.size());

  auto ratios = [&](const MarginalTuple& m) {
    RealVector r(k);
    for (int a = 0; a < k; ++a) r[a] = shannon_entropy(m[active[a]]) / xi[active[a]];
    return r;
  };
  auto coeffs_for = [&](const RealVector& lam) {
    RealVector c = RealVector::Zero(d);
    for (int a = 0; a < k; ++a) c[active[a]] = lam[a] / xi[active[a]];
    return c;
  };

  MaxMinEntropy out;
  out.bits = -std::numeric_limits<double>::infinity();
  out.upper_bound = std::numeric_limits<double>::infinity();
  auto consider_primal = [&](const JointDistribution& p, const MarginalTuple& m) {
    const double v = ratios(m).minCoeff();
    if (v > out.bits) {
      out.bits = v;
      out.distribution = p;
      out.marginals = m;
    }
  };

  std::vector<RealVector> cuts;
  std::vector<RealVector> weights;
  RealVector lam = RealVector::Constant(k, 1.0 / k);
  for (int round = 0; round < max_rounds; ++round) {
    const AscentResult r = maximize_over_support(s, WeightedEntropyObjective{coeffs_for(lam)});
    out.upper_bound = std::min(out.upper_bound, r.value + r.gap);
    consider_primal(r.distribution, r.marginals);
    if (k == 1) break;
    cuts.push_back(ratios(r.marginals));
    weights.push_back(r.distribution.weights);

    // min z s.t. cut_q . lambda - z <= 0, sum lambda = 1, lambda >= 0, z free.
    const int nc = static_cast<int>(cuts.size());
    LinearProgram lp;
    lp.objective = RealVector::Zero(k + 1);
    lp.objective[k] = 1.0;
    lp.constraints = Eigen::MatrixXd::Zero(nc + 1, k + 1);
    lp.rhs = RealVector::Zero(nc + 1);
    for (int q = 0; q < nc; ++q) {
      lp.constraints.row(q).head(k) = cuts[q].transpose();
      lp.constraints(q, k) = -1.0;
      lp.senses.push_back(RowSense::kLessEqual);
    }
    lp.constraints.row(nc).head(k).setOnes();
    lp.rhs[nc] = 1.0;
    lp.senses.push_back(RowSense::kEqual);
    lp.lower = RealVector::Zero(k + 1);
    lp.lower[k] = -std::numeric_limits<double>::infinity();
    const LpSolution sol = solve_lp(lp);
    const double lower_cut = sol.value;

    // Mixture of collected distributions weighted by the cut multipliers.
    RealVector mix = RealVector::Zero(static_cast<Eigen::Index>(s.points.size()));
    double total = 0.0;
    for (int q = 0; q < nc; ++q) {
      const double mu = std::max(0.0, -sol.dual[q]);
      mix += mu * weights[q];
      total += mu;
    }
    if (total > 0.0) {
      mix /= mix.sum();
      consider_primal(JointDistribution{s, mix}, marginals_of(s, mix));
    }
    lam = sol.primal.head(k).cwiseMax(0.0);
    lam /= lam.sum();
    out.lambda = lam;
    if (out.upper_bound - out.bits <= tol || out.upper_bound - lower_cut <= 1e-3 * tol) break;
  }
  if (k == 1) out.lambda = RealVector::Ones(1);
  // Expand lambda to full leg indexing.
  RealVector full = RealVector::Zero(d);
  for (int a = 0; a < k && a < out.lambda.size(); ++a) full[active[a]] = out.lambda[a];
  out.lambda = full;
  return out;
}

}  // namespace spectrumkit
