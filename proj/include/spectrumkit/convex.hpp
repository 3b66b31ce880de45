#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "entropy_opt.hpp"
#include "errors.hpp"
#include "lp.hpp"

namespace spectrumkit {

struct SupportMinimum {
  double value = 0.0;
  JointDistribution distribution;
  MarginalTuple marginals;
  bool exact = false;  // solved by a direct program rather than smoothing
};

/// Convex function of a marginal tuple, invariant under permuting the entries of
/// each leg. Values may be +infinity.
class SymmetricConvexFunction {
 public:
  virtual ~SymmetricConvexFunction() = default;

  virtual std::string name() const = 0;
  virtual double value(const MarginalTuple& p) const = 0;

  /// Smooth surrogate with parameter mu (mu = 0 gives `value`) and its partials.
  virtual double smoothed(const MarginalTuple& p, double mu, MarginalTuple* grad) const = 0;

  /// Decreasing smoothing parameters used by first-order solvers.
  virtual std::vector<double> smoothing_schedule() const { return {0.0}; }

  /// Exact minimum over marginals of distributions on `s`, if a direct program exists.
  virtual std::optional<SupportMinimum> exact_minimum(const SupportSet&) const { return std::nullopt; }

  /// Non-null when F = -sum_j theta_j H(p_j); lets callers use entropic scaling.
  virtual const RealVector* entropy_weights() const { return nullptr; }
};

using ConvexFunctionPtr = std::shared_ptr<const SymmetricConvexFunction>;

namespace detail {

inline MarginalTuple zeros_like(const MarginalTuple& p) {
  MarginalTuple z;
  for (const RealVector& v : p.legs) z.legs.push_back(RealVector::Zero(v.size()));
  return z;
}

}  // namespace detail

/// F(p) = -sum_j theta_j H(p_j).
class NegWeightedEntropy final : public SymmetricConvexFunction {
 public:
  explicit NegWeightedEntropy(ThetaWeights theta) : theta_(std::move(theta)) { theta_.validate(); }

  std::string name() const override { return "neg-entropy"; }
  double value(const MarginalTuple& p) const override { return -weighted_entropy(p, theta_.values); }

  double smoothed(const MarginalTuple& p, double, MarginalTuple* grad) const override {
    if (grad) {
      *grad = WeightedEntropyObjective{theta_.values}.gradient(p);
      for (RealVector& g : grad->legs) g = -g;
    }
    return value(p);
  }

  std::optional<SupportMinimum> exact_minimum(const SupportSet& s) const override {
    detail::require(s.order() == theta_.size(), "neg-entropy: weight length differs from order");
    const EntropyMaximum m = max_weighted_entropy(s, theta_);
    return SupportMinimum{-m.bits, m.distribution, m.marginals, true};
  }

  const RealVector* entropy_weights() const override { return &theta_.values; }

 private:
  ThetaWeights theta_;
};

/// F(p) = max_i ||p_i||_inf / alpha_i.
class MaxNormRatio final : public SymmetricConvexFunction {
 public:
  explicit MaxNormRatio(ThetaWeights alpha) : alpha_(std::move(alpha)) { alpha_.validate(); }

  std::string name() const override { return "linf"; }

  double value(const MarginalTuple& p) const override {
    double v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < p.order(); ++i) v = std::max(v, p[i].maxCoeff() / alpha_[i]);
    return v;
  }

  /// mu * log sum exp(p_{i,a} / (alpha_i mu)); exceeds the max by at most mu log N.
  double smoothed(const MarginalTuple& p, double mu, MarginalTuple* grad) const override {
    if (mu <= 0.0) {
      if (grad) *grad = subgradient(p);
      return value(p);
    }
    const double top = value(p);
    double z = 0.0;
    MarginalTuple g = detail::zeros_like(p);
    for (int i = 0; i < p.order(); ++i)
      for (Eigen::Index a = 0; a < p[i].size(); ++a) {
        const double e = std::exp((p[i][a] / alpha_[i] - top) / mu);
        g.legs[i][a] = e / alpha_[i];
        z += e;
      }
    if (grad) {
      for (RealVector& v : g.legs) v /= z;
      *grad = std::move(g);
    }
    return top + mu * std::log(z);
  }

  std::vector<double> smoothing_schedule() const override { return {1e-2, 1e-3, 1e-4, 1e-5}; }

  /// min c  s.t.  sum_{w_i = a} P_w <= alpha_i c,  sum P = 1,  P >= 0.
  std::optional<SupportMinimum> exact_minimum(const SupportSet& s) const override {
    detail::require(s.order() == alpha_.size(), "linf: weight length differs from order");
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    std::vector<std::pair<int, int>> rows;
    for (int i = 0; i < s.order(); ++i)
      for (int a = 0; a < s.dims[i]; ++a) rows.push_back({i, a});
    LinearProgram lp;
    lp.objective = RealVector::Zero(n + 1);
    lp.objective[n] = 1.0;
    lp.constraints = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()) + 1, n + 1);
    lp.rhs = RealVector::Zero(lp.constraints.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto [i, a] = rows[r];
      for (Eigen::Index k = 0; k < n; ++k)
        if (s.points[static_cast<std::size_t>(k)][i] == a) lp.constraints(static_cast<Eigen::Index>(r), k) = 1.0;
      lp.constraints(static_cast<Eigen::Index>(r), n) = -alpha_[i];
      lp.senses.push_back(RowSense::kLessEqual);
    }
    lp.constraints.row(lp.constraints.rows() - 1).head(n).setOnes();
    lp.rhs[lp.rhs.size() - 1] = 1.0;
    lp.senses.push_back(RowSense::kEqual);
    const LpSolution sol = solve_lp(lp);
    RealVector w = sol.primal.head(n).cwiseMax(0.0);
    w /= w.sum();
    const MarginalTuple m = marginals_of(s, w);
    return SupportMinimum{value(m), JointDistribution{s, w}, m, true};
  }

 private:
  MarginalTuple subgradient(const MarginalTuple& p) const {
    MarginalTuple g = detail::zeros_like(p);
    int bi = 0;
    Eigen::Index ba = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < p.order(); ++i)
      for (Eigen::Index a = 0; a < p[i].size(); ++a)
        if (p[i][a] / alpha_[i] > best) {
          best = p[i][a] / alpha_[i];
          bi = i;
          ba = a;
        }
    g.legs[bi][ba] = 1.0 / alpha_[bi];
    return g;
  }

  ThetaWeights alpha_;
};

/// F(p) = sum over selected legs i of ||p_i - u_{n_i}||_1, u the uniform vector.
class L1ToUniform final : public SymmetricConvexFunction {
 public:
  explicit L1ToUniform(std::vector<bool> legs = {}) : legs_(std::move(legs)) {}

  std::string name() const override { return "l1-uniform"; }

  double value(const MarginalTuple& p) const override {
    double v = 0.0;
    for (int i = 0; i < p.order(); ++i)
      if (selected(i)) v += (p[i].array() - 1.0 / static_cast<double>(p[i].size())).abs().sum();
    return v;
  }

  /// Huber smoothing with width mu per entry.
  double smoothed(const MarginalTuple& p, double mu, MarginalTuple* grad) const override {
    double v = 0.0;
    MarginalTuple g = detail::zeros_like(p);
    for (int i = 0; i < p.order(); ++i) {
      if (!selected(i)) continue;
      const double u = 1.0 / static_cast<double>(p[i].size());
      for (Eigen::Index a = 0; a < p[i].size(); ++a) {
        const double x = p[i][a] - u;
        if (mu > 0.0 && std::abs(x) <= mu) {
          v += 0.5 * x * x / mu + 0.5 * mu;
          g.legs[i][a] = x / mu;
        } else {
          v += std::abs(x);
          g.legs[i][a] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        }
      }
    }
    if (grad) *grad = std::move(g);
    return v;
  }

  std::vector<double> smoothing_schedule() const override { return {1e-2, 1e-3, 1e-4}; }

  /// min sum e  s.t.  e_{i,a} >= |p_{i,a} - 1/n_i|,  sum P = 1.
  std::optional<SupportMinimum> exact_minimum(const SupportSet& s) const override {
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < s.order(); ++i)
      if (selected(i))
        for (int a = 0; a < s.dims[i]; ++a) cells.push_back({i, a});
    const Eigen::Index ne = static_cast<Eigen::Index>(cells.size());
    LinearProgram lp;
    lp.objective = RealVector::Zero(n + ne);
    lp.objective.tail(ne).setOnes();
    lp.constraints = Eigen::MatrixXd::Zero(2 * ne + 1, n + ne);
    lp.rhs = RealVector::Zero(2 * ne + 1);
    for (Eigen::Index c = 0; c < ne; ++c) {
      const auto [i, a] = cells[static_cast<std::size_t>(c)];
      const double u = 1.0 / s.dims[i];
      for (Eigen::Index k = 0; k < n; ++k)
        if (s.points[static_cast<std::size_t>(k)][i] == a) {
          lp.constraints(2 * c, k) = 1.0;
          lp.constraints(2 * c + 1, k) = -1.0;
        }
      lp.constraints(2 * c, n + c) = -1.0;
      lp.constraints(2 * c + 1, n + c) = -1.0;
      lp.rhs[2 * c] = u;
      lp.rhs[2 * c + 1] = -u;
      lp.senses.push_back(RowSense::kLessEqual);
      lp.senses.push_back(RowSense::kLessEqual);
    }
    lp.constraints.row(2 * ne).head(n).setOnes();
    lp.rhs[2 * ne] = 1.0;
    lp.senses.push_back(RowSense::kEqual);
    const LpSolution sol = solve_lp(lp);
    RealVector w = sol.primal.head(n).cwiseMax(0.0);
    w /= w.sum();
    const MarginalTuple m = marginals_of(s, w);
    return SupportMinimum{value(m), JointDistribution{s, w}, m, true};
  }

  const std::vector<bool>& legs() const { return legs_; }

 private:
  bool selected(int i) const { return legs_.empty() || (i < static_cast<int>(legs_.size()) && legs_[i]); }

  std::vector<bool> legs_;
};

class ZeroFunction final : public SymmetricConvexFunction {
 public:
  std::string name() const override { return "zero"; }
  double value(const MarginalTuple&) const override { return 0.0; }
  double smoothed(const MarginalTuple& p, double, MarginalTuple* grad) const override {
    if (grad) *grad = detail::zeros_like(p);
    return 0.0;
  }
  std::optional<SupportMinimum> exact_minimum(const SupportSet& s) const override {
    const JointDistribution p = JointDistribution::uniform(s);
    return SupportMinimum{0.0, p, marginals_of(p), true};
  }
};

/// User-supplied F with a gradient callback; minimized by smoothing-free ascent.
class CallbackFunction final : public SymmetricConvexFunction {
 public:
  using ValueFn = std::function<double(const MarginalTuple&)>;
  using GradFn = std::function<MarginalTuple(const MarginalTuple&)>;

  CallbackFunction(std::string name, ValueFn value, GradFn grad)
      : name_(std::move(name)), value_(std::move(value)), grad_(std::move(grad)) {}

  std::string name() const override { return name_; }
  double value(const MarginalTuple& p) const override { return value_(p); }
  double smoothed(const MarginalTuple& p, double, MarginalTuple* grad) const override {
    if (grad) *grad = grad_(p);
    return value_(p);
  }

 private:
  std::string name_;
  ValueFn value_;
  GradFn grad_;
};

namespace detail {

/// -F_mu as a concave objective for the ascent solver.
struct NegatedSmoothed {
  const SymmetricConvexFunction* f;
  double mu;
  double value(const MarginalTuple& p) const { return -f->smoothed(p, mu, nullptr); }
  MarginalTuple gradient(const MarginalTuple& p) const {
    MarginalTuple g;
    f->smoothed(p, mu, &g);
    for (RealVector& v : g.legs) v = -v;
    return g;
  }
};

}  // namespace detail

/// min over P supported on `s` of F(marginals(P)). Uses F's direct program when it
/// has one, otherwise exponentiated-gradient descent along the smoothing schedule.
/// Throws Infeasible when F is +infinity on every marginal reachable from `s`.
inline SupportMinimum min_convex_over_support(const SupportSet& s, const SymmetricConvexFunction& f) {
  detail::require(!s.empty(), "min_convex_over_support: empty support");
  if (auto exact = f.exact_minimum(s)) {
    if (!std::isfinite(exact->value)) throw Infeasible("min_convex_over_support: F is infinite on the support");
    return *exact;
  }
  RealVector w = RealVector::Constant(static_cast<Eigen::Index>(s.size()), 1.0 / static_cast<double>(s.size()));
  SupportMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  for (double mu : f.smoothing_schedule()) {
    const AscentResult r = maximize_over_support(s, detail::NegatedSmoothed{&f, mu}, AscentOptions{}, &w);
    w = r.distribution.weights;
    const double v = f.value(r.marginals);
    if (v < best.value) best = SupportMinimum{v, r.distribution, r.marginals, false};
  }
  if (!std::isfinite(best.value)) throw Infeasible("min_convex_over_support: F is infinite on the support");
  return best;
}

}  // namespace spectrumkit
