#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "tensor.hpp"

namespace spectrumkit {

/// Weight vector in one of three roles:
///   kTheta: probability vector (sum 1, >= 0);
///   kXi:    nonnegative with max_i xi_i = 1;
///   kAlpha: strictly positive.
struct ThetaWeights {
  enum class Role { kTheta, kXi, kAlpha };

  RealVector values;
  Role role = Role::kTheta;

  static ThetaWeights theta(RealVector v) { return make(std::move(v), Role::kTheta); }
  static ThetaWeights xi(RealVector v) { return make(std::move(v), Role::kXi); }
  static ThetaWeights alpha(RealVector v) { return make(std::move(v), Role::kAlpha); }
  static ThetaWeights uniform_theta(int d) { return theta(RealVector::Constant(d, 1.0 / d)); }
  static ThetaWeights ones_xi(int d) { return xi(RealVector::Ones(d)); }
  static ThetaWeights ones_alpha(int d) { return alpha(RealVector::Ones(d)); }

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }

  void validate() const {
    detail::require(values.size() >= 1, "weights: empty weight vector");
    for (Eigen::Index k = 0; k < values.size(); ++k)
      detail::require(std::isfinite(values[k]), "weights: non-finite entry");
    switch (role) {
      case Role::kTheta:
        detail::require(values.minCoeff() >= 0.0, "theta: entries must be nonnegative");
        detail::require(std::abs(values.sum() - 1.0) <= 1e-12, "theta: entries must sum to 1");
        break;
      case Role::kXi:
        detail::require(values.minCoeff() >= 0.0, "xi: entries must be nonnegative");
        detail::require(std::abs(values.maxCoeff() - 1.0) <= 1e-12, "xi: max entry must be 1");
        break;
      case Role::kAlpha:
        detail::require(values.minCoeff() > 0.0, "alpha: entries must be positive");
        break;
    }
  }

 private:
  static ThetaWeights make(RealVector v, Role r) {
    ThetaWeights w{std::move(v), r};
    w.validate();
    return w;
  }
};

/// Tuple of per-leg probability vectors (p_1, ..., p_d).
struct MarginalTuple {
  std::vector<RealVector> legs;

  int order() const { return static_cast<int>(legs.size()); }
  const RealVector& operator[](int i) const { return legs[static_cast<std::size_t>(i)]; }

  void validate(double tol = 1e-12) const {
    for (const RealVector& p : legs) {
      detail::require(p.size() >= 1, "marginals: empty leg");
      detail::require(p.minCoeff() >= -tol, "marginals: negative entry");
      detail::require(std::abs(p.sum() - 1.0) <= tol * std::max<double>(1.0, p.size()),
                      "marginals: leg does not sum to 1");
    }
  }

  /// Each leg sorted non-increasing.
  MarginalTuple sorted() const {
    MarginalTuple out = *this;
    for (RealVector& p : out.legs) std::sort(p.data(), p.data() + p.size(), std::greater<double>());
    return out;
  }

  double max_abs_diff(const MarginalTuple& o) const {
    double m = 0.0;
    for (std::size_t k = 0; k < legs.size(); ++k) m = std::max(m, (legs[k] - o.legs.at(k)).cwiseAbs().maxCoeff());
    return m;
  }
};

/// Probability weights on the points of a support set.
struct JointDistribution {
  SupportSet support;
  RealVector weights;

  void validate() const {
    detail::require(static_cast<Eigen::Index>(support.points.size()) == weights.size(),
                    "joint distribution: one weight per support point required");
    detail::require(weights.size() == 0 || weights.minCoeff() >= -1e-14, "joint distribution: negative weight");
    detail::require(std::abs(weights.sum() - 1.0) <= 1e-12 * std::max<double>(1.0, weights.size()),
                    "joint distribution: weights must sum to 1");
  }

  static JointDistribution uniform(SupportSet s) {
    detail::require(!s.empty(), "joint distribution: empty support");
    const Eigen::Index n = static_cast<Eigen::Index>(s.points.size());
    return {std::move(s), RealVector::Constant(n, 1.0 / static_cast<double>(n))};
  }
};

/// (p_i)_j = sum of weights of points whose i-th index is j.
inline MarginalTuple marginals_of(const SupportSet& s, const RealVector& weights) {
  MarginalTuple m;
  for (int n : s.dims) m.legs.push_back(RealVector::Zero(n));
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const double w = std::max(weights[static_cast<Eigen::Index>(k)], 0.0);
    for (std::size_t i = 0; i < s.points[k].size(); ++i) m.legs[i][s.points[k][i]] += w;
  }
  return m;
}

inline MarginalTuple marginals_of(const JointDistribution& p) {
  p.validate();
  return marginals_of(p.support, p.weights);
}

/// sum_j theta_j H(p_j) in bits.
inline double weighted_entropy(const MarginalTuple& p, const RealVector& theta) {
  double h = 0.0;
  for (int j = 0; j < p.order(); ++j)
    if (theta[j] != 0.0) h += theta[j] * shannon_entropy(p[j]);
  return h;
}

}  // namespace spectrumkit
