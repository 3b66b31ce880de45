#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "basis_search.hpp"
#include "convex.hpp"
#include "distribution.hpp"
#include "entropy_opt.hpp"
#include "errors.hpp"
#include "scaling.hpp"
#include "tensor.hpp"

namespace spectrumkit {

/// Value of a spectral functional with the data that certifies it.
struct FunctionalCertificate {
  std::string functional;   // "quantum", "support", "symmetric", "symmetric-support"
  double value = 0.0;       // linear scale
  double bits = 0.0;        // log2 of value
  RealVector theta;
  MarginalTuple witness;    // spectra (quantum side) or support marginals
  GroupElement group;       // scaling group (quantum side) or best basis (support side)
  std::string origin;       // which candidate produced the basis
  bool converged = false;
  double gap = 0.0;         // residual (quantum side) or value - quantum value (support side)
  int iterations = 0;
  bool eta_sensitive = false;
};

/// Entropic scaling with explicit tolerance and iteration cap.
inline std::pair<FunctionalCertificate, ScalingTrace> entropic_scaling(const Tensor& t, const ThetaWeights& theta,
                                                                       double tol = 1e-10, int max_iter = 200000) {
  detail::require(!t.is_zero(), "entropic_scaling: zero tensor");
  theta.validate();
  detail::require(theta.size() == t.order(), "entropic_scaling: theta length differs from order");
  ScalingOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  ScalingResult r = entropic_scaling_run(t, theta.values, opt);
  FunctionalCertificate c;
  c.functional = "quantum";
  c.bits = r.bits;
  c.value = std::exp2(r.bits);
  c.theta = theta.values;
  c.witness = r.spectra;
  c.group = r.trace.group;
  c.converged = r.trace.converged;
  c.gap = r.trace.residual;
  c.iterations = r.trace.iterations;
  c.origin = "entropic-scaling";
  return {std::move(c), std::move(r.trace)};
}

/// F_theta(t) = max over the moment polytope of 2^{sum theta_j H(p_j)}.
inline FunctionalCertificate quantum_functional(const Tensor& t, const ThetaWeights& theta) {
  return entropic_scaling(t, theta).first;
}

/// Support-side value 2^{max_P sum theta_j H(p_j)} for P on support(g . t).
inline double support_value(const SupportSet& s, const ThetaWeights& theta) {
  return std::exp2(max_weighted_entropy(s, theta).bits);
}

/// Upper bound on zeta^theta(t) = min_g max_{p in Omega(g.t)} 2^{sum theta_j H(p_j)}
/// by basis search; gap = value - F_theta(t).
inline FunctionalCertificate support_functional(const Tensor& t, const ThetaWeights& theta, const SearchConfig& cfg = {}) {
  detail::require(!t.is_zero(), "support_functional: zero tensor");
  theta.validate();
  detail::require(theta.size() == t.order(), "support_functional: theta length differs from order");
  const FunctionalCertificate q = quantum_functional(t, theta);
  const SearchResult best =
      search_bases(t, [&](const SupportSet& s) { return support_value(s, theta); }, cfg, {}, {q.group});
  const EntropyMaximum m = max_weighted_entropy(best.support, theta);
  FunctionalCertificate c;
  c.functional = "support";
  c.bits = m.bits;
  c.value = std::exp2(m.bits);
  c.theta = theta.values;
  c.witness = m.marginals;
  c.group = best.basis;
  c.origin = best.origin;
  c.converged = m.converged;
  c.gap = c.value - q.value;
  const Tensor s = apply_factors(best.basis.factors, t);
  for (double scale : {1e-3, 1e3}) {
    const double e = std::min(cfg.eta * scale, 0.5);
    if (std::abs(support_value(support(s, e), theta) - c.value) > 1e-6) c.eta_sensitive = true;
  }
  return c;
}

inline void require_cubic(const Tensor& t, const std::string& what) {
  for (int i = 1; i < t.order(); ++i) detail::require(t.dim(i) == t.dim(0), what + ": all dims must be equal");
}

/// F_Sym(t) = max over the symmetric moment polytope of 2^{H(p/d)}.
inline FunctionalCertificate symmetric_quantum_functional(const Tensor& t, const ScalingOptions& opt = {}) {
  detail::require(!t.is_zero(), "symmetric_quantum_functional: zero tensor");
  require_cubic(t, "symmetric_quantum_functional");
  ScalingResult r = symmetric_scaling_run(t, opt);
  FunctionalCertificate c;
  c.functional = "symmetric";
  c.bits = r.bits;
  c.value = std::exp2(r.bits);
  c.theta = RealVector::Constant(t.order(), 1.0 / t.order());
  const Matrix sym = [&] {
    Matrix m = Matrix::Zero(t.dim(0), t.dim(0));
    for (const HermitianEig& e : r.eig) m += e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
    return Matrix(m / static_cast<double>(t.order()));
  }();
  c.witness.legs.push_back(spectrum(sym).cwiseMax(0.0));
  c.group = r.trace.group;
  c.converged = r.trace.converged;
  c.gap = r.trace.residual;
  c.iterations = r.trace.iterations;
  c.origin = "symmetric-scaling";
  return c;
}

/// H((sum_i p_i) / d) in bits, concave in the marginals.
struct SymmetricEntropyObjective {
  int d;
  RealVector average(const MarginalTuple& p) const {
    RealVector q = RealVector::Zero(p[0].size());
    for (int i = 0; i < p.order(); ++i) q += p[i];
    return q / static_cast<double>(d);
  }
  double value(const MarginalTuple& p) const { return shannon_entropy(average(p)); }
  MarginalTuple gradient(const MarginalTuple& p) const {
    const RealVector q = average(p);
    RealVector g(q.size());
    for (Eigen::Index a = 0; a < q.size(); ++a)
      g[a] = -(std::log2(std::max(q[a], 1e-300)) + 1.0 / std::log(2.0)) / static_cast<double>(d);
    MarginalTuple out;
    for (int i = 0; i < p.order(); ++i) out.legs.push_back(g);
    return out;
  }
};

/// min over diagonal bases g^{x d} of max_{P on support} 2^{H(sum_i p_i / d)}.
inline FunctionalCertificate symmetric_support_functional(const Tensor& t, const SearchConfig& cfg = {}) {
  detail::require(!t.is_zero(), "symmetric_support_functional: zero tensor");
  require_cubic(t, "symmetric_support_functional");
  const int d = t.order();
  const FunctionalCertificate q = symmetric_quantum_functional(t);
  auto score = [&](const SupportSet& s) {
    return std::exp2(maximize_over_support(s, SymmetricEntropyObjective{d}).value);
  };
  ActionSpec diag;
  diag.diagonal = true;
  const SearchResult best = search_bases(t, score, cfg, diag, {q.group});
  const AscentResult m = maximize_over_support(best.support, SymmetricEntropyObjective{d});
  FunctionalCertificate c;
  c.functional = "symmetric-support";
  c.bits = m.value;
  c.value = std::exp2(m.value);
  c.theta = q.theta;
  c.witness.legs.push_back(SymmetricEntropyObjective{d}.average(m.marginals));
  c.group = best.basis;
  c.origin = best.origin;
  c.converged = m.converged;
  c.gap = c.value - q.value;
  return c;
}

struct MinimaxReport {
  double lhs = 0.0;   // min of F over the moment polytope (computed from above)
  double rhs = 0.0;   // max over bases of min of F over the support polytope (from below)
  double gap = 0.0;   // lhs - rhs
  MarginalTuple lhs_witness;
  GroupElement lhs_group;
  JointDistribution rhs_distribution;
  GroupElement rhs_basis;
  std::string rhs_origin;
  bool converged = false;
};

/// Both sides of min_{p in Delta(t)} F(p) = max_g min_{p in Omega(g.t)} F(p).
inline MinimaxReport minimax_gap(const Tensor& t, const SymmetricConvexFunction& f, const SearchConfig& cfg = {},
                                 const ActionSpec& action = {}) {
  detail::require(!t.is_zero(), "minimax_gap: zero tensor");
  MinimaxReport r;
  if (const RealVector* theta = f.entropy_weights(); theta && action.legs.empty()) {
    const ScalingResult s = entropic_scaling_run(t, *theta);
    r.lhs = f.value(s.spectra);
    r.lhs_witness = s.spectra;
    r.lhs_group = s.trace.group;
    r.converged = s.trace.converged;
  } else {
    DescentResult s = geodesic_descent(t, f, action.legs);
    if (!s.converged) {
      // Stalled descent: restart from the uniform-entropy scaling point of the acted legs.
      RealVector theta = RealVector::Zero(t.order());
      for (int j = 0; j < t.order(); ++j) theta[j] = action.legs.empty() || action.legs[j] ? 1.0 : 0.0;
      const ScalingResult e = entropic_scaling_run(t, theta / theta.sum());
      DescentResult w = geodesic_descent(e.scaled, f, action.legs);
      if (w.value < s.value) {
        w.group = w.group.compose(e.trace.group);
        s = std::move(w);
      }
    }
    r.lhs = s.value;
    r.lhs_witness = s.spectra;
    r.lhs_group = s.group;
    r.converged = s.converged;
  }
  // Searching for a max: score is the negated inner minimum.
  auto score = [&](const SupportSet& s) { return -min_convex_over_support(s, f).value; };
  const SearchResult best = search_bases(t, score, cfg, action, {r.lhs_group});
  const SupportMinimum m = min_convex_over_support(best.support, f);
  r.rhs = m.value;
  r.rhs_distribution = m.distribution;
  r.rhs_basis = best.basis;
  r.rhs_origin = best.origin;
  r.gap = r.lhs - r.rhs;
  return r;
}

}  // namespace spectrumkit
