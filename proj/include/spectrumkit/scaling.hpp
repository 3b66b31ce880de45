#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "convex.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "tensor.hpp"

namespace spectrumkit {

/// (mu(t)_1, ..., mu(t)_d) with mu(t)_i = rho_i(t).
inline std::vector<Matrix> moment_map(const Tensor& t) {
  detail::require(!t.is_zero(), "moment_map: zero tensor");
  std::vector<Matrix> out;
  for (int i = 0; i < t.order(); ++i) out.push_back(marginal(t, i));
  return out;
}

/// Diagonals of the moment map components.
inline MarginalTuple torus_moment_map(const Tensor& t) {
  MarginalTuple p;
  for (const Matrix& rho : moment_map(t)) p.legs.push_back(rho.diagonal().real());
  return p;
}

/// log <t, (x_1 x ... x x_d) t> for positive definite x_i.
inline double kempf_ness_value(const Tensor& t, const GroupElement& x) {
  detail::require(!t.is_zero(), "kempf_ness_value: zero tensor");
  detail::require(x.order() == t.order(), "kempf_ness_value: wrong number of factors");
  for (int k = 0; k < x.order(); ++k) {
    const Matrix& f = x.factors[k];
    detail::require(f.rows() == t.dim(k) && f.cols() == t.dim(k), "kempf_ness_value: factor has wrong shape");
    detail::require(is_hermitian(f, 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff())),
                    "kempf_ness_value: factor " + std::to_string(k + 1) + " is not Hermitian");
    detail::require(spectrum(0.5 * (f + f.adjoint())).minCoeff() > 0.0,
                    "kempf_ness_value: factor " + std::to_string(k + 1) + " is not positive definite");
  }
  const Tensor xt = apply_factors(x.factors, t);
  return std::log(t.entries().dot(xt.entries()).real());
}

struct ScalingOptions {
  double tol = 1e-10;           // objective change across the window (bits)
  double spectrum_tol = 1e-8;   // eigenvalue movement across the window
  int window = 50;
  int max_iter = 200000;
  double pinv_cutoff = 1e-13;
};

struct ScalingTrace {
  int iterations = 0;
  std::vector<double> objective;  // bits; entry 0 is the starting point
  GroupElement group;             // scaled tensor = group . t / norm
  double residual = 0.0;          // objective change across the last window
  bool converged = false;
  double max_decrease = 0.0;      // largest single-step decrease seen
};

struct ScalingResult {
  Tensor scaled;                 // unit norm
  std::vector<HermitianEig> eig;  // per-leg eigendecompositions of rho_j(scaled)
  MarginalTuple spectra;          // sorted non-increasing
  double bits = 0.0;
  ScalingTrace trace;
};

namespace detail {

struct LegState;
/// Called after every accepted step with (step count, state, accumulated group).
using ScalingObserver = std::function<void(int, const LegState&, const GroupElement&)>;

struct LegState {
  Tensor s;
  std::vector<HermitianEig> eig;
  MarginalTuple spectra;
};

inline LegState leg_state(Tensor s) {
  s = s.normalized();
  LegState st{std::move(s), {}, {}};
  for (int i = 0; i < st.s.order(); ++i) {
    HermitianEig e = hermitian_eig(marginal(st.s, i));
    e.values = e.values.cwiseMax(0.0);
    st.spectra.legs.push_back(e.values);
    st.eig.push_back(std::move(e));
  }
  return st;
}

/// V f(lambda) V^dagger with f(lambda) = lambda^exponent on eigenvalues above the
/// cutoff and 1 on the (numerical) kernel, so the factor stays invertible.
inline Matrix scaled_power(const HermitianEig& e, double exponent, double rel_cutoff) {
  const double top = e.values.size() ? e.values[0] : 0.0;
  RealVector f(e.values.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const double lam = e.values[k];
    f[k] = lam > rel_cutoff * top && lam > 0.0 ? std::pow(lam, exponent) : 1.0;
  }
  return e.vectors * f.asDiagonal() * e.vectors.adjoint();
}

inline double spectra_distance(const MarginalTuple& a, const MarginalTuple& b) { return a.max_abs_diff(b); }

}  // namespace detail

/// Called with the trace of every finished scaling run when set (audits).
/// Same rules as lp_observer: install before threads start, keep it thread-safe.
inline std::function<void(const ScalingTrace&)>& scaling_trace_observer() {
  static std::function<void(const ScalingTrace&)> observer;
  return observer;
}

namespace detail {

/// Shared fixed-point loop. `factors(state, damp)` proposes leg operators (empty =
/// identity), `objective(state)` scores a state; a step that lowers the objective
/// by more than 1e-12 is retried with a damped exponent.
inline ScalingResult run_scaling(const Tensor& t, const ScalingOptions& opt,
                                 const std::function<std::vector<Matrix>(const LegState&, double)>& factors,
                                 const std::function<double(const LegState&)>& objective,
                                 const ScalingObserver& observer = nullptr) {
  detail::require(!t.is_zero(), "scaling: zero tensor");
  LegState st = leg_state(t);
  double obj = objective(st);
  ScalingTrace trace;
  trace.group = GroupElement::identity(t.dims());
  trace.group.unitary = false;
  trace.objective.push_back(obj);
  std::vector<MarginalTuple> history{st.spectra};
  double damp = 1.0;
  int accepted = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    const std::vector<Matrix> f = factors(st, damp);
    LegState next = leg_state(apply_factors(f, st.s));
    const double nobj = objective(next);
    if (nobj < obj - 1e-12) {
      if (damp > 1.0 / 1024) {
        damp *= 0.5;
        continue;
      }
      break;  // no monotone step left at this precision
    }
    const double moved = (next.s.entries() - st.s.entries()).norm();
    trace.max_decrease = std::max(trace.max_decrease, obj - nobj);
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (f[k].size() == 0) continue;
      Matrix g = f[k] * trace.group.factors[k];
      trace.group.factors[k] = g / g.norm() * std::sqrt(static_cast<double>(g.rows()));
    }
    st = std::move(next);
    obj = nobj;
    damp = std::min(1.0, damp * 2.0);
    if (moved <= 1e-14) {
      trace.converged = true;
      trace.residual = 0.0;
      break;
    }
    ++accepted;
    if (observer) observer(accepted, st, trace.group);
    trace.objective.push_back(obj);
    history.push_back(st.spectra);
    const int w = opt.window;
    if (static_cast<int>(trace.objective.size()) > w) {
      const std::size_t back = trace.objective.size() - 1 - static_cast<std::size_t>(w);
      trace.residual = obj - trace.objective[back];
      const double movement = spectra_distance(st.spectra, history[back]);
      if (std::abs(trace.residual) < opt.tol && movement < opt.spectrum_tol) {
        trace.converged = true;
        break;
      }
    }
  }
  trace.iterations = accepted;
  if (const auto& audit = scaling_trace_observer()) audit(trace);
  ScalingResult res;
  res.bits = obj;
  res.spectra = st.spectra;
  res.eig = std::move(st.eig);
  res.scaled = std::move(st.s);
  res.trace = std::move(trace);
  return res;
}

}  // namespace detail

/// Entropic scaling t <- (rho_1^{-theta_1/2} x ... x rho_d^{-theta_d/2}) t with
/// renormalization. The objective sum_j theta_j H(spec rho_j) (bits) is monotone.
inline ScalingResult entropic_scaling_run(const Tensor& t, const RealVector& theta, const ScalingOptions& opt = {},
                                          const detail::ScalingObserver& observer = nullptr) {
  detail::require(theta.size() == t.order(), "entropic_scaling: weight length differs from order");
  auto factors = [&](const detail::LegState& st, double damp) {
    std::vector<Matrix> f(static_cast<std::size_t>(t.order()));
    for (int j = 0; j < t.order(); ++j)
      if (theta[j] != 0.0) f[j] = detail::scaled_power(st.eig[j], -0.5 * theta[j] * damp, opt.pinv_cutoff);
    return f;
  };
  auto objective = [&](const detail::LegState& st) { return weighted_entropy(st.spectra, theta); };
  return detail::run_scaling(t, opt, factors, objective, observer);
}

/// rho_Sym = (1/d) sum_i rho_i for tensors with equal leg dimensions.
inline Matrix symmetric_marginal(const Tensor& t) {
  detail::require(!t.is_zero(), "symmetric marginal: zero tensor");
  for (int i = 1; i < t.order(); ++i)
    detail::require(t.dim(i) == t.dim(0), "symmetric marginal: all dims must be equal");
  Matrix m = Matrix::Zero(t.dim(0), t.dim(0));
  for (int i = 0; i < t.order(); ++i) m += marginal(t, i);
  return m / static_cast<double>(t.order());
}

/// Diagonal scaling t <- (g x ... x g) t with g = rho_Sym^{-1/(2d)}; the objective
/// H(spec rho_Sym) (bits) is monotone.
inline ScalingResult symmetric_scaling_run(const Tensor& t, const ScalingOptions& opt = {},
                                           const detail::ScalingObserver& observer = nullptr) {
  const int d = t.order();
  (void)symmetric_marginal(t);
  auto sym_eig = [d](const detail::LegState& st) {
    Matrix m = Matrix::Zero(st.s.dim(0), st.s.dim(0));
    for (int i = 0; i < d; ++i) m += st.eig[i].vectors * st.eig[i].values.asDiagonal() * st.eig[i].vectors.adjoint();
    HermitianEig e = hermitian_eig(m / static_cast<double>(d));
    e.values = e.values.cwiseMax(0.0);
    return e;
  };
  auto factors = [&](const detail::LegState& st, double damp) {
    const Matrix g = detail::scaled_power(sym_eig(st), -damp / (2.0 * d), opt.pinv_cutoff);
    return std::vector<Matrix>(static_cast<std::size_t>(d), g);
  };
  auto objective = [&](const detail::LegState& st) { return shannon_entropy(sym_eig(st).values); };
  return detail::run_scaling(t, opt, factors, objective, observer);
}

struct DescentOptions {
  int max_iter_per_stage = 4000;
  int window = 50;
  double stall_tol = 1e-12;
  double grad_tol = 1e-11;
};

struct DescentResult {
  double value = 0.0;          // exact F at the final spectra
  MarginalTuple spectra;
  Tensor scaled;
  GroupElement group;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes F(spec rho(x . t)) over positive definite x acting on the legs in
/// `acted` (empty = all legs) by Riemannian gradient descent with Armijo steps,
/// following F's smoothing schedule.
inline DescentResult geodesic_descent(const Tensor& t, const SymmetricConvexFunction& f, std::vector<bool> acted = {},
                                      const DescentOptions& opt = {}) {
  detail::require(!t.is_zero(), "geodesic_descent: zero tensor");
  const int d = t.order();
  if (acted.empty()) acted.assign(static_cast<std::size_t>(d), true);
  detail::require(static_cast<int>(acted.size()) == d, "geodesic_descent: leg mask has wrong length");

  detail::LegState st = detail::leg_state(t);
  GroupElement acc = GroupElement::identity(t.dims());
  acc.unitary = false;
  DescentResult out;
  out.converged = true;

  auto smooth_value = [&](const detail::LegState& s, double mu, MarginalTuple* grad) {
    return f.smoothed(s.spectra, mu, grad);
  };

  for (double mu : f.smoothing_schedule()) {
    double eta = 1.0;
    std::vector<double> hist;
    bool stage_done = false;
    for (int it = 0; it < opt.max_iter_per_stage && !stage_done; ++it) {
      MarginalTuple grad;
      const double phi = smooth_value(st, mu, &grad);
      hist.push_back(phi);
      // O s = sum_j Gamma_j on leg j.
      ComplexVector os = ComplexVector::Zero(st.s.size());
      for (int j = 0; j < d; ++j) {
        if (grad[j].cwiseAbs().maxCoeff() == 0.0) continue;
        const Matrix gam = st.eig[j].vectors * grad[j].asDiagonal() * st.eig[j].vectors.adjoint();
        os += st.s.apply_on_leg(j, gam).entries();
      }
      const Tensor ot(st.s.dims(), os);
      const double sos = st.s.entries().dot(os).real();
      std::vector<Matrix> g(static_cast<std::size_t>(d));
      double gnorm2 = 0.0;
      for (int k = 0; k < d; ++k) {
        if (!acted[k]) continue;
        const Matrix c = flattening(st.s, k) * flattening(ot, k).adjoint();
        const Matrix rho = st.eig[k].vectors * st.eig[k].values.asDiagonal() * st.eig[k].vectors.adjoint();
        g[k] = c + c.adjoint() - 2.0 * sos * rho;
        gnorm2 += g[k].squaredNorm();
      }
      if (gnorm2 < opt.grad_tol * opt.grad_tol) break;
      if (static_cast<int>(hist.size()) > opt.window &&
          hist[hist.size() - 1 - static_cast<std::size_t>(opt.window)] - phi <= opt.stall_tol * std::max(1.0, std::abs(phi)))
        break;
      // Armijo backtracking along exp(-eta G).
      bool moved = false;
      while (eta > 1e-14) {
        std::vector<Matrix> step(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k)
          if (acted[k]) step[k] = hermitian_exp(-eta * 0.5 * (g[k] + g[k].adjoint()));
        detail::LegState trial = detail::leg_state(apply_factors(step, st.s));
        const double tphi = smooth_value(trial, mu, nullptr);
        if (tphi <= phi - 1e-4 * eta * gnorm2) {
          for (int k = 0; k < d; ++k)
            if (acted[k]) {
              Matrix a = step[k] * acc.factors[k];
              acc.factors[k] = a / a.norm() * std::sqrt(static_cast<double>(a.rows()));
            }
          st = std::move(trial);
          eta = std::min(eta * 2.0, 1e3);
          moved = true;
          ++out.iterations;
          break;
        }
        eta *= 0.5;
      }
      if (!moved) stage_done = true;
      if (it + 1 == opt.max_iter_per_stage) out.converged = false;
    }
  }
  // Infima on the boundary of the orbit closure are only approached along rays;
  // extrapolate along P^c . t, P the positive part of the accumulated group.
  {
    std::vector<Matrix> logp(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      if (!acted[k]) continue;
      const HermitianEig e = hermitian_eig(acc.factors[k].adjoint() * acc.factors[k]);
      RealVector l = 0.5 * e.values.cwiseMax(1e-300).array().log();
      l.array() -= l.mean();
      logp[k] = e.vectors * l.asDiagonal() * e.vectors.adjoint();
    }
    double best = f.value(st.spectra);
    for (double c = 2.0; c <= 1024.0; c *= 2.0) {
      std::vector<Matrix> pc(static_cast<std::size_t>(d));
      bool ok = true;
      for (int k = 0; k < d; ++k) {
        if (!acted[k]) {
          pc[k] = Matrix::Identity(t.dim(k), t.dim(k));
          continue;
        }
        pc[k] = hermitian_exp(c * logp[k]);
        ok = ok && condition_number(pc[k]) < 1e12;
      }
      if (!ok) break;
      detail::LegState trial = detail::leg_state(apply_factors(pc, t));
      const double v = f.value(trial.spectra);
      if (!(v < best - 1e-15)) break;
      best = v;
      st = std::move(trial);
      for (int k = 0; k < d; ++k)
        if (acted[k]) acc.factors[k] = pc[k] / pc[k].norm() * std::sqrt(static_cast<double>(pc[k].rows()));
    }
  }
  out.value = f.value(st.spectra);
  out.spectra = st.spectra;
  out.scaled = st.s;
  out.group = std::move(acc);
  return out;
}

}  // namespace spectrumkit
