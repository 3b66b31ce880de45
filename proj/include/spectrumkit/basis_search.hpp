#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scaling.hpp"
#include "tensor.hpp"

namespace spectrumkit {

/// Budget and randomness for min-over-basis searches.
struct SearchConfig {
  int restarts = 20;
  std::uint64_t seed = 0;
  double eta = kDefaultEta;
  int jobs = 1;
  int restart_iters = 400;
  std::vector<int> checkpoints = {5, 10, 25, 50, 75, 100, 200, 400};
};

/// Which group acts: independent matrices on the selected legs, or one matrix on all legs.
struct ActionSpec {
  std::vector<bool> legs;  // empty = all legs
  bool diagonal = false;
};

struct BasisCandidate {
  GroupElement basis;
  std::string origin;
};

struct SearchResult {
  double value = std::numeric_limits<double>::infinity();
  GroupElement basis;
  SupportSet support;
  std::string origin;
  int candidates = 0;
  int distinct_supports = 0;
};

namespace detail {

inline bool leg_acted(const ActionSpec& a, int k) {
  return a.legs.empty() || (k < static_cast<int>(a.legs.size()) && a.legs[k]);
}

/// Basis changes suggested by an accumulated scaling group `acc` and the scaled state:
/// the eigenbasis of acc^dagger acc (unitary) and V^dagger acc with V the marginal
/// eigenbasis of the scaled tensor (general linear).
inline std::vector<BasisCandidate> candidates_from_group(const GroupElement& acc, const std::vector<HermitianEig>& eig,
                                                         const ActionSpec& action, const std::string& tag) {
  const int d = acc.order();
  GroupElement uni = GroupElement::identity([&] {
    Dims dims;
    for (const Matrix& f : acc.factors) dims.push_back(static_cast<int>(f.rows()));
    return dims;
  }());
  GroupElement gl = uni;
  gl.unitary = false;
  Matrix sym_v;
  if (action.diagonal) {
    Matrix m = Matrix::Zero(acc.factors[0].rows(), acc.factors[0].rows());
    for (const HermitianEig& e : eig) m += e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
    sym_v = hermitian_eig(m).vectors;
  }
  for (int k = 0; k < d; ++k) {
    if (!leg_acted(action, k)) continue;
    const Matrix& a = acc.factors[k];
    const Matrix w = hermitian_eig(a.adjoint() * a).vectors;
    uni.factors[k] = w.adjoint();
    const Matrix& v = action.diagonal ? sym_v : eig[k].vectors;
    gl.factors[k] = v.adjoint() * a;
  }
  std::vector<BasisCandidate> out{{uni, tag + ":unitary"}};
  bool ok = true;
  for (const Matrix& f : gl.factors) ok = ok && condition_number(f) < 1e12;
  if (ok) out.push_back({gl, tag + ":gl"});
  return out;
}

inline GroupElement random_basis(const Dims& dims, const ActionSpec& action, Rng& rng) {
  GroupElement u = GroupElement::identity(dims);
  if (action.diagonal) {
    const Matrix h = haar_unitary(dims[0], rng);
    for (auto& f : u.factors) f = h;
    return u;
  }
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (leg_acted(action, static_cast<int>(k))) u.factors[k] = haar_unitary(dims[k], rng);
  return u;
}

/// Candidates along one scaling trajectory started from base . t.
inline std::vector<BasisCandidate> trajectory_candidates(const Tensor& t, const GroupElement& base, const SearchConfig& cfg,
                                                         const ActionSpec& action, const std::string& tag) {
  std::vector<BasisCandidate> out;
  const Tensor start = apply_factors(base.factors, t);
  ScalingOptions opt;
  opt.max_iter = cfg.restart_iters;
  auto compose = [&](const BasisCandidate& c) {
    BasisCandidate r = c;
    r.basis = c.basis.compose(base);
    return r;
  };
  auto observer = [&](int step, const LegState& st, const GroupElement& acc) {
    if (std::find(cfg.checkpoints.begin(), cfg.checkpoints.end(), step) == cfg.checkpoints.end()) return;
    for (const BasisCandidate& c : candidates_from_group(acc, st.eig, action, tag + "@" + std::to_string(step)))
      out.push_back(compose(c));
  };
  ScalingResult r;
  if (action.diagonal) {
    r = symmetric_scaling_run(start, opt, observer);
  } else {
    RealVector theta = RealVector::Zero(t.order());
    int count = 0;
    for (int k = 0; k < t.order(); ++k)
      if (leg_acted(action, k)) ++count;
    for (int k = 0; k < t.order(); ++k)
      if (leg_acted(action, k)) theta[k] = 1.0 / count;
    r = entropic_scaling_run(start, theta, opt, observer);
  }
  for (const BasisCandidate& c : candidates_from_group(r.trace.group, r.eig, action, tag + "@end")) out.push_back(compose(c));
  return out;
}

}  // namespace detail

/// Minimizes score(support(g . t, eta)) over candidate bases g: the identity, the
/// supplied seed groups, and bases read off scaling trajectories from t and from
/// `cfg.restarts` Haar-random rotations of t. Results are independent of cfg.jobs.
template <class Score>
SearchResult search_bases(const Tensor& t, Score&& score, const SearchConfig& cfg, const ActionSpec& action = {},
                          const std::vector<GroupElement>& seeds = {}) {
  detail::require(!t.is_zero(), "basis search: zero tensor");
  detail::require(cfg.restarts >= 0, "basis search: restarts must be nonnegative");
  struct StreamBest {
    SearchResult best;
    std::map<SupportSet, double> seen;
  };
  auto run_stream = [&](std::size_t stream) {
    StreamBest sb;
    std::vector<BasisCandidate> cands;
    if (stream == 0) {
      cands.push_back({GroupElement::identity(t.dims()), "identity"});
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const std::string tag = "seed" + std::to_string(k);
        BasisCandidate direct{seeds[k], tag};
        bool ok = true;
        for (const Matrix& f : seeds[k].factors) ok = ok && condition_number(f) < 1e12;
        if (ok) cands.push_back(direct);
        // Eigenbasis of g^dagger g with no scaled state: use identity marginal bases.
        const Tensor s = apply_factors(seeds[k].factors, t);
        std::vector<HermitianEig> eig;
        for (int i = 0; i < t.order(); ++i) eig.push_back(hermitian_eig(marginal(s, i)));
        for (const BasisCandidate& c : detail::candidates_from_group(seeds[k], eig, action, tag)) cands.push_back(c);
      }
      for (const BasisCandidate& c : detail::trajectory_candidates(t, GroupElement::identity(t.dims()), cfg, action, "scaling"))
        cands.push_back(c);
    } else {
      Rng rng(derive_seed(cfg.seed, stream));
      const GroupElement u = detail::random_basis(t.dims(), action, rng);
      const std::string tag = "restart" + std::to_string(stream);
      cands.push_back({u, tag});
      for (const BasisCandidate& c : detail::trajectory_candidates(t, u, cfg, action, tag)) cands.push_back(c);
    }
    for (const BasisCandidate& c : cands) {
      ++sb.best.candidates;
      const Tensor s = apply_factors(c.basis.factors, t);
      if (s.is_zero()) continue;
      SupportSet supp = support(s, cfg.eta);
      auto it = sb.seen.find(supp);
      double v;
      if (it == sb.seen.end()) {
        v = score(supp);
        sb.seen.emplace(supp, v);
      } else {
        v = it->second;
      }
      if (v < sb.best.value) {
        sb.best.value = v;
        sb.best.basis = c.basis;
        sb.best.support = std::move(supp);
        sb.best.origin = c.origin;
      }
    }
    sb.best.distinct_supports = static_cast<int>(sb.seen.size());
    return sb.best;
  };
  const std::vector<SearchResult> streams =
      parallel_map(static_cast<std::size_t>(cfg.restarts) + 1, cfg.jobs, run_stream);
  SearchResult best = streams[0];
  int cands = 0, distinct = 0;
  for (const SearchResult& r : streams) {
    cands += r.candidates;
    distinct += r.distinct_supports;
    if (r.value < best.value) best = r;
  }
  best.candidates = cands;
  best.distinct_supports = distinct;
  return best;
}

}  // namespace spectrumkit
