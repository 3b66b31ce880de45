#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "linalg.hpp"

namespace spectrumkit {

struct NelderMeadOptions {
  double initial_step = 1.0 / 64;
  double ftol = 1e-10;
  double xtol = 1e-7;
  int max_evals = 2000;
};

struct NelderMeadResult {
  RealVector x;
  double value = 0.0;
  int evaluations = 0;
};

/// Derivative-free local minimization; f may return +inf to reject a point.
inline NelderMeadResult nelder_mead(const std::function<double(const RealVector&)>& f, const RealVector& x0,
                                    const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  std::vector<RealVector> pts{x0};
  for (Eigen::Index k = 0; k < n; ++k) {
    RealVector p = x0;
    p[k] += opt.initial_step;
    pts.push_back(p);
  }
  std::vector<double> vals;
  int evals = 0;
  auto eval = [&](const RealVector& x) {
    ++evals;
    return f(x);
  };
  for (const RealVector& p : pts) vals.push_back(eval(p));
  // Points stepping off the domain: try the opposite direction.
  for (Eigen::Index k = 0; k < n; ++k)
    if (!std::isfinite(vals[static_cast<std::size_t>(k + 1)])) {
      RealVector p = x0;
      p[k] -= opt.initial_step;
      pts[static_cast<std::size_t>(k + 1)] = p;
      vals[static_cast<std::size_t>(k + 1)] = eval(p);
    }

  std::vector<std::size_t> order(pts.size());
  while (evals < opt.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    double size = 0.0;
    for (const RealVector& p : pts) size = std::max(size, (p - pts[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= opt.ftol && size <= opt.xtol) break;
    if (size <= 1e-14) break;

    RealVector centroid = RealVector::Zero(n);
    for (std::size_t k : order)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(n);
    const RealVector xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const RealVector xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const RealVector xc = outside ? RealVector(centroid + 0.5 * (xr - centroid))
                                  : RealVector(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      vals[k] = eval(pts[k]);
    }
  }
  const std::size_t b = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return NelderMeadResult{pts[b], vals[b], evals};
}

}  // namespace spectrumkit
