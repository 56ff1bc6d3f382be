#pragma once

// Finite-difference probe: eigenpairs of -D^2 + V on [x_left, X] with a Robin
// (log-derivative angle) condition at x_left and Dirichlet at X, restricted
// to an energy window. Heuristic evidence only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <lapacke.h>

#include "spectral_forge/error.hpp"

namespace spectral_forge {

struct ProbeEigen {
  double energy = 0.0;
  double mass = 0.0;  // fraction of the squared norm on [x_left, x_left + 0.7 (X - x_left)]
};

struct ProbeSpectrum {
  double X = 0.0;
  double h_grid = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::vector<ProbeEigen> eigen;

  /// Most localized eigenpair in the window; energy NaN when the window is empty.
  [[nodiscard]] ProbeEigen best() const {
    ProbeEigen b{std::nan(""), 0.0};
    for (const auto& e : eigen) {
      if (e.mass > b.mass) b = e;
    }
    return b;
  }
};

struct ProbeOptions {
  double x_left = 1.0;
  double angle = 0.0;  // log-derivative angle at x_left; pi/2 means Dirichlet
  double mass_fraction = 0.7;
  double max_k_h = 0.25;  // GridTooCoarse when sqrt(window_hi) * h exceeds this
};

/// V is sampled at the interior grid points x_left + i h.
template <class Potential>
ProbeSpectrum discrete_spectrum_probe(Potential&& V, double X, double h_grid, double window_lo, double window_hi,
                                      const ProbeOptions& opt = {}) {
  if (!(X > opt.x_left) || !(h_grid > 0.0)) throw Error(Errc::InvalidArgument, "probe needs X > x_left, h > 0");
  if (!(window_hi > window_lo)) throw Error(Errc::InvalidArgument, "empty probe window");
  if (std::sqrt(std::max(window_hi, 0.0)) * h_grid > opt.max_k_h) {
    throw Error(Errc::GridTooCoarse, "h_grid does not resolve the window energies");
  }
  const auto M = static_cast<std::size_t>(std::llround((X - opt.x_left) / h_grid));
  if (M < 3) throw Error(Errc::GridTooCoarse, "fewer than three grid points");
  const double h = (X - opt.x_left) / static_cast<double>(M);
  const double inv_h2 = 1.0 / (h * h);
  const bool dirichlet = std::abs(std::cos(opt.angle)) < 1e-12;

  // unknowns at x_left + i h, i = (dirichlet ? 1 : 0) .. M - 1
  const std::size_t first = dirichlet ? 1 : 0;
  const std::size_t n = M - first;
  std::vector<double> d(n), e(n > 0 ? n - 1 : 0, -inv_h2);
  for (std::size_t i = 0; i < n; ++i) d[i] = 2.0 * inv_h2 + V(opt.x_left + static_cast<double>(i + first) * h);
  if (!dirichlet) {
    // ghost point u_{-1} = u_1 - 2 h beta u_0, symmetrized with weight 1/2 at the boundary
    const double beta = std::tan(opt.angle);
    d[0] += 2.0 * beta * inv_h2 * h;
    e[0] = -std::sqrt(2.0) * inv_h2;
  }

  ProbeSpectrum out;
  out.X = X;
  out.h_grid = h;
  out.window_lo = window_lo;
  out.window_hi = window_hi;
  const auto ln = static_cast<lapack_int>(n);
  lapack_int found = 0;
  std::vector<lapack_int> ifail(n);
  {
    std::vector<double> dd = d, ee = e, w(n);
    double dummy = 0.0;
    const lapack_int info = LAPACKE_dstevx(LAPACK_COL_MAJOR, 'N', 'V', ln, dd.data(), ee.data(), window_lo, window_hi,
                                           0, 0, 0.0, &found, w.data(), &dummy, 1, ifail.data());
    if (info != 0) throw Error(Errc::InvalidArgument, "dstevx (count) failed: info " + std::to_string(info));
  }
  if (found == 0) return out;
  std::vector<double> w(n), z(n * static_cast<std::size_t>(found));
  lapack_int got = 0;
  const lapack_int info = LAPACKE_dstevx(LAPACK_COL_MAJOR, 'V', 'V', ln, d.data(), e.data(), window_lo, window_hi, 0,
                                         0, 0.0, &got, w.data(), z.data(), ln, ifail.data());
  if (info != 0) throw Error(Errc::InvalidArgument, "dstevx failed: info " + std::to_string(info));
  const double cut = opt.x_left + opt.mass_fraction * (X - opt.x_left);
  for (lapack_int k = 0; k < got; ++k) {
    const double* v = z.data() + static_cast<std::size_t>(k) * n;
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sq = v[i] * v[i];
      total += sq;
      if (opt.x_left + static_cast<double>(i + first) * h <= cut) inside += sq;
    }
    out.eigen.push_back({w[static_cast<std::size_t>(k)], total > 0.0 ? inside / total : 0.0});
  }
  return out;
}

}  // namespace spectral_forge
