#pragma once

// Regular radial eigenfunction near the origin: even Frobenius series on
// (0, 1/2], the glued warping function f1 on [1/2, 1], and the boundary angle
// handed to the outer construction at r = 1.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "spectral_forge/error.hpp"
#include "spectral_forge/ode_engine.hpp"
#include "spectral_forge/wvn_block.hpp"

namespace spectral_forge {

struct FrobeniusSeries {
  std::vector<double> coeffs;  // c_0 .. c_J
  double E_eff = 0.0;
  int n = 3;
  double radius_of_validity = 0.5;

  /// (h, h') at r by Horner in r^2.
  [[nodiscard]] StateVec eval(double r) const {
    double h = 0.0, hp = 0.0;
    const double r2 = r * r;
    for (std::size_t j = coeffs.size(); j-- > 0;) {
      if (j % 2 != 0) continue;
      h = h * r2 + coeffs[j];
    }
    for (std::size_t j = coeffs.size(); j-- > 2;) {
      if (j % 2 != 0) continue;
      hp = hp * r2 + static_cast<double>(j) * coeffs[j];
    }
    return {h, hp * r};
  }
};

inline double effective_energy(double lambda, double K0, int n) { return 0.25 * K0 * (n - 1) * (n - 1) + lambda; }

/// c_0 = 1, c_1 = 0, c_{j+2} = -E c_j / ((j + 2)(j + n)) for j = 0 .. J-2.
inline std::vector<double> frobenius_coeffs(double E_eff, int n, int J) {
  if (n < 2) throw Error(Errc::BadDimension, "dimension n must be at least 2");
  if (J < 2 || J % 2 != 0) throw Error(Errc::InvalidArgument, "J must be even and at least 2");
  std::vector<double> c(static_cast<std::size_t>(J) + 1, 0.0);
  c[0] = 1.0;
  for (int j = 0; j + 2 <= J; j += 2) {
    c[static_cast<std::size_t>(j) + 2] = -E_eff * c[static_cast<std::size_t>(j)] / ((j + 2.0) * (j + n));
  }
  const double tail = std::abs(c.back()) * std::pow(0.5, J);
  if (!(tail < 1e-14)) throw Error(Errc::TailNotConverged, "series tail " + std::to_string(tail) + " at r = 1/2");
  return c;
}

/// Truncation chosen adaptively: the first even J with |c_J| (1/2)^J < 1e-16.
inline FrobeniusSeries frobenius_series(double E_eff, int n) {
  if (n < 2) throw Error(Errc::BadDimension, "dimension n must be at least 2");
  FrobeniusSeries s;
  s.E_eff = E_eff;
  s.n = n;
  s.coeffs = {1.0, 0.0};
  double c = 1.0;
  for (int j = 0; j < 2000; j += 2) {
    c = -E_eff * c / ((j + 2.0) * (j + n));
    s.coeffs.push_back(c);
    s.coeffs.push_back(0.0);
    if (std::abs(c) * std::pow(0.5, j + 2) < 1e-16) {
      s.coeffs.pop_back();
      return s;
    }
  }
  throw Error(Errc::TailNotConverged, "Frobenius series did not converge at r = 1/2");
}

/// Series value and derivative of the regular solution on (0, 1/2].
inline StateVec h1_eval(double lambda, double K0, int n, double r) {
  if (!(r > 0.0 && r <= 0.5)) throw Error(Errc::OutOfDomain, "h1_eval needs r in (0, 1/2]");
  return frobenius_series(effective_energy(lambda, K0, n), n).eval(r);
}

struct GlueValue {
  double f1 = 0.0;
  double f1p = 0.0;
  double f1pp = 0.0;
};

/// (1 - s(2r - 1)) r + s(2r - 1) exp(sqrt(K0) (r - 1)) with s the flat ramp.
inline GlueValue glue_f1(double r, double K0) {
  if (!(r >= 0.5 && r <= 1.0)) throw Error(Errc::OutOfDomain, "glue_f1 needs r in [1/2, 1]");
  const RampValue s = smooth_ramp_derivs(2.0 * r - 1.0);
  const double sig = s.v, sp = 2.0 * s.d1, spp = 4.0 * s.d2;
  const double k = std::sqrt(K0);
  const double g = std::exp(k * (r - 1.0));
  return {(1.0 - sig) * r + sig * g,
          (1.0 - sig) - sp * r + sp * g + sig * k * g,
          -spp * r - 2.0 * sp + spp * g + 2.0 * sp * k * g + sig * K0 * g};
}

/// Log-derivative S = f1'/f1 of the warping function for r in (0, 1], with
/// the closed forms at both ends.
inline double inner_S(double r, double K0) {
  if (r <= 0.5) return 1.0 / r;
  const GlueValue g = glue_f1(r, K0);
  return g.f1p / g.f1;
}

/// RK4 for h'' + (n - 1) S(r) h' + E h = 0 from r_from to r_to.
template <class SFn>
StateVec propagate_radial(double E_eff, int n, SFn&& S, double r_from, double r_to, StateVec s0,
                          double max_step = 1e-3) {
  const std::size_t steps = step_count(r_to - r_from, max_step, 1);
  auto coeffs = [&](double r) { return std::array<double, 4>{0.0, 1.0, -E_eff, -(n - 1) * S(r)}; };
  return rk4_linear(coeffs, r_from, r_to, s0, steps, [](double, StateVec) {});
}

/// (h1(1), h1'(1)): the series data at r = 1/2 carried through the glue.
inline StateVec extend_h1_to_one(double lambda, double K0, int n, double max_step = 1e-3) {
  const double E = effective_energy(lambda, K0, n);
  const StateVec half = frobenius_series(E, n).eval(0.5);
  return propagate_radial(E, n, [K0](double r) { return inner_S(r, K0); }, 0.5, 1.0, half, max_step);
}

/// Sampled h1 on (0, 1]: series up to 1/2, RK4 beyond (grid of the given step).
struct RadialSamples {
  std::vector<double> r;
  std::vector<StateVec> h;
};

inline RadialSamples h1_samples(double lambda, double K0, int n, double dr = 1e-3) {
  const double E = effective_energy(lambda, K0, n);
  const FrobeniusSeries series = frobenius_series(E, n);
  RadialSamples out;
  const auto inner = static_cast<std::size_t>(std::llround(0.5 / dr));
  for (std::size_t i = 1; i <= inner; ++i) {
    const double r = 0.5 * static_cast<double>(i) / static_cast<double>(inner);
    out.r.push_back(r);
    out.h.push_back(series.eval(r));
  }
  const std::size_t steps = step_count(0.5, dr, 1);
  auto coeffs = [&](double r) { return std::array<double, 4>{0.0, 1.0, -E, -(n - 1) * inner_S(r, K0)}; };
  rk4_linear(coeffs, 0.5, 1.0, series.eval(0.5), steps, [&](double r, StateVec s) {
    if (r == 0.5) return;
    out.r.push_back(r);
    out.h.push_back(s);
  });
  return out;
}

/// Log-derivative angle (tan = w'/w) with w'/w = h1'/h1 + (n - 1) sqrt(K0) / 2 at r = 1.
inline double boundary_target_from(StateVec h1_at_one, double K0, int n) {
  const double c = 0.5 * (n - 1) * std::sqrt(K0);
  return log_derivative_angle({h1_at_one.y, h1_at_one.yp + c * h1_at_one.y});
}

inline double boundary_target(double lambda, double K0, int n) {
  return boundary_target_from(extend_h1_to_one(lambda, K0, n), K0, n);
}

}  // namespace spectral_forge
