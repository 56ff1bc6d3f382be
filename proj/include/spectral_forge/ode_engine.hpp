#pragma once

// Fixed-step propagation of -y'' + q(x) y = E_eff y and the solution-size
// utilities (weighted norm, Pruefer angle, Wronskian) shared by every module.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "spectral_forge/error.hpp"

namespace spectral_forge {

struct StateVec {
  double y = 0.0;
  double yp = 0.0;
};

/// E_eff = E0 + lambda, with E0 the threshold (n-1)^2 K0 / 4.
struct EnergyShift {
  double E0 = 0.0;
  double lambda = 1.0;

  [[nodiscard]] double e_eff() const noexcept { return E0 + lambda; }
};

inline EnergyShift make_shift(double E0, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "lambda must be positive");
  if (!(E0 >= 0.0)) throw Error(Errc::InvalidArgument, "threshold E0 must be non-negative");
  return {E0, lambda};
}

/// sqrt(y^2 + yp^2 / lambda)
inline double weighted_norm(StateVec s, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "weighted_norm needs lambda > 0");
  return std::hypot(s.y, s.yp / std::sqrt(lambda));
}

/// Projective angle in [0, pi) with tan(theta) = yp / (sqrt(lambda) y).
inline double prufer_angle(StateVec s, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "prufer_angle needs lambda > 0");
  if (s.y == 0.0 && s.yp == 0.0) throw Error(Errc::ZeroState, "prufer_angle of the zero state");
  double theta = std::atan2(s.yp / std::sqrt(lambda), s.y);
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  return theta;
}

/// Unit weighted-norm state with the given Pruefer angle.
inline StateVec state_from_prufer(double theta, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "state_from_prufer needs lambda > 0");
  return {std::cos(theta), std::sqrt(lambda) * std::sin(theta)};
}

/// Angle in [0, pi) of the log-derivative: tan(theta) = yp / y.
inline double log_derivative_angle(StateVec s) {
  if (s.y == 0.0 && s.yp == 0.0) throw Error(Errc::ZeroState, "log_derivative_angle of the zero state");
  double theta = std::atan2(s.yp, s.y);
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  return theta;
}

/// State (cos theta, sin theta), i.e. yp / y = tan(theta).
inline StateVec state_from_log_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline double wronskian(StateVec a, StateVec b) noexcept { return a.y * b.yp - b.y * a.yp; }

/// Difference of two projective angles, reduced to [-pi/2, pi/2).
inline double wrap_angle_diff(double d) noexcept {
  constexpr double pi = std::numbers::pi;
  d = std::fmod(d + 0.5 * pi, pi);
  if (d < 0.0) d += pi;
  return d - 0.5 * pi;
}

struct StepPolicy {
  double samples_per_period = 64.0;
  double max_step = 0.01;
  std::size_t min_steps = 1;
};

/// h = (2 pi / sqrt(max(E_eff, 4 lambda))) / samples_per_period, capped at max_step.
inline double default_step(const EnergyShift& shift, const StepPolicy& policy) {
  const double fastest = std::sqrt(std::max(shift.e_eff(), 4.0 * shift.lambda));
  const double h = 2.0 * std::numbers::pi / fastest / policy.samples_per_period;
  return std::min(h, policy.max_step);
}

/// Number of equal steps used to cross an interval; shared by every caller so
/// that repeated propagations of the same interval reproduce bit-for-bit.
inline std::size_t step_count(double length, double h, std::size_t min_steps) {
  const double n = std::ceil(std::abs(length) / h - 1e-9);
  return std::max<std::size_t>(min_steps, static_cast<std::size_t>(std::max(1.0, n)));
}

// Classical RK4 for the linear system u' = A(x) u, with A(x) = coeffs(x) given
// row-major as {a11, a12, a21, a22}. The observer sees every grid point.
template <class Coeffs, class Observer>
StateVec rk4_linear(Coeffs&& coeffs, double x_from, double x_to, StateVec s0, std::size_t steps,
                    Observer&& observe) {
  if (x_from == x_to) throw Error(Errc::EmptyInterval, "x_from == x_to");
  const double h = (x_to - x_from) / static_cast<double>(steps);
  auto rhs = [](const std::array<double, 4>& a, double y, double yp) {
    return std::array<double, 2>{a[0] * y + a[1] * yp, a[2] * y + a[3] * yp};
  };
  double y = s0.y;
  double yp = s0.yp;
  observe(x_from, StateVec{y, yp});
  std::array<double, 4> a_left = coeffs(x_from);
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = x_from + static_cast<double>(i) * h;
    const double x_next = (i + 1 == steps) ? x_to : x_from + static_cast<double>(i + 1) * h;
    const auto a_mid = coeffs(x + 0.5 * h);
    const auto a_right = coeffs(x_next);
    const auto k1 = rhs(a_left, y, yp);
    const auto k2 = rhs(a_mid, y + 0.5 * h * k1[0], yp + 0.5 * h * k1[1]);
    const auto k3 = rhs(a_mid, y + 0.5 * h * k2[0], yp + 0.5 * h * k2[1]);
    const auto k4 = rhs(a_right, y + h * k3[0], yp + h * k3[1]);
    y += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    yp += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    if (!std::isfinite(y) || !std::isfinite(yp)) {
      throw Error(Errc::NonFiniteState, "state overflowed near x = " + std::to_string(x_next));
    }
    a_left = a_right;
    observe(x_next, StateVec{y, yp});
  }
  return {y, yp};
}

/// Schroedinger form: y' = yp, yp' = (q(x) - E_eff) y.
template <class Potential, class Observer>
StateVec integrate(Potential&& q, const EnergyShift& shift, double x_from, double x_to, StateVec s0,
                   const StepPolicy& policy, Observer&& observe) {
  if (x_from == x_to) throw Error(Errc::EmptyInterval, "x_from == x_to");
  const double e = shift.e_eff();
  const std::size_t steps = step_count(x_to - x_from, default_step(shift, policy), policy.min_steps);
  auto coeffs = [&q, e](double x) { return std::array<double, 4>{0.0, 1.0, q(x) - e, 0.0}; };
  return rk4_linear(coeffs, x_from, x_to, s0, steps, observe);
}

template <class Potential>
StateVec propagate_final(Potential&& q, const EnergyShift& shift, double x_from, double x_to, StateVec s0,
                         const StepPolicy& policy = {}) {
  return integrate(q, shift, x_from, x_to, s0, policy, [](double, StateVec) {});
}

struct Trajectory {
  std::vector<double> grid;
  std::vector<StateVec> states;
  std::vector<double> norms;  // weighted_norm(states[i], lambda)
  double lambda = 1.0;

  [[nodiscard]] StateVec final_state() const { return states.back(); }
};

/// Full trajectory of the solution with initial state s0 at x_from. Backward
/// integration (x_to < x_from) stores the grid in increasing order.
template <class Potential>
Trajectory propagate(Potential&& q, const EnergyShift& shift, double x_from, double x_to, StateVec s0,
                     const StepPolicy& policy = {}) {
  Trajectory traj;
  traj.lambda = shift.lambda;
  const double sqrt_lambda = std::sqrt(shift.lambda);
  integrate(q, shift, x_from, x_to, s0, policy, [&](double x, StateVec s) {
    traj.grid.push_back(x);
    traj.states.push_back(s);
    traj.norms.push_back(std::hypot(s.y, s.yp / sqrt_lambda));
  });
  if (x_to < x_from) {
    std::reverse(traj.grid.begin(), traj.grid.end());
    std::reverse(traj.states.begin(), traj.states.end());
    std::reverse(traj.norms.begin(), traj.norms.end());
  }
  return traj;
}

/// Solutions from the weighted-orthonormal basis (1, 0) and (0, sqrt(lambda)),
/// written in weighted coordinates (y, yp / sqrt(lambda)).
struct TransferMatrix {
  double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;

  /// Largest singular value: the worst-case weighted-norm growth over all
  /// initial conditions.
  [[nodiscard]] double operator_norm() const {
    // (|rotation part| + |reflection part|) / 2; no cancellation near rotations
    return 0.5 * (std::hypot(m11 + m22, m21 - m12) + std::hypot(m11 - m22, m12 + m21));
  }

  [[nodiscard]] StateVec apply(StateVec s, double lambda) const {
    const double r = std::sqrt(lambda);
    const double u = s.y;
    const double v = s.yp / r;
    return {m11 * u + m12 * v, r * (m21 * u + m22 * v)};
  }
};

/// Propagates both basis solutions in lockstep; observer gets (x, TransferMatrix).
template <class Potential, class Observer>
TransferMatrix integrate_transfer(Potential&& q, const EnergyShift& shift, double x_from, double x_to,
                                  const StepPolicy& policy, Observer&& observe) {
  if (x_from == x_to) throw Error(Errc::EmptyInterval, "x_from == x_to");
  const double e = shift.e_eff();
  const double r = std::sqrt(shift.lambda);
  const std::size_t steps = step_count(x_to - x_from, default_step(shift, policy), policy.min_steps);
  const double h = (x_to - x_from) / static_cast<double>(steps);
  // columns: (y1, yp1), (y2, yp2)
  std::array<double, 4> u{1.0, 0.0, 0.0, r};
  auto to_matrix = [r](const std::array<double, 4>& v) {
    return TransferMatrix{v[0], v[2], v[1] / r, v[3] / r};
  };
  observe(x_from, to_matrix(u));
  double g_left = q(x_from) - e;
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = x_from + static_cast<double>(i) * h;
    const double x_next = (i + 1 == steps) ? x_to : x_from + static_cast<double>(i + 1) * h;
    const double g_mid = q(x + 0.5 * h) - e;
    const double g_right = q(x_next) - e;
    for (int c = 0; c < 2; ++c) {
      double& y = u[2 * c];
      double& yp = u[2 * c + 1];
      const double k1y = yp, k1p = g_left * y;
      const double k2y = yp + 0.5 * h * k1p, k2p = g_mid * (y + 0.5 * h * k1y);
      const double k3y = yp + 0.5 * h * k2p, k3p = g_mid * (y + 0.5 * h * k2y);
      const double k4y = yp + h * k3p, k4p = g_right * (y + h * k3y);
      y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      yp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    if (!std::isfinite(u[0] + u[1] + u[2] + u[3])) {
      throw Error(Errc::NonFiniteState, "transfer matrix overflowed near x = " + std::to_string(x_next));
    }
    g_left = g_right;
    observe(x_next, to_matrix(u));
  }
  return to_matrix(u);
}

}  // namespace spectral_forge
