#pragma once

// Embedded adaptive Dormand-Prince propagation used to cross-check the
// fixed-step RK4 engine. Independent code path: boost::numeric::odeint.

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "spectral_forge/ode_engine.hpp"

namespace spectral_forge {

template <class Potential>
StateVec propagate_adaptive(Potential&& q, const EnergyShift& shift, double x_from, double x_to, StateVec s0,
                            double abs_tol = 1e-13, double rel_tol = 1e-13) {
  namespace odeint = boost::numeric::odeint;
  if (x_from == x_to) throw Error(Errc::EmptyInterval, "x_from == x_to");
  using State = std::array<double, 2>;
  const double e = shift.e_eff();
  auto system = [&q, e](const State& u, State& du, double x) {
    du[0] = u[1];
    du[1] = (q(x) - e) * u[0];
  };
  State u{s0.y, s0.yp};
  const double dx0 = (x_to > x_from ? 1.0 : -1.0) * 1e-3;
  auto stepper = odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, system, u, x_from, x_to, dx0);
  if (!std::isfinite(u[0]) || !std::isfinite(u[1])) throw Error(Errc::NonFiniteState, "adaptive propagation");
  return {u[0], u[1]};
}

}  // namespace spectral_forge
