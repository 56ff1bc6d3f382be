#pragma once

// Small constructions shared by several test files. Built once per process.

#include <cmath>
#include <vector>

#include "spectral_forge/origin.hpp"
#include "spectral_forge/schedule.hpp"

namespace sf_test {

namespace sf = spectral_forge;

// lambda = 1 on the half-line, Neumann at 0, short offsets so it builds fast.
inline sf::PlanRequest halfline_request(int k_max = 3, double min_offset = 20.0) {
  sf::PlanRequest req;
  req.eigenvalues = {1.0};
  req.mode = sf::Mode::schrodinger_halfline;
  req.boundary_angles = {0.0};
  req.a = 4.0;
  req.k_max = k_max;
  req.overrides.min_offset = min_offset;
  return req;
}

inline const sf::Assembly& halfline_assembly() {
  static const sf::Assembly as = [] {
    return sf::construct(halfline_request(), [](const sf::ConstructionPlan& p) { return p.boundary_angles; });
  }();
  return as;
}

inline sf::PlanRequest two_energy_request() {
  sf::PlanRequest req;
  req.eigenvalues = {1.0, 2.0};
  req.mode = sf::Mode::schrodinger_halfline;
  req.boundary_angles = {0.0, 0.0};
  req.a = 4.0;
  req.k_max = 3;
  req.overrides.min_offset = 60.0;
  return req;
}

inline const sf::Assembly& two_energy_assembly() {
  static const sf::Assembly as = [] {
    return sf::construct(two_energy_request(), [](const sf::ConstructionPlan& p) { return p.boundary_angles; });
  }();
  return as;
}

// Hyperbolic background, one eigenvalue, metric map.
inline sf::PlanRequest manifold_request(double K0 = 1.0) {
  sf::PlanRequest req;
  req.eigenvalues = {1.0};
  req.mode = sf::Mode::manifold_finite;
  req.K0 = K0;
  req.n = 3;
  req.a = 4.0;
  req.k_max = 3;
  req.overrides.min_offset = 30.0;
  return req;
}

inline std::vector<double> manifold_targets(const sf::ConstructionPlan& p) {
  std::vector<double> out;
  for (double l : p.eigenvalues) out.push_back(sf::boundary_target(l, p.K0, p.n));
  return out;
}

inline const sf::Assembly& manifold_assembly() {
  static const sf::Assembly as = sf::construct(manifold_request(), manifold_targets);
  return as;
}

}  // namespace sf_test
