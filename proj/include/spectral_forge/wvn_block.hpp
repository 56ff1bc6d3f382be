#pragma once

// Smooth, compactly supported Wigner-von Neumann segments and the block
// builder: pick the phase so that the resonant solution with a prescribed
// angle at the block start decays across the block, then certify the decay,
// in-block and off-resonance contracts numerically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spectral_forge/error.hpp"
#include "spectral_forge/ode_engine.hpp"
#include "spectral_forge/parallel.hpp"

namespace spectral_forge {

enum class MapMode { metric, direct };

inline std::string to_string(MapMode m) { return m == MapMode::metric ? "metric" : "direct"; }

inline MapMode map_mode_from_string(const std::string& s) {
  if (s == "metric") return MapMode::metric;
  if (s == "direct") return MapMode::direct;
  throw Error(Errc::InvalidArgument, "unknown map_mode '" + s + "'");
}

/// A perturbation value f together with its derivative.
struct FieldValue {
  double f = 0.0;
  double fp = 0.0;
};

/// How a perturbation f enters the Schroedinger potential. In metric mode f is
/// the warping perturbation S - sqrt(K0) and
///   q - E0 = (n-1)^2/4 (2 sqrt(K0) f + f^2) + (n-1)/2 f';
/// in direct mode q - E0 = f.
struct PotentialMap {
  MapMode mode = MapMode::direct;
  double K0 = 0.0;
  int n = 2;

  [[nodiscard]] double E0() const noexcept {
    return mode == MapMode::metric ? 0.25 * (n - 1) * (n - 1) * K0 : 0.0;
  }

  [[nodiscard]] double shifted(FieldValue v) const noexcept {
    if (mode == MapMode::direct) return v.f;
    const double m = n - 1;
    return 0.25 * m * m * (2.0 * std::sqrt(K0) * v.f + v.f * v.f) + 0.5 * m * v.fp;
  }
};

struct WvnSegment {
  double x0 = 0.0;
  double x1 = 0.0;
  double b = 0.0;
  double lambda = 1.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double decay_exp = 4.0;
  double ramp_width = 1.0;
  MapMode map_mode = MapMode::direct;

  [[nodiscard]] double kappa() const { return std::sqrt(lambda); }
};

struct RampValue {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Flat-ended smooth step 1 / (1 + exp(1/t - 1/(1-t))) with its first two
/// derivatives; clamps to 0 / 1 outside (0, 1). ramp(t) + ramp(1 - t) = 1.
inline RampValue smooth_ramp_derivs(double t) noexcept {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double s = 1.0 - t;
  const double u = 1.0 / t - 1.0 / s;
  const double e = std::exp(-std::abs(u));
  const double v = u > 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
  const double vv = e / ((1.0 + e) * (1.0 + e));  // v (1 - v)
  const double w = 1.0 / (t * t) + 1.0 / (s * s);
  const double wp = -2.0 / (t * t * t) + 2.0 / (s * s * s);
  const double d1 = vv * w;
  const double d2 = d1 * (1.0 - 2.0 * v) * w + vv * wp;
  return {v, d1, d2};
}

inline double smooth_ramp(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::OutOfRange, "smooth_ramp expects t in [0, 1]");
  return smooth_ramp_derivs(t).v;
}

/// sup |ramp'| over [0, 1], attained at t = 1/2.
inline constexpr double kRampSlopeMax = 2.0;

/// amplitude * sin(2 kappa (x - b) + phase) / (x - b)
inline double raw_wvn(double x, const WvnSegment& seg) {
  if (!(x > seg.b)) throw Error(Errc::XAtOrBelowShift, "raw_wvn needs x > b");
  const double s = x - seg.b;
  return seg.amplitude * std::sin(2.0 * seg.kappa() * s + seg.phase) / s;
}

/// Smoothed segment value and derivative; identically zero outside (x0, x1).
inline FieldValue segment_field(const WvnSegment& seg, double x) noexcept {
  if (!(x > seg.x0 && x < seg.x1) || seg.amplitude == 0.0) return {};
  const double s = x - seg.b;
  const double two_kappa = 2.0 * std::sqrt(seg.lambda);
  const double arg = two_kappa * s + seg.phase;
  const double sn = std::sin(arg);
  const double cs = std::cos(arg);
  const double raw = seg.amplitude * sn / s;
  const double raw_p = seg.amplitude * (two_kappa * cs / s - sn / (s * s));
  const double w = seg.ramp_width;
  const double t1 = (x - seg.x0) / w;
  const double t2 = (seg.x1 - x) / w;
  if (t1 >= 1.0 && t2 >= 1.0) return {raw, raw_p};
  const RampValue r1 = smooth_ramp_derivs(t1);
  const RampValue r2 = smooth_ramp_derivs(t2);
  const double window = r1.v * r2.v;
  const double window_p = (r1.d1 * r2.v - r1.v * r2.d1) / w;
  return {raw * window, raw_p * window + raw * window_p};
}

/// Pointwise envelopes |f| <= f_max and |f'| <= fp_max valid for every phase.
inline FieldValue segment_envelope(const WvnSegment& seg, double x) noexcept {
  if (!(x > seg.x0 && x < seg.x1) || seg.amplitude == 0.0) return {};
  const double s = x - seg.b;
  const double w = seg.ramp_width;
  const RampValue r1 = smooth_ramp_derivs((x - seg.x0) / w);
  const RampValue r2 = smooth_ramp_derivs((seg.x1 - x) / w);
  const double window = r1.v * r2.v;
  const double window_p = (r1.d1 * r2.v - r1.v * r2.d1) / w;
  const double a = seg.amplitude / s;
  return {a * window, a * std::hypot(window_p - window / s, 2.0 * seg.kappa() * window)};
}

/// Amplitude giving the resonant oscillatory part of q - E0 the strength
/// 4 a kappa at frequency 2 kappa, i.e. an x^{-a} decaying resonant solution.
inline double amplitude_for_decay(double a, double lambda, double K0, int n, MapMode mode) {
  if (n < 2) throw Error(Errc::BadDimension, "dimension n must be at least 2");
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "amplitude_for_decay needs lambda > 0");
  if (!(a >= 0.0)) throw Error(Errc::InvalidArgument, "decay exponent must be non-negative");
  const double kappa = std::sqrt(lambda);
  const double target = 4.0 * a * kappa;
  if (mode == MapMode::direct) return target;
  const double m = n - 1;
  const double sin_coeff = 0.5 * m * m * std::sqrt(K0);
  const double cos_coeff = m * kappa;
  return target / std::hypot(sin_coeff, cos_coeff);
}

/// Leading-order decaying resonant solution at x1:
/// s^{-a} (cos(kappa s + phase/2), -kappa sin(kappa s + phase/2)), s = x1 - b.
inline StateVec seed_decaying_solution(const WvnSegment& seg) {
  const double s = seg.x1 - seg.b;
  if (!(s > 0.0)) throw Error(Errc::BlockTooShort, "seed needs x1 > b");
  const double kappa = seg.kappa();
  const double env = std::pow(s, -seg.decay_exp);
  const double arg = kappa * s + 0.5 * seg.phase;
  return {env * std::cos(arg), -kappa * env * std::sin(arg)};
}

/// Shifted potential q - E0 of a single segment.
struct SegmentPotential {
  const WvnSegment* seg;
  PotentialMap map;

  double operator()(double x) const noexcept { return map.shifted(segment_field(*seg, x)); }
};

/// 50 periods of the slowest oscillation among the given energies.
inline double default_min_offset(std::span<const double> energies) {
  double slowest = energies.empty() ? 1.0 : *std::min_element(energies.begin(), energies.end());
  return 50.0 * 2.0 * std::numbers::pi / std::sqrt(slowest);
}

struct BlockParams {
  double min_offset = 0.0;        // 0: default_min_offset of all tracked energies
  double min_block_length = 0.0;  // 0: 2 * ramp_width + 1
  double slack = 0.05;
  double separation_min = 2.0 * std::numbers::pi;
  int phase_scan_points = 360;
  double ramp_width = 1.0;
  double angle_tol = 1e-12;
  StepPolicy fine{64.0, 0.01, 512};
  StepPolicy coarse{64.0, std::numeric_limits<double>::infinity(), 64};
};

struct BlockDiagnostics {
  double achieved_angle_error = 0.0;
  double decay_ratio = 1.0;
  double decay_bound = 2.0;
  double inblock_sup_factor = 1.0;
  std::map<double, double> offspectrum_factors;
  double threshold_used = 0.0;
  double factor_bound = 2.1;
  double c_ramp = 1.0;
  bool certified = false;

  [[nodiscard]] std::string summary() const {
    std::ostringstream os;
    os.precision(6);
    os << "decay_ratio=" << decay_ratio << " (bound " << decay_bound << "), inblock_sup=" << inblock_sup_factor
       << " (bound " << factor_bound << ")";
    for (const auto& [mu, f] : offspectrum_factors) os << ", off[" << mu << "]=" << f;
    os << ", offset=" << threshold_used;
    return os.str();
  }
};

struct BlockResult {
  WvnSegment segment;
  BlockDiagnostics diagnostics;
};

/// Constant with |f'| <= c_ramp * amplitude * (1 + 2 kappa) / (x - b) on the block.
inline double ramp_constant(const WvnSegment& seg) {
  return std::max(1.0, kRampSlopeMax / seg.ramp_width + 1.0 / (seg.x0 - seg.b));
}

/// Pruefer angle at x0 of the decaying seed propagated backward from x1.
inline double phase_angle_at_start(const WvnSegment& seg, const PotentialMap& map, const StepPolicy& policy) {
  const SegmentPotential q{&seg, map};
  const StateVec s = propagate_final(q, EnergyShift{0.0, seg.lambda}, seg.x1, seg.x0, seed_decaying_solution(seg),
                                     policy);
  return prufer_angle(s, seg.lambda);
}

/// The phase -> start-angle map sampled at the given phases.
inline std::vector<double> phase_angle_map(const WvnSegment& tmpl, const PotentialMap& map,
                                           std::span<const double> phases, const StepPolicy& policy) {
  std::vector<double> angles(phases.size());
  parallel_for(phases.size(), [&](std::size_t i) {
    WvnSegment seg = tmpl;
    seg.phase = phases[i];
    angles[i] = phase_angle_at_start(seg, map, policy);
  });
  return angles;
}

/// Numerically checks the three block contracts for a segment whose resonant
/// solution starts at x0 with Pruefer angle theta0.
inline BlockDiagnostics certify_block(const WvnSegment& seg, const PotentialMap& map, double theta0,
                                      std::span<const double> other_energies, const BlockParams& params) {
  BlockDiagnostics d;
  d.threshold_used = seg.x0 - seg.b;
  d.factor_bound = 2.0 * (1.0 + params.slack);
  d.decay_bound = 2.0 * std::pow((seg.x1 - seg.b) / (seg.x0 - seg.b), -seg.decay_exp);
  d.c_ramp = ramp_constant(seg);
  const SegmentPotential q{&seg, map};

  const StateVec start = state_from_prufer(theta0, seg.lambda);
  const double sqrt_lambda = std::sqrt(seg.lambda);
  double sup = 0.0;
  const StateVec end = integrate(q, EnergyShift{0.0, seg.lambda}, seg.x0, seg.x1, start, params.fine,
                                 [&](double, StateVec s) { sup = std::max(sup, std::hypot(s.y, s.yp / sqrt_lambda)); });
  d.decay_ratio = weighted_norm(end, seg.lambda);
  d.inblock_sup_factor = sup;

  for (double mu : other_energies) {
    double worst = 0.0;
    integrate_transfer(q, EnergyShift{0.0, mu}, seg.x0, seg.x1, params.fine,
                       [&](double, const TransferMatrix& m) { worst = std::max(worst, m.operator_norm()); });
    d.offspectrum_factors[mu] = worst;
  }

  d.certified = d.decay_ratio <= d.decay_bound && d.inblock_sup_factor <= d.factor_bound;
  for (const auto& [mu, f] : d.offspectrum_factors) d.certified = d.certified && f <= d.factor_bound;
  return d;
}

namespace detail {

// Illinois-modified regula falsi on a bracket [lo, hi] with g(lo) g(hi) <= 0.
template <class G>
double illinois_root(G&& g, double lo, double hi, double g_lo, double g_hi, double tol, int max_iter = 100) {
  int side = 0;
  double x = lo;
  for (int it = 0; it < max_iter; ++it) {
    x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
    if (!(x > std::min(lo, hi) && x < std::max(lo, hi))) x = 0.5 * (lo + hi);
    const double gx = g(x);
    if (std::abs(gx) <= tol || std::abs(hi - lo) < 1e-15) return x;
    if ((gx > 0.0) == (g_hi > 0.0)) {
      hi = x;
      g_hi = gx;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    } else {
      lo = x;
      g_lo = gx;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    }
  }
  return x;
}

}  // namespace detail

/// Builds one block on (x0, x1) for the resonant energy lambda; the other
/// energies must stay norm-bounded. Throws ContractViolated when the
/// certificates fail (the caller should move the block further out).
inline BlockResult build_block(double lambda, std::span<const double> other_energies, double x0, double x1,
                               double b, double theta0, double a, const PotentialMap& map,
                               const BlockParams& params = {}) {
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveLambda, "block energy must be positive");
  const double block_length = x1 - x0;
  const double min_length =
      params.min_block_length > 0.0 ? params.min_block_length : 2.0 * params.ramp_width + 1.0;
  if (!(x0 > b) || !(block_length >= min_length)) {
    throw Error(Errc::BlockTooShort, "block (" + std::to_string(x0) + ", " + std::to_string(x1) + ") too short");
  }
  std::vector<double> all(other_energies.begin(), other_energies.end());
  all.push_back(lambda);
  const double min_offset = params.min_offset > 0.0 ? params.min_offset : default_min_offset(all);
  if (x0 - b < min_offset * (1.0 - 1e-12)) {
    throw Error(Errc::ContractViolated,
                "offset x0 - b = " + std::to_string(x0 - b) + " below threshold " + std::to_string(min_offset));
  }
  for (double mu : other_energies) {
    if (std::abs(std::sqrt(lambda) - std::sqrt(mu)) * block_length < params.separation_min) {
      throw Error(Errc::DegenerateEnergies, "energy " + std::to_string(mu) + " too close to " + std::to_string(lambda));
    }
  }

  WvnSegment seg;
  seg.x0 = x0;
  seg.x1 = x1;
  seg.b = b;
  seg.lambda = lambda;
  seg.amplitude = amplitude_for_decay(a, lambda, map.K0, map.n, map.mode);
  seg.phase = 0.0;
  seg.decay_exp = a;
  seg.ramp_width = params.ramp_width;
  seg.map_mode = map.mode;

  BlockResult result;
  if (seg.amplitude == 0.0) {
    result.segment = seg;
    result.diagnostics = certify_block(seg, map, theta0, other_energies, params);
    if (!result.diagnostics.certified) throw Error(Errc::ContractViolated, result.diagnostics.summary());
    return result;
  }

  const int points = std::max(8, params.phase_scan_points);
  std::vector<double> phases(points);
  for (int i = 0; i < points; ++i) phases[i] = 2.0 * std::numbers::pi * i / points;
  const std::vector<double> angles = phase_angle_map(seg, map, phases, params.coarse);

  auto mismatch = [&](double phi, const StepPolicy& policy) {
    WvnSegment trial = seg;
    trial.phase = phi;
    return wrap_angle_diff(phase_angle_at_start(trial, map, policy) - theta0);
  };

  // First genuine sign change of the wrapped mismatch (smallest phase wins).
  double lo = 0.0, hi = 0.0, g_lo = 0.0, g_hi = 0.0;
  bool found = false;
  for (int i = 0; i < points && !found; ++i) {
    const double ga = wrap_angle_diff(angles[i] - theta0);
    const double gb = wrap_angle_diff(angles[(i + 1) % points] - theta0);
    if (ga == 0.0 || ((ga > 0.0) != (gb > 0.0) && std::abs(gb - ga) < 0.5 * std::numbers::pi)) {
      lo = phases[i];
      hi = (i + 1 < points) ? phases[i + 1] : 2.0 * std::numbers::pi;
      g_lo = ga;
      g_hi = gb;
      found = true;
    }
  }
  if (!found) throw Error(Errc::PhaseNotFound, "no phase reaches the target angle in the scan");

  const double phi_coarse = g_lo == 0.0 ? lo
                                        : detail::illinois_root([&](double p) { return mismatch(p, params.coarse); },
                                                                lo, hi, g_lo, g_hi, 1e-12);

  // Refine against the fine-step propagation, widening the bracket as needed.
  auto fine = [&](double p) { return mismatch(p, params.fine); };
  double phi = phi_coarse;
  double g0 = fine(phi);
  if (std::abs(g0) > params.angle_tol) {
    bool bracketed = false;
    for (double delta = 1e-4; delta < 1.0 && !bracketed; delta *= 4.0) {
      const double a_lo = phi_coarse - delta, a_hi = phi_coarse + delta;
      const double f_lo = fine(a_lo), f_hi = fine(a_hi);
      if ((f_lo > 0.0) != (f_hi > 0.0) && std::abs(f_hi - f_lo) < 0.5 * std::numbers::pi) {
        phi = detail::illinois_root(fine, a_lo, a_hi, f_lo, f_hi, params.angle_tol);
        bracketed = true;
      }
    }
    if (!bracketed) throw Error(Errc::PhaseNotFound, "fine-step refinement lost the phase bracket");
  }
  phi = std::fmod(phi, 2.0 * std::numbers::pi);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  seg.phase = phi;

  result.segment = seg;
  result.diagnostics = certify_block(seg, map, theta0, other_energies, params);
  result.diagnostics.achieved_angle_error = std::abs(fine(phi));
  if (!result.diagnostics.certified) throw Error(Errc::ContractViolated, result.diagnostics.summary());
  return result;
}

struct RepairedBlock {
  BlockResult block;
  int doublings = 0;
};

/// Sites a block at offset d = x0 - b with (x1 - b) / (x0 - b) = ratio and
/// doubles d on ContractViolated, at most max_doublings times.
inline RepairedBlock build_block_with_repair(double lambda, std::span<const double> other_energies, double offset,
                                             double ratio, double b, double theta0, double a,
                                             const PotentialMap& map, const BlockParams& params,
                                             int max_doublings = 3) {
  for (int k = 0;; ++k) {
    try {
      return {build_block(lambda, other_energies, b + offset, b + ratio * offset, b, theta0, a, map, params), k};
    } catch (const Error& e) {
      if (e.code() != Errc::ContractViolated || k >= max_doublings) throw;
      offset *= 2.0;
    }
  }
}

}  // namespace spectral_forge
