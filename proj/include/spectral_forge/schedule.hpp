#pragma once

// Construction schedule: the constants N(k), C_k, T_k, J_k, the tiling of
// [J_k, J_{k+1}] by N(k+1) blocks, and the per-eigenvalue junction ledger.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "spectral_forge/error.hpp"
#include "spectral_forge/ode_engine.hpp"
#include "spectral_forge/wvn_block.hpp"

namespace spectral_forge {

enum class Mode { manifold_finite, manifold_countable, schrodinger_halfline, schrodinger_wholeline };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::manifold_finite: return "manifold_finite";
    case Mode::manifold_countable: return "manifold_countable";
    case Mode::schrodinger_halfline: return "schrodinger_halfline";
    case Mode::schrodinger_wholeline: return "schrodinger_wholeline";
  }
  return "unknown";
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "manifold_finite") return Mode::manifold_finite;
  if (s == "manifold_countable") return Mode::manifold_countable;
  if (s == "schrodinger_halfline") return Mode::schrodinger_halfline;
  if (s == "schrodinger_wholeline") return Mode::schrodinger_wholeline;
  throw Error(Errc::InvalidArgument, "unknown mode '" + s + "'");
}

inline bool is_manifold(Mode m) { return m == Mode::manifold_finite || m == Mode::manifold_countable; }

/// Curvature budget C(x) from a declarative family.
struct Budget {
  enum class Family { constant, log, power };
  Family family = Family::log;
  double c = 1.0;
  double alpha = 0.5;

  [[nodiscard]] double operator()(double x) const {
    switch (family) {
      case Family::constant: return c;
      case Family::log: return c * std::log(std::numbers::e + x);
      case Family::power: return c * std::pow(x, alpha);
    }
    return c;
  }
};

inline std::string to_string(Budget::Family f) {
  switch (f) {
    case Budget::Family::constant: return "constant";
    case Budget::Family::log: return "log";
    case Budget::Family::power: return "power";
  }
  return "unknown";
}

inline Budget::Family budget_family_from_string(const std::string& s) {
  if (s == "constant") return Budget::Family::constant;
  if (s == "log") return Budget::Family::log;
  if (s == "power") return Budget::Family::power;
  throw Error(Errc::InvalidArgument, "unknown budget family '" + s + "'");
}

struct PlanOverrides {
  double C_min = 2.0;
  std::vector<double> forced_C;  // C_k = forced_C[k-1]; the last entry repeats
  double min_offset = 0.0;       // 0: default_min_offset(eigenvalues)
  std::vector<int> N;            // N(k) = N[k-1]; the last entry repeats
  double ramp_width = 1.0;       // only used by the countable gate envelope
};

struct PlanRequest {
  std::vector<double> eigenvalues;
  double K0 = 0.0;
  int n = 3;
  Mode mode = Mode::manifold_finite;
  double a = 4.0;
  int k_max = 3;
  std::optional<Budget> budget;
  std::vector<double> boundary_angles;  // pure-Schroedinger modes: log-derivative angle at x = 0
  PlanOverrides overrides;
};

struct ConstructionPlan {
  std::vector<double> eigenvalues;
  double K0 = 0.0;
  int n = 3;
  Mode mode = Mode::manifold_finite;
  double a = 4.0;
  int k_max = 3;
  std::optional<Budget> budget;
  std::vector<double> boundary_angles;
  // Index k = 0..k_max; N[0] = 0, C[0] = 1, T[0] = 1, J[0] = 0.
  std::vector<int> N;
  std::vector<double> C;
  std::vector<double> T;
  std::vector<double> J;
  std::vector<double> rho;  // rho[k]: predicted contraction of step k (k >= 2)
  double support_start = 3.0;
  double start_point = 1.0;
  double min_offset = 0.0;
  double ramp_width = 1.0;
  bool budget_too_tight = false;
  bool contraction_target_met = true;
  std::vector<std::string> warnings;

  [[nodiscard]] PotentialMap map() const {
    return {is_manifold(mode) ? MapMode::metric : MapMode::direct, is_manifold(mode) ? K0 : 0.0, n};
  }
  [[nodiscard]] double E0() const { return map().E0(); }
  [[nodiscard]] int admitted_count() const { return N.empty() ? 0 : N.back(); }
  /// First step k with N(k) >= j + 1 (j zero-based), or -1.
  [[nodiscard]] int admitted_at_step(std::size_t j) const {
    for (int k = 1; k <= k_max; ++k) {
      if (N[k] > static_cast<int>(j)) return k;
    }
    return -1;
  }
  [[nodiscard]] double R_max() const { return J.back(); }
};

/// Predicted net contraction of a step that places N blocks of length T after J.
inline double step_contraction(int N, double J_prev, double T, double a) {
  return std::pow(2.0, N) * 2.0 * std::pow((J_prev + T) / J_prev, -a);
}

namespace detail {

inline double pick(const std::vector<double>& v, int k) {
  return v[std::min<std::size_t>(static_cast<std::size_t>(k - 1), v.size() - 1)];
}

inline int pick(const std::vector<int>& v, int k) {
  return v[std::min<std::size_t>(static_cast<std::size_t>(k - 1), v.size() - 1)];
}

/// Phase-independent upper envelope of r |K + K0| over the blocks of one step.
inline double step_curvature_excess(const ConstructionPlan& p, int step, int blocks, const Budget& budget) {
  const double J_prev = p.J[step - 1];
  const double T = p.T[step];
  const double sqrtK0 = std::sqrt(p.K0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < blocks; ++t) {
    WvnSegment seg;
    seg.b = t * T;
    seg.x0 = J_prev + t * T;
    seg.x1 = seg.x0 + T;
    seg.lambda = p.eigenvalues[t];
    seg.amplitude = amplitude_for_decay(p.a, seg.lambda, p.K0, p.n, MapMode::metric);
    seg.decay_exp = p.a;
    seg.ramp_width = p.ramp_width;
    const double h = std::min(0.05, 0.25 * p.ramp_width);
    const auto steps = static_cast<std::size_t>(std::ceil(T / h));
    for (std::size_t i = 0; i <= steps; ++i) {
      const double r = seg.x0 + T * static_cast<double>(i) / static_cast<double>(steps);
      const FieldValue env = segment_envelope(seg, r);
      const double excess = r * (2.0 * sqrtK0 * env.f + env.f * env.f + env.fp) - budget(r);
      worst = std::max(worst, excess);
    }
  }
  return worst;
}

inline void fill_step(ConstructionPlan& p, int k, int N_k, const PlanOverrides& o) {
  p.N[k] = N_k;
  double C;
  if (!o.forced_C.empty()) {
    C = pick(o.forced_C, k);
  } else if (k == 1) {
    C = std::max(o.C_min, p.min_offset);
  } else {
    // smallest C >= C_min with rho_k <= 1/2
    const double ratio_needed = std::pow(2.0, (N_k + 2.0) / p.a) - 1.0;
    C = std::max(o.C_min, p.J[k - 1] * ratio_needed / p.T[k - 1]);
  }
  p.C[k] = C;
  p.T[k] = p.T[k - 1] * C;
  p.J[k] = p.J[k - 1] + N_k * p.T[k];
  p.rho[k] = k >= 2 ? step_contraction(N_k, p.J[k - 1], p.T[k], p.a) : 0.0;
}

}  // namespace detail

inline ConstructionPlan plan(const PlanRequest& req) {
  if (req.eigenvalues.empty()) throw Error(Errc::EmptySpectrum, "no eigenvalues requested");
  for (std::size_t i = 0; i < req.eigenvalues.size(); ++i) {
    if (!(req.eigenvalues[i] > 0.0)) throw Error(Errc::NonPositiveLambda, "eigenvalues must be positive");
    for (std::size_t j = 0; j < i; ++j) {
      if (req.eigenvalues[i] == req.eigenvalues[j]) throw Error(Errc::DegenerateEnergies, "eigenvalues must be distinct");
    }
  }
  if (req.n < 2) throw Error(Errc::BadDimension, "dimension n must be at least 2");
  if (req.k_max < 2) throw Error(Errc::InvalidArgument, "k_max must be at least 2");
  if (!(req.a >= 0.0)) throw Error(Errc::InvalidArgument, "decay exponent must be non-negative");
  if (!(req.K0 >= 0.0)) throw Error(Errc::InvalidArgument, "K0 must be non-negative");
  if (req.mode == Mode::manifold_countable && !req.budget) {
    throw Error(Errc::InvalidArgument, "countable mode needs a curvature budget");
  }
  const PlanOverrides& o = req.overrides;

  ConstructionPlan p;
  p.eigenvalues = req.eigenvalues;
  p.K0 = req.K0;
  p.n = req.n;
  p.mode = req.mode;
  p.a = req.a;
  p.k_max = req.k_max;
  p.budget = req.budget;
  p.boundary_angles = req.boundary_angles;
  p.support_start = is_manifold(req.mode) ? 3.0 : 1.0;
  p.start_point = is_manifold(req.mode) ? 1.0 : 0.0;
  p.min_offset = o.min_offset > 0.0 ? o.min_offset : default_min_offset(req.eigenvalues);
  p.ramp_width = o.ramp_width;
  const auto K = static_cast<std::size_t>(req.k_max) + 1;
  p.N.assign(K, 0);
  p.C.assign(K, 1.0);
  p.T.assign(K, 1.0);
  p.J.assign(K, 0.0);
  p.rho.assign(K, 0.0);

  const int total = static_cast<int>(req.eigenvalues.size());
  for (int k = 1; k <= req.k_max; ++k) {
    if (!o.N.empty()) {
      detail::fill_step(p, k, std::min(total, detail::pick(o.N, k)), o);
    } else if (k == 1) {
      detail::fill_step(p, k, 1, o);
    } else if (req.mode != Mode::manifold_countable) {
      detail::fill_step(p, k, std::min(k, total), o);
    } else {
      // admission gate: try one more eigenvalue, fall back to the current count
      const int current = p.N[k - 1];
      bool placed = false;
      if (current < total) {
        detail::fill_step(p, k, current + 1, o);
        placed = detail::step_curvature_excess(p, k, current + 1, *req.budget) <= 0.0;
      }
      if (!placed) {
        detail::fill_step(p, k, current, o);
        if (detail::step_curvature_excess(p, k, current, *req.budget) > 0.0) p.budget_too_tight = true;
      }
    }
  }
  if (p.N[1] != 1) throw Error(Errc::InconsistentPlan, "N(1) must be 1");
  for (int k = 2; k <= p.k_max; ++k) {
    if (p.N[k] < p.N[k - 1]) throw Error(Errc::InconsistentPlan, "N must be non-decreasing");
    if (p.rho[k] > 0.5 * (1.0 + 1e-12)) p.contraction_target_met = false;  // rho = 1/2 up to rounding
  }
  for (int k = 1; k <= p.k_max; ++k) {
    if (!(p.T[k] > p.T[k - 1]) || !(p.J[k] > p.J[k - 1])) {
      throw Error(Errc::InconsistentPlan, "T and J must be strictly increasing");
    }
  }
  if (!(p.J[1] > p.support_start)) throw Error(Errc::InconsistentPlan, "J_1 must exceed the support start");
  if (p.mode == Mode::manifold_countable && p.admitted_count() < std::min(2, total)) p.budget_too_tight = true;
  if (p.budget_too_tight) p.warnings.emplace_back("budget too tight: fewer eigenvalues admitted than requested");
  if (!p.contraction_target_met) p.warnings.emplace_back("predicted step contraction exceeds 1/2");
  return p;
}

/// The perturbation f: ordered, disjoint segments; zero elsewhere.
struct PiecewisePotential {
  std::vector<WvnSegment> segments;
  double support_start = 3.0;
  PotentialMap map;

  /// Index of the segment whose open support contains x, or -1.
  [[nodiscard]] long locate(double x) const {
    auto it = std::upper_bound(segments.begin(), segments.end(), x,
                               [](double v, const WvnSegment& s) { return v < s.x0; });
    if (it == segments.begin()) return -1;
    --it;
    return (x > it->x0 && x < it->x1) ? static_cast<long>(it - segments.begin()) : -1;
  }

  [[nodiscard]] FieldValue eval(double x) const {
    const long i = locate(x);
    return i < 0 ? FieldValue{} : segment_field(segments[static_cast<std::size_t>(i)], x);
  }

  /// q - E0 at x.
  [[nodiscard]] double shifted(double x) const { return map.shifted(eval(x)); }

  [[nodiscard]] double end() const { return segments.empty() ? support_start : segments.back().x1; }
};

inline constexpr StepPolicy kCanonicalPolicy{64.0, 0.01, 512};

/// Forward propagation of -w'' + (q - E0) w = lambda w through a piecewise
/// potential, restarting the fixed-step grid at every segment endpoint. All
/// stages use this path so trajectories agree bit-for-bit.
template <class Observer>
StateVec propagate_piecewise(const PiecewisePotential& pot, double lambda, double from, double to, StateVec s,
                             Observer&& observe, const StepPolicy& policy = kCanonicalPolicy) {
  if (!(to > from)) throw Error(Errc::EmptyInterval, "propagate_piecewise needs from < to");
  const EnergyShift shift{0.0, lambda};
  std::vector<double> cuts{from};
  for (const auto& seg : pot.segments) {
    for (double c : {seg.x0, seg.x1}) {
      if (c > from && c < to) cuts.push_back(c);
    }
  }
  cuts.push_back(to);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  bool first = true;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const long idx = pot.locate(0.5 * (lo + hi));
    auto obs = [&](double x, StateVec v) {
      if (!first && x == lo) return;
      first = false;
      observe(x, v);
    };
    if (idx >= 0) {
      const SegmentPotential q{&pot.segments[static_cast<std::size_t>(idx)], pot.map};
      s = integrate(q, shift, lo, hi, s, policy, obs);
    } else {
      s = integrate([](double) { return 0.0; }, shift, lo, hi, s, policy, obs);
    }
  }
  return s;
}

inline StateVec propagate_piecewise(const PiecewisePotential& pot, double lambda, double from, double to, StateVec s,
                                    const StepPolicy& policy = kCanonicalPolicy) {
  return propagate_piecewise(pot, lambda, from, to, s, [](double, StateVec) {}, policy);
}

struct BlockRecord {
  int step = 0;  // the step k + 1 whose interval [J_k, J_{k+1}] holds the block
  int t = 0;
  std::size_t target = 0;
  WvnSegment segment;
  BlockDiagnostics diagnostics;
  double theta0 = 0.0;
  double measured_angle = 0.0;
  double C_block = 0.0;  // |f|, |f'| <= C_block / (x - b) on the block
};

struct EigenRecord {
  double lambda = 1.0;
  double start_angle = 0.0;  // log-derivative angle at the start point
  int admitted_at_step = 1;
  std::vector<double> junction_points;  // J_1 .. J_kmax
  std::vector<double> junction_norms;
  std::vector<double> junction_angles;  // Pruefer angles
};

struct EigenLedger {
  double start_point = 1.0;
  std::vector<EigenRecord> records;
};

struct AssembleOptions {
  BlockParams block;
  int max_doublings = 3;
};

struct Assembly {
  ConstructionPlan plan;
  PiecewisePotential potential;
  EigenLedger ledger;
  std::vector<BlockRecord> blocks;
  int offset_doublings = 0;
};

/// Builds all blocks of the plan. boundary_targets[j] is the log-derivative
/// angle of w_j at plan.start_point.
inline Assembly assemble(const ConstructionPlan& plan, const std::vector<double>& boundary_targets,
                         const AssembleOptions& opts = {}) {
  const auto admitted = static_cast<std::size_t>(plan.admitted_count());
  if (boundary_targets.size() < admitted) {
    throw Error(Errc::InvalidArgument, "missing boundary targets for admitted eigenvalues");
  }
  Assembly out;
  out.plan = plan;
  out.potential.support_start = plan.support_start;
  out.potential.map = plan.map();
  out.ledger.start_point = plan.start_point;

  const std::vector<double> tracked(plan.eigenvalues.begin(), plan.eigenvalues.begin() + static_cast<long>(admitted));
  std::vector<StateVec> states(admitted);
  for (std::size_t j = 0; j < admitted; ++j) {
    EigenRecord rec;
    rec.lambda = tracked[j];
    rec.start_angle = boundary_targets[j];
    rec.admitted_at_step = plan.admitted_at_step(j);
    out.ledger.records.push_back(rec);
    states[j] = state_from_log_angle(boundary_targets[j]);
  }

  BlockParams params = opts.block;
  params.min_offset = plan.min_offset;
  params.ramp_width = plan.ramp_width;
  const auto record_junction = [&](double x) {
    for (std::size_t j = 0; j < admitted; ++j) {
      auto& rec = out.ledger.records[j];
      rec.junction_points.push_back(x);
      rec.junction_norms.push_back(weighted_norm(states[j], rec.lambda));
      rec.junction_angles.push_back(prufer_angle(states[j], rec.lambda));
    }
  };

  // f = 0 up to J_1
  for (std::size_t j = 0; j < admitted; ++j) {
    states[j] = propagate_piecewise(out.potential, tracked[j], plan.start_point, plan.J[1], states[j]);
  }
  record_junction(plan.J[1]);

  for (int k = 1; k < plan.k_max; ++k) {
    const double T = plan.T[k + 1];
    for (int t = 0; t < plan.N[k + 1]; ++t) {
      const auto target = static_cast<std::size_t>(t);
      const double b = t * T;
      const double x0 = plan.J[k] + t * T;
      const double x1 = (t + 1 == plan.N[k + 1]) ? plan.J[k + 1] : x0 + T;
      if (std::abs(x1 - (x0 + T)) > 1e-12 * x1) throw Error(Errc::InconsistentPlan, "block tiling mismatch");
      std::vector<double> others;
      for (std::size_t j = 0; j < admitted; ++j) {
        if (j != target) others.push_back(tracked[j]);
      }
      BlockRecord rec;
      rec.step = k + 1;
      rec.t = t;
      rec.target = target;
      rec.theta0 = prufer_angle(states[target], tracked[target]);
      BlockResult built = build_block(tracked[target], others, x0, x1, b, rec.theta0, plan.a, out.potential.map, params);
      rec.segment = built.segment;
      rec.diagnostics = built.diagnostics;
      rec.measured_angle = rec.theta0;
      rec.C_block = rec.segment.amplitude * rec.diagnostics.c_ramp * (1.0 + 2.0 * rec.segment.kappa());
      out.potential.segments.push_back(rec.segment);
      for (std::size_t j = 0; j < admitted; ++j) {
        states[j] = propagate_piecewise(out.potential, tracked[j], x0, x1, states[j]);
      }
      out.blocks.push_back(rec);
    }
    record_junction(plan.J[k + 1]);
  }
  return out;
}

/// plan + assemble, doubling the minimum offset (and so T_1) on
/// ContractViolated up to opts.max_doublings times.
template <class Targets>
Assembly construct(PlanRequest req, Targets&& boundary_targets_for, const AssembleOptions& opts = {}) {
  for (int d = 0;; ++d) {
    const ConstructionPlan p = plan(req);
    try {
      Assembly out = assemble(p, boundary_targets_for(p), opts);
      out.offset_doublings = d;
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::ContractViolated || d >= opts.max_doublings) throw;
      req.overrides.min_offset = 2.0 * p.min_offset;
    }
  }
}

/// Even reflection of a half-line potential: q(-x) = q(x).
struct WholeLinePotential {
  PiecewisePotential half;

  [[nodiscard]] double shifted(double x) const { return half.shifted(std::abs(x)); }
  [[nodiscard]] FieldValue eval(double x) const {
    const FieldValue v = half.eval(std::abs(x));
    return {v.f, x < 0.0 ? -v.fp : v.fp};
  }
};

inline WholeLinePotential whole_line_extend(const PiecewisePotential& potential, const ConstructionPlan& plan) {
  for (double theta : plan.boundary_angles) {
    if (std::abs(wrap_angle_diff(theta)) > 1e-14) {
      throw Error(Errc::NonNeumannAngles, "whole-line reflection needs Neumann angles (theta = 0)");
    }
  }
  if (plan.boundary_angles.size() < static_cast<std::size_t>(plan.admitted_count())) {
    throw Error(Errc::NonNeumannAngles, "missing boundary angles");
  }
  return {potential};
}

}  // namespace spectral_forge
