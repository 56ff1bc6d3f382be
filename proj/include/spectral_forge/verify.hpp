#pragma once

// Independent re-checks of an assembled construction: ledger replay and
// contraction, block certificates, off-spectrum boundedness, curvature
// budget, the ln r / r envelope of q - E0, L2 tails and junction continuity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "spectral_forge/error.hpp"
#include "spectral_forge/manifold.hpp"
#include "spectral_forge/ode_engine.hpp"
#include "spectral_forge/origin.hpp"
#include "spectral_forge/parallel.hpp"
#include "spectral_forge/probe.hpp"
#include "spectral_forge/schedule.hpp"

namespace spectral_forge {

struct ContractionCertificate {
  double lambda = 0.0;
  int admitted_at_step = 1;
  std::vector<double> ratios;
  std::vector<double> targets;
  double worst_ratio = 0.0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max(ratio - target)
  bool pass = true;
};

/// norms[i + 1] <= rho * norms[i] for i >= first.
inline ContractionCertificate check_contraction(const std::vector<double>& norms, double rho, std::size_t first = 0) {
  ContractionCertificate c;
  for (std::size_t i = first; i + 1 < norms.size(); ++i) {
    const double r = norms[i + 1] / norms[i];
    c.ratios.push_back(r);
    c.targets.push_back(rho);
    c.worst_ratio = std::max(c.worst_ratio, r);
    c.worst_margin = std::max(c.worst_margin, r - rho);
    if (!(r <= rho)) c.pass = false;
  }
  return c;
}

/// Per eigenvalue: norm(J_{k+1}) <= min(rho_{k+1}, 1/2) norm(J_k) for every k
/// from the admission step on.
inline std::vector<ContractionCertificate> check_decay_ledger(const EigenLedger& ledger, const ConstructionPlan& plan) {
  std::vector<ContractionCertificate> out;
  for (const auto& rec : ledger.records) {
    ContractionCertificate c;
    c.lambda = rec.lambda;
    c.admitted_at_step = rec.admitted_at_step;
    for (int k = std::max(1, rec.admitted_at_step); k < plan.k_max; ++k) {
      const auto i = static_cast<std::size_t>(k - 1);
      if (i + 1 >= rec.junction_norms.size()) break;
      const double target = std::min(plan.rho[static_cast<std::size_t>(k) + 1], 0.5);
      const double r = rec.junction_norms[i + 1] / rec.junction_norms[i];
      c.ratios.push_back(r);
      c.targets.push_back(target);
      c.worst_ratio = std::max(c.worst_ratio, r);
      c.worst_margin = std::max(c.worst_margin, r - target);
      if (!(r <= target) || !(rec.junction_norms[i + 1] > 0.0)) c.pass = false;
    }
    out.push_back(c);
  }
  return out;
}

/// Recomputed ledger plus the quantities that need the full trajectories.
struct Replay {
  EigenLedger ledger;
  std::vector<double> block_angles;  // target's Pruefer angle at each block start
  std::vector<L2Report> l2;
  std::vector<StateVec> end_states;
};

inline Replay replay_ledger(const ConstructionPlan& plan, const PiecewisePotential& pot,
                            const std::vector<BlockRecord>& blocks, const std::vector<double>& start_angles) {
  const auto admitted = static_cast<std::size_t>(plan.admitted_count());
  if (start_angles.size() < admitted) throw Error(Errc::InvalidArgument, "missing start angles");
  Replay out;
  out.ledger.start_point = plan.start_point;
  out.ledger.records.resize(admitted);
  out.l2.resize(admitted);
  out.end_states.resize(admitted);
  std::vector<std::vector<double>> angles(admitted, std::vector<double>(blocks.size(), std::nan("")));
  const std::vector<double> junctions(plan.J.begin() + 1, plan.J.end());

  parallel_for(admitted, [&](std::size_t j) {
    EigenRecord& rec = out.ledger.records[j];
    rec.lambda = plan.eigenvalues[j];
    rec.start_angle = start_angles[j];
    rec.admitted_at_step = plan.admitted_at_step(j);
    std::size_t next_junction = 0, next_block = 0;
    std::vector<double> contrib(junctions.size(), 0.0);
    double prev_x = plan.start_point, prev_y2 = 0.0;
    bool have_prev = false;
    const double lambda = rec.lambda;
    out.end_states[j] = propagate_piecewise(pot, lambda, plan.start_point, plan.R_max(), state_from_log_angle(start_angles[j]),
                                            [&](double x, StateVec s) {
      const double y2 = s.y * s.y;
      if (have_prev && next_junction < junctions.size()) {
        contrib[next_junction] += 0.5 * (x - prev_x) * (prev_y2 + y2);
      }
      prev_x = x;
      prev_y2 = y2;
      have_prev = true;
      while (next_block < blocks.size() && blocks[next_block].segment.x0 < x) ++next_block;
      if (next_block < blocks.size() && blocks[next_block].segment.x0 == x) {
        if (blocks[next_block].target == j) angles[j][next_block] = prufer_angle(s, lambda);
      }
      if (next_junction < junctions.size() && x == junctions[next_junction]) {
        rec.junction_points.push_back(x);
        rec.junction_norms.push_back(weighted_norm(s, lambda));
        rec.junction_angles.push_back(prufer_angle(s, lambda));
        ++next_junction;
      }
    });
    L2Report& rep = out.l2[j];
    double acc = 0.0;
    for (double c : contrib) {
      rep.contributions.push_back(c);
      acc += c;
      rep.partial_norms.push_back(acc);
    }
    for (std::size_t k = 0; k + 1 < contrib.size(); ++k) rep.ratios.push_back(contrib[k + 1] / contrib[k]);
  });
  out.block_angles.assign(blocks.size(), std::nan(""));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].target < admitted) out.block_angles[b] = angles[blocks[b].target][b];
  }
  return out;
}

/// Largest relative difference between two ledgers (infinity on shape mismatch).
inline double ledger_max_rel_diff(const EigenLedger& a, const EigenLedger& b) {
  if (a.records.size() != b.records.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t j = 0; j < a.records.size(); ++j) {
    const auto& x = a.records[j];
    const auto& y = b.records[j];
    if (x.junction_norms.size() != y.junction_norms.size() || x.lambda != y.lambda) {
      return std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < x.junction_norms.size(); ++i) {
      const double ref = std::max(std::abs(x.junction_norms[i]), std::abs(y.junction_norms[i]));
      const double d = std::abs(x.junction_norms[i] - y.junction_norms[i]) / (ref > 0.0 ? ref : 1.0);
      worst = std::max(worst, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
      const double da = std::abs(wrap_angle_diff(x.junction_angles[i] - y.junction_angles[i]));
      worst = std::max(worst, std::isnan(da) ? std::numeric_limits<double>::infinity() : da);
    }
  }
  return worst;
}

struct BlockCertificate {
  int step = 0;
  int t = 0;
  double lambda = 0.0;
  double angle_chain_error = 0.0;
  BlockDiagnostics diagnostics;
  double bound_form_ratio = 0.0;  // sup (x - b) max(|f|, |f'|) / C_block
  bool pass = false;
};

inline std::vector<BlockCertificate> recertify_blocks(const ConstructionPlan& plan, const PiecewisePotential& pot,
                                                      const std::vector<BlockRecord>& blocks,
                                                      const std::vector<double>& replay_angles,
                                                      const BlockParams& params, double angle_tol = 1e-9) {
  std::vector<BlockCertificate> out(blocks.size());
  const auto admitted = static_cast<std::size_t>(plan.admitted_count());
  parallel_for(blocks.size(), [&](std::size_t i) {
    const BlockRecord& b = blocks[i];
    BlockCertificate& c = out[i];
    c.step = b.step;
    c.t = b.t;
    c.lambda = b.segment.lambda;
    c.angle_chain_error = std::abs(wrap_angle_diff(replay_angles[i] - b.theta0));
    if (std::isnan(c.angle_chain_error)) c.angle_chain_error = std::numeric_limits<double>::infinity();
    std::vector<double> others;
    for (std::size_t j = 0; j < admitted; ++j) {
      if (j != b.target) others.push_back(plan.eigenvalues[j]);
    }
    c.diagnostics = certify_block(b.segment, pot.map, replay_angles[i], others, params);
    const WvnSegment& s = b.segment;
    constexpr int samples = 4096;
    for (int k = 0; k <= samples; ++k) {
      const double x = s.x0 + (s.x1 - s.x0) * k / samples;
      const FieldValue v = segment_field(s, x);
      c.bound_form_ratio = std::max(c.bound_form_ratio, (x - s.b) * std::max(std::abs(v.f), std::abs(v.fp)) / b.C_block);
    }
    c.pass = c.diagnostics.certified && c.angle_chain_error <= angle_tol && c.bound_form_ratio <= 1.0;
  });
  return out;
}

struct OffspectrumResult {
  double energy = 0.0;
  double factor = 1.0;           // sup weighted norm over both basis solutions
  double growth_exponent = 0.0;  // d log(norm) / d log(r) over the last junction interval
  bool superlinear = false;
  bool pass = true;
};

/// Midpoints between consecutive eigenvalues plus lambda_min / 2 and 1.5 lambda_max.
inline std::vector<double> default_offspectrum_energies(std::vector<double> eigenvalues) {
  std::sort(eigenvalues.begin(), eigenvalues.end());
  std::vector<double> out{0.5 * eigenvalues.front()};
  for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) out.push_back(0.5 * (eigenvalues[i] + eigenvalues[i + 1]));
  out.push_back(1.5 * eigenvalues.back());
  return out;
}

/// 0.05 times the smallest gap between embedded eigenvalues (0.05 lambda for one).
inline double offspectrum_separation(std::vector<double> eigenvalues) {
  std::sort(eigenvalues.begin(), eigenvalues.end());
  double gap = eigenvalues.front();
  for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) gap = std::min(gap, eigenvalues[i + 1] - eigenvalues[i]);
  return 0.05 * gap;
}

inline std::vector<OffspectrumResult> check_offspectrum(const PiecewisePotential& pot,
                                                        const std::vector<double>& energies,
                                                        const std::vector<double>& embedded, double from, double to,
                                                        const std::vector<double>& junctions,
                                                        double factor_limit = 3.0) {
  const double sep = offspectrum_separation(embedded);
  for (double E : energies) {
    if (!(E > 0.0)) throw Error(Errc::NonPositiveLambda, "test energies must be positive");
    for (double l : embedded) {
      if (std::abs(E - l) < sep) {
        throw Error(Errc::InvalidArgument, "test energy " + std::to_string(E) + " too close to embedded " +
                                               std::to_string(l));
      }
    }
  }
  std::vector<OffspectrumResult> out(energies.size());
  parallel_for(energies.size(), [&](std::size_t i) {
    const double E = energies[i];
    OffspectrumResult& res = out[i];
    res.energy = E;
    const double r = std::sqrt(E);
    std::vector<double> at_junction(junctions.size(), 0.0);
    for (StateVec s0 : {StateVec{1.0, 0.0}, StateVec{0.0, r}}) {
      std::size_t next = 0;
      propagate_piecewise(pot, E, from, to, s0, [&](double x, StateVec s) {
        const double w = std::hypot(s.y, s.yp / r);
        res.factor = std::max(res.factor, w);
        if (next < junctions.size() && x == junctions[next]) {
          at_junction[next] = std::max(at_junction[next], w);
          ++next;
        }
      });
    }
    const std::size_t m = junctions.size();
    if (m >= 2 && at_junction[m - 2] > 0.0) {
      res.growth_exponent = std::log(at_junction[m - 1] / at_junction[m - 2]) / std::log(junctions[m - 1] / junctions[m - 2]);
    }
    res.superlinear = res.growth_exponent > 1.0;
    res.pass = res.factor <= factor_limit && !res.superlinear;
  });
  return out;
}

struct EnvelopeResult {
  double sup = 0.0;
  double argmax = 0.0;
};

/// sup over samples of r |q - E0| / ln r; samples must satisfy r >= e.
template <class QFn>
EnvelopeResult check_q_envelope(QFn&& q_minus_E0, const std::vector<double>& r_samples) {
  EnvelopeResult res;
  for (double r : r_samples) {
    if (r < std::numbers::e) throw Error(Errc::InvalidArgument, "envelope samples need r >= e");
    const double v = r * std::abs(q_minus_E0(r)) / std::log(r);
    if (v > res.sup) {
      res.sup = v;
      res.argmax = r;
    }
  }
  return res;
}

/// Dense sweep of r |K + K0| (manifold) or r |q - E0| (pure Schroedinger)
/// and of the q envelope over [lo, hi].
struct CurvatureSweep {
  double sup_rK = 0.0;
  double argmax_rK = 0.0;
  std::vector<double> running_sup;  // sup over [lo, J_k]
  std::optional<double> sup_budget_ratio;
  double argmax_budget_ratio = 0.0;
  EnvelopeResult q_envelope;
  std::size_t samples = 0;
};

inline CurvatureSweep curvature_sweep(const ConstructionPlan& plan, const PiecewisePotential& pot, double lo,
                                      double hi, double step, const std::vector<double>& junctions) {
  CurvatureSweep out;
  const bool manifold = is_manifold(plan.mode);
  std::optional<MetricProfile> profile;
  if (manifold) profile.emplace(plan.K0, plan.n, pot);
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  if (plan.budget && manifold) out.sup_budget_ratio = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double r = (i == n) ? hi : lo + static_cast<double>(i) * step;
    while (next < junctions.size() && junctions[next] < r) {
      out.running_sup.push_back(out.sup_rK);
      ++next;
    }
    double rK, qe;
    if (manifold) {
      const MetricValues m = profile->eval(r, false);
      rK = r * std::abs(m.K + plan.K0);
      qe = m.q - profile->E0();
    } else {
      qe = pot.shifted(r);
      rK = r * std::abs(qe);
    }
    if (rK > out.sup_rK) {
      out.sup_rK = rK;
      out.argmax_rK = r;
    }
    if (out.sup_budget_ratio) {
      const double ratio = rK / (*plan.budget)(r);
      if (ratio > *out.sup_budget_ratio) {
        out.sup_budget_ratio = ratio;
        out.argmax_budget_ratio = r;
      }
    }
    if (r >= std::numbers::e) {
      const double v = r * std::abs(qe) / std::log(r);
      if (v > out.q_envelope.sup) out.q_envelope = {v, r};
    }
    ++out.samples;
  }
  while (next < junctions.size()) {
    out.running_sup.push_back(out.sup_rK);
    ++next;
  }
  return out;
}

struct JunctionContinuity {
  double lambda = 0.0;
  double value_error = 0.0;
  double derivative_error = 0.0;
  bool pass = false;
};

/// Matches the origin solution h1 with f1^{-(n-1)/2} w at r = 1.
inline JunctionContinuity check_junction(const ConstructionPlan& plan, const MetricProfile& profile, double lambda,
                                         double start_angle, double tol = 1e-8) {
  const StateVec h1 = extend_h1_to_one(lambda, plan.K0, plan.n);
  const GlobalEigenfunction g =
      eigenfunction_assemble(lambda, {1.0}, {state_from_log_angle(start_angle)}, h1, profile);
  return {lambda, g.junction_value_error, g.junction_derivative_error,
          g.junction_value_error <= tol && g.junction_derivative_error <= tol};
}

/// Left-half L2 contributions of the even extension, integrated independently
/// through the reflected potential from x = 0 towards -R_max.
inline L2Report whole_line_left_l2(const WholeLinePotential& wl, const ConstructionPlan& plan, double lambda,
                                   double start_angle) {
  std::vector<double> grid;
  std::vector<StateVec> states;
  const StateVec s0 = state_from_log_angle(start_angle);
  integrate([&wl](double x) { return wl.shifted(x); }, EnergyShift{0.0, lambda}, 0.0, -plan.R_max(),
            StateVec{s0.y, -s0.yp}, kCanonicalPolicy, [&](double x, StateVec s) {
              grid.push_back(-x);
              states.push_back(s);
            });
  const std::vector<double> junctions(plan.J.begin() + 1, plan.J.end());
  return l2_contributions(grid, states, junctions, 0.0);
}

struct ProbeRun {
  double lambda = 0.0;
  ProbeSpectrum spectrum;
  std::optional<ProbeSpectrum> stretched;  // X -> 1.2 X
  double shift = std::nan("");             // |E(1.2 X) - E(X)| for the nearest localized eigenvalue
};

/// Robin angle at x = 1 for eigenvalue lambda: the boundary target in manifold
/// modes, the free-propagated start angle in pure Schroedinger modes.
inline double probe_angle(const ConstructionPlan& plan, double lambda, double start_angle) {
  if (plan.start_point >= 1.0) return start_angle;
  const StateVec s = propagate_final([](double) { return 0.0; }, EnergyShift{0.0, lambda}, plan.start_point, 1.0,
                                     state_from_log_angle(start_angle), kCanonicalPolicy);
  return log_derivative_angle(s);
}

/// Localized eigenpair nearest to lambda (mass >= min_mass), or NaN energy.
inline ProbeEigen nearest_localized(const ProbeSpectrum& s, double lambda, double min_mass = 0.5) {
  ProbeEigen best{std::nan(""), 0.0};
  for (const auto& e : s.eigen) {
    if (e.mass < min_mass) continue;
    if (std::isnan(best.energy) || std::abs(e.energy - lambda) < std::abs(best.energy - lambda)) best = e;
  }
  return best;
}

inline ProbeRun run_probe(const ConstructionPlan& plan, const PiecewisePotential& pot, double lambda,
                          double start_angle, double X, double h_grid, double window, bool stretch = true) {
  if (X > plan.R_max() * (1.0 + 1e-12)) throw Error(Errc::InvalidArgument, "probe X exceeds R_max");
  std::optional<MetricProfile> profile;
  if (is_manifold(plan.mode)) profile.emplace(plan.K0, plan.n, pot);
  const double E0 = plan.E0();
  auto V = [&](double x) { return profile ? profile->eval(x, false).q - E0 : pot.shifted(x); };
  ProbeOptions opt;
  opt.x_left = 1.0;
  opt.angle = probe_angle(plan, lambda, start_angle);
  ProbeRun run;
  run.lambda = lambda;
  run.spectrum = discrete_spectrum_probe(V, X, h_grid, lambda - window, lambda + window, opt);
  if (stretch && 1.2 * X <= plan.R_max() * (1.0 + 1e-12)) {
    run.stretched = discrete_spectrum_probe(V, 1.2 * X, h_grid, lambda - window, lambda + window, opt);
    const ProbeEigen a = nearest_localized(run.spectrum, lambda);
    const ProbeEigen b = nearest_localized(*run.stretched, lambda);
    run.shift = std::abs(a.energy - b.energy);
  }
  return run;
}

struct ProbeSettings {
  bool enabled = true;
  double X = 0.0;  // 0: min(300, R_max / 1.2)
  double h_grid = 1e-3;
  double window = 0.05;
};

struct VerifyOptions {
  BlockParams block;
  double ledger_rel_tol = 1e-9;
  double junction_tol = 1e-8;
  double angle_tol = 1e-9;
  double sup_stability = 0.1;
  double offspectrum_factor = 3.0;
  std::vector<double> offspectrum_energies;  // empty: default set
  double sweep_step = 0.05;
  ProbeSettings probe;
};

struct VerificationReport {
  std::vector<BlockCertificate> blocks;
  bool blocks_pass = true;
  bool ledger_consistent = true;
  double ledger_max_rel_diff = 0.0;
  std::vector<ContractionCertificate> contraction;
  bool contraction_pass = true;
  std::vector<L2Report> l2;
  std::vector<L2Report> l2_left;  // whole-line mode only
  std::vector<bool> l2_certified;
  bool l2_pass = true;
  std::vector<JunctionContinuity> junctions;
  bool junction_pass = true;
  CurvatureSweep curvature;
  bool stability_applicable = false;
  double sup_variation = 0.0;
  bool sup_stable = true;
  bool budget_pass = true;
  std::vector<OffspectrumResult> offspectrum;
  bool offspectrum_pass = true;
  std::optional<double> evenness_max_diff;
  bool evenness_pass = true;
  std::vector<ProbeRun> probe;  // heuristic, never gates pass
  bool plan_admission_ok = true;
  bool pass = false;
};

/// c_{k+1} / c_k <= 1/2 from the admission step on (c_k over [J_{k-1}, J_k]).
inline bool l2_tail_certified(const L2Report& rep, int admitted_at_step) {
  for (std::size_t i = static_cast<std::size_t>(std::max(0, admitted_at_step - 1)); i < rep.ratios.size(); ++i) {
    if (!(rep.ratios[i] <= 0.5)) return false;
  }
  return true;
}

inline VerificationReport verify_construction(const ConstructionPlan& plan, const PiecewisePotential& pot,
                                              const std::vector<BlockRecord>& blocks, const EigenLedger& claimed,
                                              const VerifyOptions& opt = {}) {
  VerificationReport rep;
  std::vector<double> start_angles;
  for (const auto& r : claimed.records) start_angles.push_back(r.start_angle);
  const Replay replay = replay_ledger(plan, pot, blocks, start_angles);

  rep.ledger_max_rel_diff = ledger_max_rel_diff(replay.ledger, claimed);
  rep.ledger_consistent = rep.ledger_max_rel_diff <= opt.ledger_rel_tol;

  BlockParams params = opt.block;
  params.min_offset = plan.min_offset;
  params.ramp_width = plan.ramp_width;
  rep.blocks = recertify_blocks(plan, pot, blocks, replay.block_angles, params, opt.angle_tol);
  for (const auto& b : rep.blocks) rep.blocks_pass = rep.blocks_pass && b.pass;

  // contraction is judged on the claimed ledger; consistency ties it to the potential
  rep.contraction = check_decay_ledger(claimed, plan);
  for (const auto& c : rep.contraction) rep.contraction_pass = rep.contraction_pass && c.pass;

  rep.l2 = replay.l2;
  for (std::size_t j = 0; j < rep.l2.size(); ++j) {
    const bool ok = l2_tail_certified(rep.l2[j], replay.ledger.records[j].admitted_at_step);
    rep.l2_certified.push_back(ok);
    rep.l2_pass = rep.l2_pass && ok;
  }

  const std::vector<double> junctions(plan.J.begin() + 1, plan.J.end());
  if (is_manifold(plan.mode)) {
    const MetricProfile profile(plan.K0, plan.n, pot);
    for (std::size_t j = 0; j < start_angles.size(); ++j) {
      rep.junctions.push_back(check_junction(plan, profile, plan.eigenvalues[j], start_angles[j], opt.junction_tol));
      rep.junction_pass = rep.junction_pass && rep.junctions.back().pass;
    }
  }

  rep.curvature = curvature_sweep(plan, pot, plan.support_start, plan.R_max(), opt.sweep_step, junctions);
  if (plan.mode == Mode::manifold_countable) {
    rep.budget_pass = rep.curvature.sup_budget_ratio && *rep.curvature.sup_budget_ratio <= 1.0;
    rep.plan_admission_ok = !plan.budget_too_tight;
  } else {
    rep.budget_pass = std::isfinite(rep.curvature.sup_rK);
  }
  const auto& run = rep.curvature.running_sup;
  if (run.size() >= 2 && run.back() > 0.0) {
    rep.sup_variation = (run[run.size() - 1] - run[run.size() - 2]) / run.back();
  }
  rep.stability_applicable = plan.mode == Mode::manifold_finite && plan.k_max >= 3;
  rep.sup_stable = !rep.stability_applicable || rep.sup_variation < opt.sup_stability;

  std::vector<double> tracked(plan.eigenvalues.begin(), plan.eigenvalues.begin() + plan.admitted_count());
  const std::vector<double> energies =
      opt.offspectrum_energies.empty() ? default_offspectrum_energies(tracked) : opt.offspectrum_energies;
  rep.offspectrum = check_offspectrum(pot, energies, tracked, plan.start_point, plan.R_max(), junctions,
                                      opt.offspectrum_factor);
  for (const auto& o : rep.offspectrum) rep.offspectrum_pass = rep.offspectrum_pass && o.pass;

  if (plan.mode == Mode::schrodinger_wholeline) {
    const WholeLinePotential wl = whole_line_extend(pot, plan);
    double diff = 0.0;
    constexpr int samples = 20000;
    for (int i = 1; i <= samples; ++i) {
      const double x = plan.R_max() * i / samples;
      diff = std::max(diff, std::abs(wl.shifted(-x) - wl.shifted(x)));
      diff = std::max(diff, std::abs(wl.eval(-x).f - wl.eval(x).f));
      diff = std::max(diff, std::abs(wl.eval(-x).fp + wl.eval(x).fp));
    }
    rep.evenness_max_diff = diff;
    rep.evenness_pass = diff == 0.0;
    for (std::size_t j = 0; j < start_angles.size(); ++j) {
      rep.l2_left.push_back(whole_line_left_l2(wl, plan, plan.eigenvalues[j], start_angles[j]));
      rep.l2_pass = rep.l2_pass && l2_tail_certified(rep.l2_left.back(), replay.ledger.records[j].admitted_at_step);
    }
  }

  if (opt.probe.enabled) {
    const double X = opt.probe.X > 0.0 ? opt.probe.X : std::min(300.0, plan.R_max() / 1.2);
    if (X > 2.0) {
      for (std::size_t j = 0; j < start_angles.size(); ++j) {
        rep.probe.push_back(
            run_probe(plan, pot, plan.eigenvalues[j], start_angles[j], X, opt.probe.h_grid, opt.probe.window));
      }
    }
  }

  rep.pass = rep.blocks_pass && rep.ledger_consistent && rep.contraction_pass && rep.l2_pass && rep.junction_pass &&
             rep.budget_pass && rep.sup_stable && rep.offspectrum_pass && rep.evenness_pass && rep.plan_admission_ok;
  return rep;
}

}  // namespace spectral_forge
