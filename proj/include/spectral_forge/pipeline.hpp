#pragma once

// Stages plan -> build -> verify -> export / probe, each reading the previous
// stage's JSON artifacts from the output directory.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "spectral_forge/config.hpp"
#include "spectral_forge/io.hpp"
#include "spectral_forge/manifold.hpp"
#include "spectral_forge/origin.hpp"
#include "spectral_forge/schedule.hpp"
#include "spectral_forge/svg.hpp"
#include "spectral_forge/verify.hpp"

namespace spectral_forge {

namespace fs = std::filesystem;

struct PlanArtifact {
  RunConfig config;
  ConstructionPlan plan;
  std::vector<double> boundary_targets;  // log-derivative angles at plan.start_point
};

struct BuildArtifact {
  ConstructionPlan plan;
  std::vector<double> boundary_targets;
  PiecewisePotential potential;
  std::vector<BlockRecord> blocks;
  EigenLedger ledger;
};

inline std::vector<double> boundary_targets_for(const ConstructionPlan& p) {
  if (!is_manifold(p.mode)) return p.boundary_angles;
  std::vector<double> out;
  for (double l : p.eigenvalues) out.push_back(boundary_target(l, p.K0, p.n));
  return out;
}

inline PlanArtifact stage_plan(const RunConfig& cfg) {
  PlanArtifact a;
  a.config = cfg;
  a.plan = plan(cfg.request);
  a.boundary_targets = boundary_targets_for(a.plan);
  return a;
}

inline json plan_artifact_json(const PlanArtifact& a) {
  return {{"config", config_to_json(a.config)}, {"plan", plan_to_json(a.plan)}, {"boundary_targets", a.boundary_targets}};
}

inline PlanArtifact load_plan_artifact(const fs::path& dir) {
  const json j = read_json_file(dir / "plan.json");
  PlanArtifact a;
  try {
    a.config = parse_config(j.at("config"));
    a.plan = plan_from_json(j.at("plan"));
    a.boundary_targets = j.at("boundary_targets").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(Errc::MissingArtifact, std::string("malformed plan.json: ") + e.what());
  }
  return a;
}

inline Assembly stage_build(const PlanArtifact& a) {
  AssembleOptions opts;
  opts.block = a.config.block;
  opts.max_doublings = a.config.max_doublings;
  return construct(a.config.request, [](const ConstructionPlan& p) { return boundary_targets_for(p); }, opts);
}

inline void write_build(const fs::path& dir, PlanArtifact a, const Assembly& as) {
  a.plan = as.plan;
  a.boundary_targets = boundary_targets_for(as.plan);
  write_json_file(dir / "plan.json", plan_artifact_json(a));
  write_json_file(dir / "potential.json", potential_to_json(as));
  write_json_file(dir / "ledger.json", ledger_to_json(as.ledger));
}

inline BuildArtifact load_build(const fs::path& dir) {
  const PlanArtifact a = load_plan_artifact(dir);
  BuildArtifact b;
  b.plan = a.plan;
  b.boundary_targets = a.boundary_targets;
  try {
    potential_from_json(read_json_file(dir / "potential.json"), b.potential, b.blocks);
    b.ledger = ledger_from_json(read_json_file(dir / "ledger.json"));
  } catch (const json::exception& e) {
    throw Error(Errc::MissingArtifact, std::string("malformed build artifact: ") + e.what());
  }
  return b;
}

inline VerificationReport stage_verify(const RunConfig& cfg, const BuildArtifact& b) {
  VerifyOptions opt = cfg.verify;
  opt.block = cfg.block;
  return verify_construction(b.plan, b.potential, b.blocks, b.ledger, opt);
}

/// States of the canonical trajectory at the sorted sample points xs, by cubic
/// Hermite interpolation between grid points (y'' = (q - lambda) y).
inline std::vector<StateVec> sample_trajectory(const PiecewisePotential& pot, double lambda, double from, double to,
                                               StateVec s0, const std::vector<double>& xs) {
  std::vector<StateVec> out;
  out.reserve(xs.size());
  std::size_t next = 0;
  double xp = from;
  StateVec sp = s0;
  bool first = true;
  propagate_piecewise(pot, lambda, from, to, s0, [&](double x, StateVec s) {
    if (first) {
      while (next < xs.size() && xs[next] <= x) {
        out.push_back(s);
        ++next;
      }
      first = false;
    } else {
      const double h = x - xp;
      const double ap = (pot.shifted(xp) - lambda) * sp.y;
      const double a = (pot.shifted(x) - lambda) * s.y;
      while (next < xs.size() && xs[next] <= x) {
        const double t = (xs[next] - xp) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        out.push_back({h00 * sp.y + h10 * h * sp.yp + h01 * s.y + h11 * h * s.yp,
                       h00 * sp.yp + h10 * h * ap + h01 * s.yp + h11 * h * a});
        ++next;
      }
    }
    xp = x;
    sp = s;
  });
  return out;
}

inline std::vector<double> uniform_samples(double lo, double hi, int count) {
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  xs.back() = hi;
  return xs;
}

inline void stage_export(const fs::path& dir, const BuildArtifact& b, int resolution, bool plots) {
  if (resolution < 2) throw Error(Errc::ConfigInvalid, "resolution must be at least 2");
  const ConstructionPlan& p = b.plan;
  const bool manifold = is_manifold(p.mode);
  const double R = p.R_max();
  fs::create_directories(dir / "eigenfunctions");

  const std::vector<double> xs = uniform_samples(p.start_point, R, resolution);
  {
    CsvWriter csv(dir / "potential.csv", {"x", "f", "f_prime"});
    for (double x : xs) {
      const FieldValue v = b.potential.eval(x);
      csv.row({x, v.f, v.fp});
    }
  }

  std::vector<double> rs(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) rs[static_cast<std::size_t>(i)] = R * (i + 1.0) / resolution;
  std::optional<MetricProfile> profile;
  Series curv{"r|K+K0|", {}, {}}, qex{"q - E0", {}, {}};
  if (manifold) {
    profile.emplace(p.K0, p.n, b.potential);
    CsvWriter csv(dir / "metric.csv", {"r", "log_f1", "S", "K", "r_abs_K_plus_K0", "S_minus_sqrtK0", "q_minus_E0"});
    for (double r : rs) {
      const MetricValues m = profile->eval(r);
      const double rk = r * std::abs(m.K + p.K0);
      csv.row({r, m.log_f1, m.S, m.K, rk, m.S - std::sqrt(p.K0), m.q - p.E0()});
      if (r >= p.support_start) {
        curv.x.push_back(r);
        curv.y.push_back(rk);
      }
    }
  } else {
    CsvWriter csv(dir / "metric.csv", {"x", "q_minus_E0", "x_abs_q_minus_E0"});
    for (double r : rs) {
      const double q = b.potential.shifted(r);
      csv.row({r, q, r * std::abs(q)});
      qex.x.push_back(r);
      qex.y.push_back(r * std::abs(q));
    }
    qex.label = "x|q - E0|";
  }

  std::vector<Series> eig_series, ledger_series;
  for (std::size_t j = 0; j < b.ledger.records.size(); ++j) {
    const EigenRecord& rec = b.ledger.records[j];
    const StateVec s0 = state_from_log_angle(rec.start_angle);
    const std::vector<StateVec> w = sample_trajectory(b.potential, rec.lambda, p.start_point, R, s0, xs);
    const std::string name = "lambda_" + std::to_string(j + 1);
    Series es{"lambda = " + std::to_string(rec.lambda), {}, {}};
    if (manifold) {
      const StateVec h1 = extend_h1_to_one(rec.lambda, p.K0, p.n);
      const GlobalEigenfunction g =
          eigenfunction_assemble(rec.lambda, {1.0}, {s0}, h1, *profile, h1_samples(rec.lambda, p.K0, p.n));
      {
        CsvWriter csv(dir / "eigenfunctions" / ("origin_" + std::to_string(j + 1) + ".csv"), {"r", "h", "h_prime"});
        for (std::size_t i = 0; i < g.inner.r.size(); ++i) csv.row({g.inner.r[i], g.inner.h[i].y, g.inner.h[i].yp});
      }
      CsvWriter csv(dir / "eigenfunctions" / (name + ".csv"), {"r", "w", "w_prime", "weighted_norm", "h", "h_prime"});
      const double c = 0.5 * (p.n - 1);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const MetricValues m = profile->eval(xs[i]);
        const double gsc = g.scale * std::exp(-c * m.log_f1);
        csv.row({xs[i], w[i].y, w[i].yp, weighted_norm(w[i], rec.lambda), gsc * w[i].y,
                 gsc * (w[i].yp - c * m.S * w[i].y)});
      }
    } else {
      CsvWriter csv(dir / "eigenfunctions" / (name + ".csv"), {"x", "w", "w_prime", "weighted_norm"});
      for (std::size_t i = 0; i < xs.size(); ++i) csv.row({xs[i], w[i].y, w[i].yp, weighted_norm(w[i], rec.lambda)});
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      es.x.push_back(xs[i]);
      es.y.push_back(w[i].y);
    }
    eig_series.push_back(std::move(es));
    Series ls{"lambda = " + std::to_string(rec.lambda), {}, {}};
    for (std::size_t k = 0; k < rec.junction_norms.size(); ++k) {
      ls.x.push_back(rec.junction_points[k]);
      ls.y.push_back(std::log10(rec.junction_norms[k]));
    }
    ledger_series.push_back(std::move(ls));
  }

  if (plots) {
    fs::create_directories(dir / "plots");
    if (manifold) {
      write_svg_plot(dir / "plots" / "curvature.svg", "radial curvature excess", "r", "r|K(r)+K0|", {curv});
    } else {
      write_svg_plot(dir / "plots" / "potential.svg", "potential envelope", "x", "x|q(x)-E0|", {qex});
    }
    write_svg_plot(dir / "plots" / "ledger.svg", "junction norms", "J_k", "log10 weighted norm", ledger_series);
    write_svg_plot(dir / "plots" / "eigenfunctions.svg", "eigen-solutions (Schroedinger gauge)", "x", "w(x)",
                   eig_series);
  }
}

inline std::vector<ProbeRun> stage_probe(const fs::path& dir, const RunConfig& cfg, const BuildArtifact& b) {
  const ProbeSettings& s = cfg.verify.probe;
  const double X = s.X > 0.0 ? s.X : std::min(300.0, b.plan.R_max() / 1.2);
  std::vector<ProbeRun> runs;
  for (const auto& rec : b.ledger.records) {
    runs.push_back(run_probe(b.plan, b.potential, rec.lambda, rec.start_angle, X, s.h_grid, s.window));
  }
  CsvWriter csv(dir / "probe.csv", {"lambda", "X", "energy", "mass"});
  json j = json::array();
  for (const auto& r : runs) {
    for (const auto& e : r.spectrum.eigen) csv.row({r.lambda, r.spectrum.X, e.energy, e.mass});
    if (r.stretched) {
      for (const auto& e : r.stretched->eigen) csv.row({r.lambda, r.stretched->X, e.energy, e.mass});
    }
    json e{{"lambda", r.lambda}, {"spectrum", probe_to_json(r.spectrum)}, {"shift_under_1.2X", detail::num(r.shift)}};
    if (r.stretched) e["stretched"] = probe_to_json(*r.stretched);
    j.push_back(e);
  }
  write_json_file(dir / "probe.json", {{"heuristic", true}, {"runs", j}});
  return runs;
}

}  // namespace spectral_forge
