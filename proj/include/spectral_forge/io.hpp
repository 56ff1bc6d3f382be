#pragma once

// JSON and CSV forms of plans, potentials, ledgers and reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/schedule.hpp"
#include "spectral_forge/verify.hpp"

namespace spectral_forge {

using nlohmann::json;

namespace detail {

// NaN and infinity have no JSON literal; they are written as strings.
inline json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline double to_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(Errc::InvalidArgument, "bad number '" + s + "'");
  }
  return j.get<double>();
}

inline std::vector<double> to_nums(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(to_num(x));
  return v;
}

}  // namespace detail

inline json segment_to_json(const WvnSegment& s) {
  return {{"x0", s.x0},         {"x1", s.x1},
          {"b", s.b},           {"lambda", s.lambda},
          {"amplitude", s.amplitude}, {"phase", s.phase},
          {"decay_exp", s.decay_exp}, {"ramp_width", s.ramp_width},
          {"map_mode", to_string(s.map_mode)}};
}

inline WvnSegment segment_from_json(const json& j) {
  WvnSegment s;
  s.x0 = j.at("x0").get<double>();
  s.x1 = j.at("x1").get<double>();
  s.b = j.at("b").get<double>();
  s.lambda = j.at("lambda").get<double>();
  s.amplitude = j.at("amplitude").get<double>();
  s.phase = j.at("phase").get<double>();
  s.decay_exp = j.at("decay_exp").get<double>();
  s.ramp_width = j.at("ramp_width").get<double>();
  s.map_mode = map_mode_from_string(j.at("map_mode").get<std::string>());
  return s;
}

inline json diagnostics_to_json(const BlockDiagnostics& d) {
  json off = json::object();
  for (const auto& [mu, f] : d.offspectrum_factors) off[std::to_string(mu)] = detail::num(f);
  return {{"achieved_angle_error", detail::num(d.achieved_angle_error)},
          {"decay_ratio", detail::num(d.decay_ratio)},
          {"decay_bound", detail::num(d.decay_bound)},
          {"inblock_sup_factor", detail::num(d.inblock_sup_factor)},
          {"offspectrum_factors", off},
          {"threshold_used", d.threshold_used},
          {"factor_bound", d.factor_bound},
          {"c_ramp", d.c_ramp},
          {"certified", d.certified}};
}

inline json plan_to_json(const ConstructionPlan& p) {
  json j{{"eigenvalues", p.eigenvalues},
         {"K0", p.K0},
         {"n", p.n},
         {"mode", to_string(p.mode)},
         {"a", p.a},
         {"k_max", p.k_max},
         {"N", p.N},
         {"C", p.C},
         {"T", p.T},
         {"J", p.J},
         {"rho", p.rho},
         {"support_start", p.support_start},
         {"start_point", p.start_point},
         {"min_offset", p.min_offset},
         {"ramp_width", p.ramp_width},
         {"E0", p.E0()},
         {"admitted", p.admitted_count()},
         {"budget_too_tight", p.budget_too_tight},
         {"contraction_target_met", p.contraction_target_met},
         {"warnings", p.warnings}};
  if (p.budget) {
    j["budget"] = {{"family", to_string(p.budget->family)}, {"c", p.budget->c}, {"alpha", p.budget->alpha}};
  }
  if (!p.boundary_angles.empty()) j["boundary_angles"] = p.boundary_angles;
  return j;
}

inline ConstructionPlan plan_from_json(const json& j) {
  ConstructionPlan p;
  p.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  p.K0 = j.at("K0").get<double>();
  p.n = j.at("n").get<int>();
  p.mode = mode_from_string(j.at("mode").get<std::string>());
  p.a = j.at("a").get<double>();
  p.k_max = j.at("k_max").get<int>();
  p.N = j.at("N").get<std::vector<int>>();
  p.C = j.at("C").get<std::vector<double>>();
  p.T = j.at("T").get<std::vector<double>>();
  p.J = j.at("J").get<std::vector<double>>();
  p.rho = j.at("rho").get<std::vector<double>>();
  p.support_start = j.at("support_start").get<double>();
  p.start_point = j.at("start_point").get<double>();
  p.min_offset = j.at("min_offset").get<double>();
  p.ramp_width = j.at("ramp_width").get<double>();
  p.budget_too_tight = j.at("budget_too_tight").get<bool>();
  p.contraction_target_met = j.at("contraction_target_met").get<bool>();
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("budget")) {
    Budget b;
    b.family = budget_family_from_string(j["budget"].at("family").get<std::string>());
    b.c = j["budget"].at("c").get<double>();
    b.alpha = j["budget"].at("alpha").get<double>();
    p.budget = b;
  }
  if (j.contains("boundary_angles")) p.boundary_angles = j.at("boundary_angles").get<std::vector<double>>();
  const auto K = static_cast<std::size_t>(p.k_max) + 1;
  if (p.N.size() != K || p.C.size() != K || p.T.size() != K || p.J.size() != K || p.rho.size() != K) {
    throw Error(Errc::InconsistentPlan, "plan sequences must have k_max + 1 entries");
  }
  return p;
}

inline json potential_to_json(const Assembly& a) {
  json segs = json::array();
  for (const auto& s : a.potential.segments) segs.push_back(segment_to_json(s));
  json blocks = json::array();
  for (const auto& b : a.blocks) {
    blocks.push_back({{"step", b.step},
                      {"t", b.t},
                      {"target", b.target},
                      {"theta0", b.theta0},
                      {"measured_angle", b.measured_angle},
                      {"C_block", b.C_block},
                      {"segment", segment_to_json(b.segment)},
                      {"diagnostics", diagnostics_to_json(b.diagnostics)}});
  }
  return {{"support_start", a.potential.support_start},
          {"map_mode", to_string(a.potential.map.mode)},
          {"K0", a.potential.map.K0},
          {"n", a.potential.map.n},
          {"offset_doublings", a.offset_doublings},
          {"segments", segs},
          {"blocks", blocks}};
}

/// Restores the potential and the block records (diagnostics are not read back).
inline void potential_from_json(const json& j, PiecewisePotential& pot, std::vector<BlockRecord>& blocks) {
  pot.support_start = j.at("support_start").get<double>();
  pot.map.mode = map_mode_from_string(j.at("map_mode").get<std::string>());
  pot.map.K0 = j.at("K0").get<double>();
  pot.map.n = j.at("n").get<int>();
  pot.segments.clear();
  for (const auto& s : j.at("segments")) pot.segments.push_back(segment_from_json(s));
  blocks.clear();
  for (const auto& b : j.at("blocks")) {
    BlockRecord r;
    r.step = b.at("step").get<int>();
    r.t = b.at("t").get<int>();
    r.target = b.at("target").get<std::size_t>();
    r.theta0 = b.at("theta0").get<double>();
    r.measured_angle = b.at("measured_angle").get<double>();
    r.C_block = b.at("C_block").get<double>();
    r.segment = segment_from_json(b.at("segment"));
    blocks.push_back(r);
  }
  for (std::size_t i = 1; i < pot.segments.size(); ++i) {
    if (pot.segments[i].x0 < pot.segments[i - 1].x1) throw Error(Errc::InconsistentPlan, "segments overlap");
  }
}

inline json ledger_to_json(const EigenLedger& l) {
  json recs = json::array();
  for (const auto& r : l.records) {
    recs.push_back({{"lambda", r.lambda},
                    {"start_angle", r.start_angle},
                    {"admitted_at_step", r.admitted_at_step},
                    {"junction_points", r.junction_points},
                    {"junction_norms", detail::nums(r.junction_norms)},
                    {"junction_angles", detail::nums(r.junction_angles)}});
  }
  return {{"start_point", l.start_point}, {"records", recs}};
}

inline EigenLedger ledger_from_json(const json& j) {
  EigenLedger l;
  l.start_point = j.at("start_point").get<double>();
  for (const auto& r : j.at("records")) {
    EigenRecord rec;
    rec.lambda = r.at("lambda").get<double>();
    rec.start_angle = r.at("start_angle").get<double>();
    rec.admitted_at_step = r.at("admitted_at_step").get<int>();
    rec.junction_points = r.at("junction_points").get<std::vector<double>>();
    rec.junction_norms = detail::to_nums(r.at("junction_norms"));
    rec.junction_angles = detail::to_nums(r.at("junction_angles"));
    if (rec.junction_angles.size() != rec.junction_norms.size()) {
      throw Error(Errc::InvalidArgument, "ledger record with mismatched arrays");
    }
    l.records.push_back(rec);
  }
  return l;
}

inline json l2_to_json(const L2Report& r) {
  return {{"contributions", detail::nums(r.contributions)},
          {"partial_norms", detail::nums(r.partial_norms)},
          {"ratios", detail::nums(r.ratios)}};
}

inline json probe_to_json(const ProbeSpectrum& s) {
  json eig = json::array();
  for (const auto& e : s.eigen) eig.push_back({{"energy", e.energy}, {"mass", e.mass}});
  return {{"X", s.X}, {"h_grid", s.h_grid}, {"window", {s.window_lo, s.window_hi}}, {"eigen", eig}};
}

inline json report_to_json(const VerificationReport& r, const ConstructionPlan& plan) {
  using detail::num;
  json j;
  j["pass"] = r.pass;
  j["mode"] = to_string(plan.mode);
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"step", b.step},
                      {"t", b.t},
                      {"lambda", b.lambda},
                      {"angle_chain_error", num(b.angle_chain_error)},
                      {"bound_form_ratio", num(b.bound_form_ratio)},
                      {"diagnostics", diagnostics_to_json(b.diagnostics)},
                      {"pass", b.pass}});
  }
  j["contract_certificates"] = {{"blocks", blocks}, {"pass", r.blocks_pass}};
  j["ledger"] = {{"consistent", r.ledger_consistent}, {"max_rel_diff", num(r.ledger_max_rel_diff)}};
  json contraction = json::array();
  for (const auto& c : r.contraction) {
    contraction.push_back({{"lambda", c.lambda},
                           {"admitted_at_step", c.admitted_at_step},
                           {"ratios", detail::nums(c.ratios)},
                           {"targets", detail::nums(c.targets)},
                           {"worst_ratio", num(c.worst_ratio)},
                           {"pass", c.pass}});
  }
  j["ledger_contraction"] = {{"eigenvalues", contraction}, {"pass", r.contraction_pass}};
  json l2 = json::array();
  for (std::size_t i = 0; i < r.l2.size(); ++i) {
    json e = l2_to_json(r.l2[i]);
    e["lambda"] = plan.eigenvalues[i];
    e["certified"] = r.l2_certified[i];
    if (i < r.l2_left.size()) e["left_half"] = l2_to_json(r.l2_left[i]);
    l2.push_back(e);
  }
  j["l2_tail"] = {{"eigenvalues", l2}, {"pass", r.l2_pass}, {"sphere_area_omitted", true}};
  json junc = json::array();
  for (const auto& c : r.junctions) {
    junc.push_back({{"lambda", c.lambda},
                    {"value_error", num(c.value_error)},
                    {"derivative_error", num(c.derivative_error)},
                    {"pass", c.pass}});
  }
  j["junction_continuity"] = {{"eigenvalues", junc}, {"pass", r.junction_pass}};
  json curv{{"quantity", is_manifold(plan.mode) ? "r|K+K0|" : "r|q-E0|"},
            {"sup", num(r.curvature.sup_rK)},
            {"argmax", r.curvature.argmax_rK},
            {"running_sup", detail::nums(r.curvature.running_sup)},
            {"sup_variation_last_step", num(r.sup_variation)},
            {"stability_applicable", r.stability_applicable},
            {"stable", r.sup_stable},
            {"samples", r.curvature.samples},
            {"pass", r.budget_pass}};
  if (r.curvature.sup_budget_ratio) {
    curv["sup_budget_ratio"] = num(*r.curvature.sup_budget_ratio);
    curv["argmax_budget_ratio"] = r.curvature.argmax_budget_ratio;
  }
  j["curvature_budget"] = curv;
  j["q_envelope"] = {{"sup", num(r.curvature.q_envelope.sup)}, {"argmax", r.curvature.q_envelope.argmax}};
  json off = json::array();
  for (const auto& o : r.offspectrum) {
    off.push_back({{"energy", o.energy},
                   {"factor", num(o.factor)},
                   {"growth_exponent", num(o.growth_exponent)},
                   {"superlinear", o.superlinear},
                   {"pass", o.pass}});
  }
  j["offspectrum"] = {{"energies", off}, {"pass", r.offspectrum_pass}};
  if (r.evenness_max_diff) j["whole_line"] = {{"evenness_max_diff", *r.evenness_max_diff}, {"pass", r.evenness_pass}};
  json probe = json::array();
  for (const auto& p : r.probe) {
    json e{{"lambda", p.lambda}, {"spectrum", probe_to_json(p.spectrum)}, {"shift_under_1.2X", num(p.shift)}};
    if (p.stretched) e["stretched"] = probe_to_json(*p.stretched);
    probe.push_back(e);
  }
  j["probe_spectrum"] = {{"heuristic", true}, {"gates_pass", false}, {"runs", probe}};
  j["plan_flags"] = {{"budget_too_tight", plan.budget_too_tight},
                     {"contraction_target_met", plan.contraction_target_met},
                     {"admitted", plan.admitted_count()}};
  return j;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifact, "missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MissingArtifact, "unreadable artifact " + path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Comma-separated table with a header row; doubles printed with %.17g.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(Errc::InvalidArgument, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      out_ << (i ? "," : "") << buf;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace spectral_forge
