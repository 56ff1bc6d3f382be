#pragma once

// Run configuration: strict JSON schema, validated against the mode.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectral_forge/error.hpp"
#include "spectral_forge/schedule.hpp"
#include "spectral_forge/verify.hpp"

namespace spectral_forge {

struct RunConfig {
  PlanRequest request;
  BlockParams block;
  int max_doublings = 3;
  VerifyOptions verify;
  int resolution = 2000;
  bool plots = true;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(Errc::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::read;
  RunConfig cfg;
  PlanRequest& r = cfg.request;
  try {
    detail::reject_unknown(j,
                           {"eigenvalues", "K0", "n", "mode", "a", "k_max", "budget", "boundary_angles", "overrides",
                            "block", "tolerances", "offspectrum_energies", "resolution", "sweep_step", "probe", "plots"},
                           "config");
    if (!j.contains("eigenvalues")) throw Error(Errc::ConfigInvalid, "missing 'eigenvalues'");
    if (!j.contains("mode")) throw Error(Errc::ConfigInvalid, "missing 'mode'");
    r.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    read(j, "K0", r.K0);
    read(j, "n", r.n);
    read(j, "a", r.a);
    read(j, "k_max", r.k_max);
    read(j, "boundary_angles", r.boundary_angles);
    if (j.contains("budget") && !j.at("budget").is_null()) {
      const auto& b = j.at("budget");
      detail::reject_unknown(b, {"family", "c", "alpha"}, "budget");
      Budget budget;
      if (!b.contains("family")) throw Error(Errc::ConfigInvalid, "budget needs a 'family'");
      budget.family = budget_family_from_string(b.at("family").get<std::string>());
      read(b, "c", budget.c);
      read(b, "alpha", budget.alpha);
      r.budget = budget;
    }
    if (j.contains("overrides")) {
      const auto& o = j.at("overrides");
      detail::reject_unknown(o, {"C_min", "forced_C", "min_offset", "N"}, "overrides");
      read(o, "C_min", r.overrides.C_min);
      read(o, "forced_C", r.overrides.forced_C);
      read(o, "min_offset", r.overrides.min_offset);
      read(o, "N", r.overrides.N);
    }
    if (j.contains("block")) {
      const auto& b = j.at("block");
      detail::reject_unknown(b, {"ramp_width", "slack", "max_doublings", "separation_min", "phase_scan_points"},
                             "block");
      read(b, "ramp_width", r.overrides.ramp_width);
      read(b, "slack", cfg.block.slack);
      read(b, "max_doublings", cfg.max_doublings);
      read(b, "separation_min", cfg.block.separation_min);
      read(b, "phase_scan_points", cfg.block.phase_scan_points);
    }
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      detail::reject_unknown(t, {"ledger_rel", "junction", "angle_chain", "sup_stability", "offspectrum_factor"},
                             "tolerances");
      read(t, "ledger_rel", cfg.verify.ledger_rel_tol);
      read(t, "junction", cfg.verify.junction_tol);
      read(t, "angle_chain", cfg.verify.angle_tol);
      read(t, "sup_stability", cfg.verify.sup_stability);
      read(t, "offspectrum_factor", cfg.verify.offspectrum_factor);
    }
    read(j, "offspectrum_energies", cfg.verify.offspectrum_energies);
    read(j, "resolution", cfg.resolution);
    read(j, "sweep_step", cfg.verify.sweep_step);
    if (j.contains("probe")) {
      const auto& p = j.at("probe");
      detail::reject_unknown(p, {"enabled", "X", "h_grid", "window"}, "probe");
      read(p, "enabled", cfg.verify.probe.enabled);
      read(p, "X", cfg.verify.probe.X);
      read(p, "h_grid", cfg.verify.probe.h_grid);
      read(p, "window", cfg.verify.probe.window);
    }
    read(j, "plots", cfg.plots);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    throw Error(Errc::ConfigInvalid, e.what());
  }
  cfg.block.ramp_width = r.overrides.ramp_width;

  const auto bad = [](const std::string& m) { throw Error(Errc::ConfigInvalid, m); };
  if (r.eigenvalues.empty()) bad("'eigenvalues' must not be empty");
  for (double l : r.eigenvalues) {
    if (!(l > 0.0) || !std::isfinite(l)) bad("eigenvalues must be positive and finite");
  }
  if (std::set<double>(r.eigenvalues.begin(), r.eigenvalues.end()).size() != r.eigenvalues.size()) {
    bad("eigenvalues must be distinct");
  }
  if (r.n < 2) bad("'n' must be at least 2");
  if (!(r.K0 >= 0.0)) bad("'K0' must be non-negative");
  if (!(r.a >= 0.0)) bad("'a' must be non-negative");
  if (r.k_max < 2) bad("'k_max' must be at least 2");
  if (r.mode == Mode::manifold_countable) {
    if (!r.budget) bad("countable mode needs a 'budget'");
    if (r.budget->family == Budget::Family::power && !(r.budget->alpha > 0.0 && r.budget->alpha < 1.0)) {
      bad("power budget needs 0 < alpha < 1");
    }
    if (r.budget->family == Budget::Family::constant) bad("countable mode needs a budget growing to infinity");
    if (!(r.budget->c > 0.0)) bad("budget constant must be positive");
  } else if (r.budget) {
    bad("'budget' is only meaningful in manifold_countable mode");
  }
  const bool pure = !is_manifold(r.mode);
  if (pure && r.boundary_angles.size() != r.eigenvalues.size()) {
    bad("pure Schroedinger modes need one boundary angle per eigenvalue");
  }
  if (!pure && !r.boundary_angles.empty()) bad("manifold modes derive boundary angles from the origin");
  if (cfg.resolution < 2) bad("'resolution' must be at least 2");
  if (!(cfg.verify.sweep_step > 0.0)) bad("'sweep_step' must be positive");
  if (!(r.overrides.ramp_width > 0.0)) bad("ramp_width must be positive");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigInvalid, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  const PlanRequest& r = cfg.request;
  nlohmann::json j;
  j["eigenvalues"] = r.eigenvalues;
  j["K0"] = r.K0;
  j["n"] = r.n;
  j["mode"] = to_string(r.mode);
  j["a"] = r.a;
  j["k_max"] = r.k_max;
  if (r.budget) j["budget"] = {{"family", to_string(r.budget->family)}, {"c", r.budget->c}, {"alpha", r.budget->alpha}};
  if (!r.boundary_angles.empty()) j["boundary_angles"] = r.boundary_angles;
  j["overrides"] = {{"C_min", r.overrides.C_min},
                    {"forced_C", r.overrides.forced_C},
                    {"min_offset", r.overrides.min_offset},
                    {"N", r.overrides.N}};
  j["block"] = {{"ramp_width", r.overrides.ramp_width},
                {"slack", cfg.block.slack},
                {"max_doublings", cfg.max_doublings},
                {"separation_min", cfg.block.separation_min},
                {"phase_scan_points", cfg.block.phase_scan_points}};
  j["tolerances"] = {{"ledger_rel", cfg.verify.ledger_rel_tol},
                     {"junction", cfg.verify.junction_tol},
                     {"angle_chain", cfg.verify.angle_tol},
                     {"sup_stability", cfg.verify.sup_stability},
                     {"offspectrum_factor", cfg.verify.offspectrum_factor}};
  if (!cfg.verify.offspectrum_energies.empty()) j["offspectrum_energies"] = cfg.verify.offspectrum_energies;
  j["resolution"] = cfg.resolution;
  j["sweep_step"] = cfg.verify.sweep_step;
  j["probe"] = {{"enabled", cfg.verify.probe.enabled},
                {"X", cfg.verify.probe.X},
                {"h_grid", cfg.verify.probe.h_grid},
                {"window", cfg.verify.probe.window}};
  j["plots"] = cfg.plots;
  return j;
}

}  // namespace spectral_forge
