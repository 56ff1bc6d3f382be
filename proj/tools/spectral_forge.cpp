// spectral_forge: plan, build, verify and export embedded-eigenvalue
// constructions from a JSON config.
//
//   spectral_forge run --config cfg.json --out DIR
//   spectral_forge plan|build|verify|export|probe --out DIR [--config cfg.json]
//
// exit codes: 0 pass, 2 contract failure, 3 input error

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spectral_forge/pipeline.hpp"

namespace sf = spectral_forge;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kContractFailure = 2;
constexpr int kInputError = 3;

int exit_code_for(sf::Errc code) {
  switch (code) {
    case sf::Errc::ConfigInvalid:
    case sf::Errc::MissingArtifact:
    case sf::Errc::InvalidArgument:
    case sf::Errc::EmptySpectrum:
    case sf::Errc::DegenerateEnergies:
    case sf::Errc::NonPositiveLambda:
    case sf::Errc::BadDimension:
    case sf::Errc::NonNeumannAngles:
      return kInputError;
    default:
      return kContractFailure;
  }
}

struct Options {
  std::string stage;
  std::string config;
  std::string out = "out";
  int resolution = 0;
  std::string plots;
};

void print_summary(const sf::VerificationReport& r) {
  auto flag = [](bool ok) { return ok ? "ok" : "FAIL"; };
  std::printf("blocks %s | ledger %s/%s | l2 %s | junction %s | budget %s | stable %s | offspectrum %s | %s\n",
              flag(r.blocks_pass), flag(r.ledger_consistent), flag(r.contraction_pass), flag(r.l2_pass),
              flag(r.junction_pass), flag(r.budget_pass), flag(r.sup_stable), flag(r.offspectrum_pass),
              r.pass ? "PASS" : "FAIL");
}

int verify_and_report(const fs::path& dir, const sf::RunConfig& cfg, const sf::BuildArtifact& b) {
  const sf::VerificationReport r = sf::stage_verify(cfg, b);
  sf::write_json_file(dir / "report.json", sf::report_to_json(r, b.plan));
  print_summary(r);
  return r.pass ? kPass : kContractFailure;
}

int run_stage(const Options& o) {
  const fs::path dir = o.out;
  fs::create_directories(dir);
  auto config_from_args = [&] {
    if (o.config.empty()) throw sf::Error(sf::Errc::ConfigInvalid, "--config is required for this stage");
    return sf::load_config(o.config);
  };
  auto apply_flags = [&](sf::RunConfig& cfg) {
    if (o.resolution > 0) cfg.resolution = o.resolution;
    if (!o.plots.empty()) cfg.plots = o.plots == "on";
  };

  if (o.stage == "plan" || o.stage == "run") {
    sf::RunConfig cfg = config_from_args();
    apply_flags(cfg);
    const sf::PlanArtifact plan = sf::stage_plan(cfg);
    sf::write_json_file(dir / "plan.json", sf::plan_artifact_json(plan));
    for (const auto& w : plan.plan.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (o.stage == "plan") return kPass;
  }
  if (o.stage == "build" || o.stage == "run") {
    sf::PlanArtifact plan = sf::load_plan_artifact(dir);
    if (!o.config.empty() && o.stage == "build") plan.config = config_from_args();
    const sf::Assembly as = sf::stage_build(plan);
    sf::write_build(dir, plan, as);
    std::printf("built %zu blocks up to R_max = %.6g (offset doublings %d)\n", as.blocks.size(), as.plan.R_max(),
                as.offset_doublings);
    if (o.stage == "build") return kPass;
  }
  const sf::BuildArtifact build = sf::load_build(dir);
  sf::RunConfig cfg = sf::load_plan_artifact(dir).config;
  apply_flags(cfg);
  if (o.stage == "verify") return verify_and_report(dir, cfg, build);
  if (o.stage == "export") {
    sf::stage_export(dir, build, cfg.resolution, cfg.plots);
    return kPass;
  }
  if (o.stage == "probe") {
    for (const auto& r : sf::stage_probe(dir, cfg, build)) {
      const sf::ProbeEigen e = sf::nearest_localized(r.spectrum, r.lambda);
      std::printf("lambda %.6g: probe %.9g (mass %.6f, shift under 1.2X %.3g)\n", r.lambda, e.energy, e.mass, r.shift);
    }
    return kPass;
  }
  // run: verify, then export
  const int code = verify_and_report(dir, cfg, build);
  sf::stage_export(dir, build, cfg.resolution, cfg.plots);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Construct and certify embedded eigenvalues for radial Schroedinger operators"};
  Options o;
  app.add_option("stage_name", o.stage, "run | plan | build | verify | export | probe");
  app.add_option("--stage", o.stage, "stage to execute (alternative to the positional name)");
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--resolution", o.resolution, "rows in exported CSV tables")->check(CLI::PositiveNumber);
  app.add_option("--plots", o.plots, "emit SVG plots")->check(CLI::IsMember({"on", "off"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }
  if (o.stage.empty()) o.stage = "run";
  if (o.stage != "run" && o.stage != "plan" && o.stage != "build" && o.stage != "verify" && o.stage != "export" &&
      o.stage != "probe") {
    std::cerr << "unknown stage '" << o.stage << "'\n";
    return kInputError;
  }
  try {
    return run_stage(o);
  } catch (const sf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kContractFailure;
  }
}
