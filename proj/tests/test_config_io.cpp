#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "spectral_forge/config.hpp"
#include "spectral_forge/io.hpp"
#include "support.hpp"

namespace sf = spectral_forge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class Fn>
sf::Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const sf::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return sf::Errc::InvalidArgument;
}

json base() { return json{{"eigenvalues", {1.0, 2.0}}, {"mode", "manifold_finite"}, {"K0", 0.0}, {"n", 3}}; }

sf::Errc parse_code(const json& j) {
  return code_of([&] { sf::parse_config(j); });
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sf_test_io_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p / name;
}

}  // namespace

TEST(Config, Defaults) {
  const sf::RunConfig c = sf::parse_config(base());
  EXPECT_EQ(c.request.mode, sf::Mode::manifold_finite);
  EXPECT_DOUBLE_EQ(c.request.a, 4.0);
  EXPECT_EQ(c.request.k_max, 3);
  EXPECT_EQ(c.resolution, 2000);
  EXPECT_DOUBLE_EQ(c.block.slack, 0.05);
  EXPECT_DOUBLE_EQ(c.verify.ledger_rel_tol, 1e-9);
}

TEST(Config, Rejections) {
  json j = base();
  j["colour"] = 1;
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["mode"] = "manifold_countable";
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);  // no budget
  j["budget"] = {{"family", "constant"}, {"c", 1.0}};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);  // does not grow
  j["budget"] = {{"family", "power"}, {"c", 1.0}, {"alpha", 1.5}};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j["budget"] = {{"family", "log"}, {"c", 1.0}, {"shape", 2}};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["budget"] = {{"family", "log"}, {"c", 1.0}};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);  // finite mode
  j = base();
  j["boundary_angles"] = {0.0, 0.0};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["mode"] = "schrodinger_halfline";
  j["boundary_angles"] = {0.0};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["eigenvalues"] = {1.0, 1.0};
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["eigenvalues"] = json::array();
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["eigenvalues"] = "one";
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["mode"] = "torus";
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["resolution"] = 1;
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  j = base();
  j["n"] = 1;
  EXPECT_EQ(parse_code(j), sf::Errc::ConfigInvalid);
  EXPECT_EQ(code_of([] { sf::load_config("/nonexistent/cfg.json"); }), sf::Errc::ConfigInvalid);
}

TEST(Config, RoundTrip) {
  json j = base();
  j["mode"] = "manifold_countable";
  j["eigenvalues"] = {1.0, 2.0, 3.0};
  j["budget"] = {{"family", "log"}, {"c", 1.5}};
  j["overrides"] = {{"forced_C", {100.0, 2.0}}, {"min_offset", 100.0}};
  j["tolerances"] = {{"junction", 1e-9}};
  j["probe"] = {{"enabled", false}};
  const sf::RunConfig a = sf::parse_config(j);
  const json once = sf::config_to_json(a);
  const json twice = sf::config_to_json(sf::parse_config(once));
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once.at("budget").at("family"), "log");
  EXPECT_EQ(once.at("tolerances").at("junction"), 1e-9);
  EXPECT_FALSE(once.at("probe").at("enabled").get<bool>());
}

TEST(Json, NonFiniteNumbersAsStrings) {
  EXPECT_EQ(sf::detail::num(std::nan("")), "nan");
  EXPECT_EQ(sf::detail::num(INFINITY), "inf");
  EXPECT_TRUE(std::isnan(sf::detail::to_num("nan")));
  EXPECT_EQ(sf::detail::to_num("-inf"), -INFINITY);
  EXPECT_EQ(code_of([] { sf::detail::to_num("many"); }), sf::Errc::InvalidArgument);
}

TEST(Json, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 4712.388980384689, 1e-300, -2.5e17}) {
    EXPECT_EQ(json::parse(json(v).dump()).get<double>(), v);
  }
}

TEST(Artifacts, PlanRoundTrip) {
  const sf::ConstructionPlan& p = sf_test::two_energy_assembly().plan;
  const sf::ConstructionPlan q = sf::plan_from_json(json::parse(sf::plan_to_json(p).dump()));
  EXPECT_EQ(q.eigenvalues, p.eigenvalues);
  EXPECT_EQ(q.N, p.N);
  EXPECT_EQ(q.T, p.T);
  EXPECT_EQ(q.J, p.J);
  EXPECT_EQ(q.rho, p.rho);
  EXPECT_EQ(q.mode, p.mode);
  EXPECT_EQ(q.boundary_angles, p.boundary_angles);
  EXPECT_EQ(q.min_offset, p.min_offset);
}

TEST(Artifacts, PotentialAndLedgerRoundTrip) {
  const sf::Assembly& as = sf_test::two_energy_assembly();
  sf::PiecewisePotential pot;
  std::vector<sf::BlockRecord> blocks;
  sf::potential_from_json(json::parse(sf::potential_to_json(as).dump()), pot, blocks);
  ASSERT_EQ(pot.segments.size(), as.potential.segments.size());
  for (std::size_t i = 0; i < pot.segments.size(); ++i) {
    EXPECT_EQ(pot.segments[i].phase, as.potential.segments[i].phase);
    EXPECT_EQ(pot.segments[i].amplitude, as.potential.segments[i].amplitude);
    EXPECT_EQ(blocks[i].theta0, as.blocks[i].theta0);
    EXPECT_EQ(blocks[i].C_block, as.blocks[i].C_block);
  }
  const sf::EigenLedger l = sf::ledger_from_json(json::parse(sf::ledger_to_json(as.ledger).dump()));
  EXPECT_EQ(sf::ledger_max_rel_diff(l, as.ledger), 0.0);
}

TEST(Artifacts, OverlappingSegmentsRejected) {
  json j = sf::potential_to_json(sf_test::two_energy_assembly());
  j["segments"][1]["x0"] = j["segments"][0]["x1"].get<double>() - 1.0;
  sf::PiecewisePotential pot;
  std::vector<sf::BlockRecord> blocks;
  EXPECT_EQ(code_of([&] { sf::potential_from_json(j, pot, blocks); }), sf::Errc::InconsistentPlan);
}

TEST(Artifacts, MissingFile) {
  EXPECT_EQ(code_of([] { sf::read_json_file("/nonexistent/plan.json"); }), sf::Errc::MissingArtifact);
}

TEST(Csv, SeventeenDigits) {
  const fs::path p = scratch("t.csv");
  {
    sf::CsvWriter w(p, {"a", "b"});
    w.row({0.1, 1.0 / 3.0});
  }
  std::ifstream in(p);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "a,b");
  const auto comma = row.find(',');
  EXPECT_EQ(std::stod(row.substr(0, comma)), 0.1);
  EXPECT_EQ(std::stod(row.substr(comma + 1)), 1.0 / 3.0);
  fs::remove_all(p.parent_path());
}
