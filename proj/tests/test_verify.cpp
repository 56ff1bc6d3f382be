#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "spectral_forge/verify.hpp"
#include "support.hpp"

namespace sf = spectral_forge;
using std::numbers::pi;

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

sf::VerifyOptions quick() {
  sf::VerifyOptions o;
  o.probe.enabled = false;
  return o;
}

}  // namespace

TEST(Contraction, Examples) {
  const sf::ContractionCertificate ok = sf::check_contraction({1, 0.4, 0.15, 0.05}, 0.5);
  EXPECT_TRUE(ok.pass);
  EXPECT_NEAR(ok.worst_ratio, 0.4, 1e-15);
  EXPECT_FALSE(sf::check_contraction({1, 0.6}, 0.5).pass);
  // ratios before the first checked index are ignored
  EXPECT_TRUE(sf::check_contraction({1, 0.9, 0.3}, 0.5, 1).pass);
}

TEST(Contraction, SingleEigenvalueRun) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  const auto certs = sf::check_decay_ledger(as.ledger, as.plan);
  ASSERT_EQ(certs.size(), 1u);
  EXPECT_TRUE(certs[0].pass);
  EXPECT_EQ(certs[0].ratios.size(), 2u);
  EXPECT_LE(certs[0].worst_ratio, 0.5);
}

TEST(Offspectrum, FreePotentialIsIsometric) {
  sf::PiecewisePotential free;
  free.map = {sf::MapMode::direct, 0.0, 2};
  for (const auto& r : sf::check_offspectrum(free, {0.3, 1.0, 2.7}, {5.0}, 0.0, 200.0, {50.0, 100.0, 200.0})) {
    EXPECT_NEAR(r.factor, 1.0, 1e-8);
    EXPECT_NEAR(r.growth_exponent, 0.0, 1e-8);
    EXPECT_TRUE(r.pass);
  }
}

TEST(Offspectrum, BoundedAwayFromEmbedded) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  const std::vector<double> junctions(as.plan.J.begin() + 1, as.plan.J.end());
  const auto res = sf::check_offspectrum(as.potential, {2.0}, {1.0}, 0.0, as.plan.R_max(), junctions);
  EXPECT_LE(res[0].factor, 3.0);
  EXPECT_FALSE(res[0].superlinear);
}

TEST(Offspectrum, RejectsEmbeddedEnergy) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  EXPECT_EQ(code_of([&] { sf::check_offspectrum(as.potential, {1.0}, {1.0}, 0.0, 100.0, {100.0}); }),
            sf::Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { sf::check_offspectrum(as.potential, {1.01}, {1.0}, 0.0, 100.0, {100.0}); }),
            sf::Errc::InvalidArgument);
}

TEST(Offspectrum, DefaultEnergies) {
  const std::vector<double> e = sf::default_offspectrum_energies({2.0, 1.0});
  ASSERT_EQ(e.size(), 3u);
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_DOUBLE_EQ(e[1], 1.5);
  EXPECT_DOUBLE_EQ(e[2], 3.0);
  EXPECT_DOUBLE_EQ(sf::offspectrum_separation({1.0, 1.4, 3.0}), 0.05 * 0.4);
}

TEST(Envelope, FreeRegionAndDomain) {
  const auto zero = [](double) { return 0.0; };
  EXPECT_EQ(sf::check_q_envelope(zero, {3.0, 10.0, 100.0}).sup, 0.0);
  const sf::EnvelopeResult r = sf::check_q_envelope([](double x) { return std::log(x) / x; }, {3.0, 10.0, 100.0});
  EXPECT_NEAR(r.sup, 1.0, 1e-14);
  EXPECT_EQ(code_of([&] { sf::check_q_envelope(zero, {2.0}); }), sf::Errc::InvalidArgument);
}

TEST(Sweep, RunningSupIsMonotone) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  const std::vector<double> junctions(as.plan.J.begin() + 1, as.plan.J.end());
  const sf::CurvatureSweep s = sf::curvature_sweep(as.plan, as.potential, 1.0, as.plan.R_max(), 0.05, junctions);
  ASSERT_EQ(s.running_sup.size(), junctions.size());
  EXPECT_EQ(s.running_sup[0], 0.0);  // free up to J_1
  for (std::size_t k = 1; k < s.running_sup.size(); ++k) EXPECT_GE(s.running_sup[k], s.running_sup[k - 1]);
  EXPECT_EQ(s.running_sup.back(), s.sup_rK);
  // x|q| <= C_block on every block
  double c = 0.0;
  for (const auto& b : as.blocks) c = std::max(c, b.C_block);
  EXPECT_LE(s.sup_rK, c);
}

TEST(Probe, FreeDirichletBox) {
  sf::ProbeOptions opt;
  opt.x_left = 0.0;
  opt.angle = pi / 2;
  const double L = 10.0;
  const sf::ProbeSpectrum s = sf::discrete_spectrum_probe([](double) { return 0.0; }, L, 1e-3, 0.05, 1.0, opt);
  ASSERT_EQ(s.eigen.size(), 3u);
  for (int k = 1; k <= 3; ++k) {
    const double exact = std::pow(k * pi / L, 2);
    EXPECT_NEAR(s.eigen[k - 1].energy, exact, 1e-6 * exact);
  }
}

TEST(Probe, NeumannBox) {
  // u'(0) = 0, u(L) = 0: ((k - 1/2) pi / L)^2
  sf::ProbeOptions opt;
  opt.x_left = 0.0;
  opt.angle = 0.0;
  const double L = 10.0;
  const sf::ProbeSpectrum s = sf::discrete_spectrum_probe([](double) { return 0.0; }, L, 1e-3, 0.01, 0.5, opt);
  ASSERT_EQ(s.eigen.size(), 2u);
  for (int k = 1; k <= 2; ++k) {
    const double exact = std::pow((k - 0.5) * pi / L, 2);
    EXPECT_NEAR(s.eigen[k - 1].energy, exact, 1e-5 * exact);
  }
}

TEST(Probe, Errors) {
  const auto zero = [](double) { return 0.0; };
  EXPECT_EQ(code_of([&] { sf::discrete_spectrum_probe(zero, 10.0, 1.0, 0.5, 1.0); }), sf::Errc::GridTooCoarse);
  EXPECT_EQ(code_of([&] { sf::discrete_spectrum_probe(zero, 0.5, 1e-3, 0.5, 1.0); }), sf::Errc::InvalidArgument);
}

TEST(Probe, FindsEmbeddedEigenvalueAndConverges) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  const double X = as.plan.R_max() / 1.2;
  const auto& rec = as.ledger.records[0];
  const sf::ProbeRun fine = sf::run_probe(as.plan, as.potential, rec.lambda, rec.start_angle, X, 1e-3, 0.05);
  const sf::ProbeEigen e = sf::nearest_localized(fine.spectrum, 1.0);
  ASSERT_FALSE(std::isnan(e.energy));
  EXPECT_NEAR(e.energy, 1.0, 5e-3);
  EXPECT_GE(e.mass, 0.9);
  const sf::ProbeRun coarse = sf::run_probe(as.plan, as.potential, rec.lambda, rec.start_angle, X, 2e-3, 0.05, false);
  EXPECT_LE(std::abs(sf::nearest_localized(coarse.spectrum, 1.0).energy - e.energy), 2.5e-3);
}

TEST(Report, HalflineRunPasses) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  const sf::VerificationReport r = sf::verify_construction(as.plan, as.potential, as.blocks, as.ledger, quick());
  EXPECT_TRUE(r.blocks_pass);
  EXPECT_TRUE(r.ledger_consistent);
  EXPECT_EQ(r.ledger_max_rel_diff, 0.0);
  EXPECT_TRUE(r.contraction_pass);
  EXPECT_TRUE(r.l2_pass);
  EXPECT_TRUE(r.offspectrum_pass);
  EXPECT_FALSE(r.stability_applicable);
  EXPECT_TRUE(r.pass);
}

TEST(Report, CorruptedLedgerFails) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  sf::EigenLedger bad = as.ledger;
  bad.records[0].junction_norms[1] *= 1.001;
  const sf::VerificationReport r = sf::verify_construction(as.plan, as.potential, as.blocks, bad, quick());
  EXPECT_FALSE(r.ledger_consistent);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(sf::ledger_max_rel_diff(as.ledger, bad), 1e-4);
}

TEST(Report, TamperedBlockFails) {
  const sf::Assembly& as = sf_test::halfline_assembly();
  sf::PiecewisePotential pot = as.potential;
  std::vector<sf::BlockRecord> blocks = as.blocks;
  pot.segments[0].phase += 0.3;
  blocks[0].segment.phase += 0.3;
  const sf::VerificationReport r = sf::verify_construction(as.plan, pot, blocks, as.ledger, quick());
  EXPECT_FALSE(r.pass);
}

TEST(Report, ManifoldJunction) {
  const sf::Assembly& as = sf_test::manifold_assembly();
  const sf::VerificationReport r = sf::verify_construction(as.plan, as.potential, as.blocks, as.ledger, quick());
  ASSERT_EQ(r.junctions.size(), 1u);
  EXPECT_LE(r.junctions[0].value_error, 1e-8);
  EXPECT_LE(r.junctions[0].derivative_error, 1e-8);
  EXPECT_TRUE(r.stability_applicable);
  EXPECT_TRUE(r.pass);
}

TEST(L2Tail, CertificateStartsAtAdmission) {
  sf::L2Report rep;
  rep.ratios = {0.9, 0.4, 0.3};
  EXPECT_FALSE(sf::l2_tail_certified(rep, 1));
  EXPECT_TRUE(sf::l2_tail_certified(rep, 2));
}
