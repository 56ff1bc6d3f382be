#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "spectral_forge/ode_adaptive.hpp"
#include "spectral_forge/ode_engine.hpp"

namespace sf = spectral_forge;
using std::numbers::pi;

namespace {

const auto zero = [](double) { return 0.0; };
const auto wvn = [](double x) { return 8.0 * std::sin(2.0 * x) / x; };

double rel(sf::StateVec a, sf::StateVec b) {
  return std::hypot(a.y - b.y, a.yp - b.yp) / std::max(1e-300, std::hypot(b.y, b.yp));
}

}  // namespace

TEST(Propagate, SineQuarterPeriod) {
  const sf::StateVec s = sf::propagate_final(zero, {0.0, 1.0}, 0.0, pi / 2, {0.0, 1.0});
  EXPECT_NEAR(s.y, 1.0, 1e-9);
  EXPECT_NEAR(s.yp, 0.0, 1e-9);
}

TEST(Propagate, FullPeriodReturns) {
  const sf::StateVec s = sf::propagate_final(zero, {0.0, 1.0}, 0.0, 2 * pi, {1.0, 0.0});
  EXPECT_NEAR(s.y, 1.0, 1e-8);
  EXPECT_NEAR(s.yp, 0.0, 1e-8);
}

TEST(Propagate, EmptyIntervalThrows) {
  try {
    sf::propagate_final(zero, {0.0, 1.0}, 3.0, 3.0, {1.0, 0.0});
    FAIL();
  } catch (const sf::Error& e) {
    EXPECT_EQ(e.code(), sf::Errc::EmptyInterval);
  }
}

TEST(Propagate, BlowUpIsNonFinite) {
  // q - E so large that the fixed step overflows
  const auto huge = [](double) { return 1e300; };
  sf::StepPolicy p{64.0, 0.5, 1};
  try {
    sf::propagate_final(huge, {0.0, 1.0}, 0.0, 100.0, {1.0, 0.0}, p);
    FAIL();
  } catch (const sf::Error& e) {
    EXPECT_EQ(e.code(), sf::Errc::NonFiniteState);
  }
}

TEST(Propagate, TrajectoryGridIncreasingBothDirections) {
  for (double to : {10.0, -10.0}) {
    const sf::Trajectory t = sf::propagate(wvn, {0.0, 2.0}, 0.0 + (to > 0 ? 1.0 : 30.0), to > 0 ? 11.0 : 20.0,
                                           {1.0, 0.0});
    ASSERT_GE(t.grid.size(), 2u);
    for (std::size_t i = 1; i < t.grid.size(); ++i) EXPECT_LT(t.grid[i - 1], t.grid[i]);
    for (std::size_t i = 0; i < t.grid.size(); ++i) EXPECT_DOUBLE_EQ(t.norms[i], sf::weighted_norm(t.states[i], 2.0));
  }
}

TEST(WeightedNorm, Examples) {
  EXPECT_DOUBLE_EQ(sf::weighted_norm({1, 0}, 4), 1.0);
  EXPECT_DOUBLE_EQ(sf::weighted_norm({0, 2}, 4), 1.0);
  EXPECT_DOUBLE_EQ(sf::weighted_norm({3, 4}, 1), 5.0);
  EXPECT_THROW(sf::weighted_norm({1, 0}, 0.0), sf::Error);
}

TEST(Prufer, Examples) {
  EXPECT_NEAR(sf::prufer_angle({1, 0}, 1), 0.0, 1e-15);
  EXPECT_NEAR(sf::prufer_angle({0, 1}, 1), pi / 2, 1e-15);
  EXPECT_NEAR(sf::prufer_angle({1, 1}, 1), pi / 4, 1e-15);
  // projective: (-1, -1) is the same line
  EXPECT_NEAR(sf::prufer_angle({-1, -1}, 1), pi / 4, 1e-15);
  try {
    sf::prufer_angle({0, 0}, 1);
    FAIL();
  } catch (const sf::Error& e) {
    EXPECT_EQ(e.code(), sf::Errc::ZeroState);
  }
}

TEST(Prufer, RoundTrip) {
  for (double th = 0.01; th < pi; th += 0.37) {
    EXPECT_NEAR(sf::prufer_angle(sf::state_from_prufer(th, 3.0), 3.0), th, 1e-14);
    EXPECT_NEAR(sf::log_derivative_angle(sf::state_from_log_angle(th)), th, 1e-14);
  }
}

TEST(Wronskian, Examples) {
  EXPECT_DOUBLE_EQ(sf::wronskian({1, 0}, {0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(sf::wronskian({2, 3}, {2, 3}), 0.0);
}

TEST(Wronskian, ConstantAlongSolutions) {
  const auto q = [](double x) { return 8.0 * std::sin(2.0 * x) / (x + 10.0); };
  const sf::EnergyShift e{0.0, 1.0};
  const sf::StateVec a = sf::propagate_final(q, e, 0.0, 100.0, {1.0, 0.0});
  const sf::StateVec b = sf::propagate_final(q, e, 0.0, 100.0, {0.0, 1.0});
  EXPECT_NEAR(sf::wronskian(a, b), 1.0, 1e-8);
}

TEST(Invariants, FreeEvolutionIsometry) {
  // q - E0 = 0 with the shift convention: weighted norm constant
  for (double lambda : {0.5, 1.0, 4.0}) {
    const sf::Trajectory t = sf::propagate(zero, {0.0, lambda}, 0.0, 100.0, {0.3, -0.7});
    const double n0 = t.norms.front();
    double drift = 0.0;
    for (double n : t.norms) drift = std::max(drift, std::abs(n - n0) / n0);
    EXPECT_LE(drift, 1e-8) << "lambda " << lambda;
  }
}

TEST(Invariants, Reversibility) {
  const sf::EnergyShift e{0.0, 1.0};
  const sf::StateVec s0{0.4, 1.3};
  const sf::StateVec fwd = sf::propagate_final(wvn, e, 40.0, 140.0, s0);
  const sf::StateVec back = sf::propagate_final(wvn, e, 140.0, 40.0, fwd);
  EXPECT_LE(rel(back, s0), 1e-7);
}

TEST(Invariants, StepHalvingOrderFour) {
  const sf::EnergyShift e{0.0, 1.0};
  auto run = [&](double h) { return sf::propagate_final(wvn, e, 40.0, 60.0, {1.0, 0.0}, {1.0, h, 1}); };
  const sf::StateVec a = run(0.1), b = run(0.05), c = run(0.025);
  const double d1 = rel(a, b), d2 = rel(b, c);
  ASSERT_GT(d2, 0.0);
  EXPECT_GE(std::log2(d1 / d2), 3.8);
}

TEST(Invariants, AgreesWithAdaptive) {
  const sf::EnergyShift e{0.0, 1.0};
  const sf::StateVec rk = sf::propagate_final(wvn, e, 40.0, 140.0, {1.0, 0.0});
  const sf::StateVec dp = sf::propagate_adaptive(wvn, e, 40.0, 140.0, {1.0, 0.0}, 1e-15, 1e-15);
  EXPECT_LE(rel(rk, dp), 1e-8);
}

TEST(Invariants, StepHalvingReproducible) {
  // at the 0.01 cap RK4 moves by ~3e-9 per 100 units when halved
  const sf::EnergyShift e{0.0, 1.0};
  auto run = [&](double h) { return sf::propagate_final(wvn, e, 40.0, 140.0, {1.0, 0.0}, {64.0, h, 1}); };
  EXPECT_LE(rel(run(0.01), run(0.005)), 1e-8);
  const auto sine = [](double h) {
    return sf::propagate_final(zero, {0.0, 1.0}, 0.0, pi / 2, {0.0, 1.0}, {64.0, h, 1});
  };
  EXPECT_LE(rel(sine(0.01), sine(0.005)), 1e-9);
}

TEST(Propagate, ResonantDecayMatchesEnvelope) {
  // decaying seed x^-2 (cos x, -sin x) at 400, integrated backward to 40
  const sf::EnergyShift e{0.0, 1.0};
  const double x1 = 400.0, x0 = 40.0;
  const sf::StateVec seed{std::pow(x1, -2) * std::cos(x1), -std::pow(x1, -2) * std::sin(x1)};
  const sf::StateVec rk = sf::propagate_final(wvn, e, x1, x0, seed);
  const sf::StateVec ref = sf::propagate_adaptive(wvn, e, x1, x0, seed, 1e-15, 1e-15);
  EXPECT_LE(rel(rk, ref), 1e-8);
  const double ratio = sf::weighted_norm(seed, 1.0) / sf::weighted_norm(ref, 1.0);
  EXPECT_GT(ratio, 0.01 / 1.5);
  EXPECT_LT(ratio, 0.01 * 1.5);
}

TEST(Transfer, OperatorNormOfRotationIsOne) {
  sf::TransferMatrix last;
  sf::integrate_transfer(zero, {0.0, 2.0}, 0.0, 17.0, sf::StepPolicy{}, [&](double, const sf::TransferMatrix& m) {
    last = m;
  });
  EXPECT_NEAR(last.operator_norm(), 1.0, 1e-9);
}

TEST(Transfer, OperatorNormExamples) {
  EXPECT_NEAR((sf::TransferMatrix{3, 0, 0, 0.5}.operator_norm()), 3.0, 1e-15);
  EXPECT_NEAR((sf::TransferMatrix{1, 2, 0, 1}.operator_norm()), 1 + std::sqrt(2.0), 1e-15);
  const double c = std::cos(0.3), s = std::sin(0.3);
  EXPECT_NEAR((sf::TransferMatrix{c, -s, s, c}.operator_norm()), 1.0, 1e-15);
}

TEST(Transfer, MatchesScalarPropagation) {
  const sf::EnergyShift e{0.0, 1.5};
  sf::TransferMatrix m;
  sf::integrate_transfer(wvn, e, 30.0, 50.0, sf::StepPolicy{}, [&](double, const sf::TransferMatrix& t) { m = t; });
  const sf::StateVec s0{0.2, -0.9};
  EXPECT_LE(rel(m.apply(s0, 1.5), sf::propagate_final(wvn, e, 30.0, 50.0, s0)), 1e-12);
}

TEST(StepPolicy, DefaultStep) {
  EXPECT_DOUBLE_EQ(sf::default_step({0.0, 1.0}, {64.0, 1.0, 1}), 2 * pi / 2.0 / 64.0);
  EXPECT_DOUBLE_EQ(sf::default_step({0.0, 1.0}, {}), 0.01);
  EXPECT_EQ(sf::step_count(1.0, 0.01, 1), 100u);
  EXPECT_EQ(sf::step_count(1.0, 0.01, 512), 512u);
}
