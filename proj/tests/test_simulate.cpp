#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "pbdg/mc.hpp"
#include "pbdg/path.hpp"
#include "pbdg/simulate.hpp"

using namespace pbdg;

namespace {

ScenarioConfig brownian(std::size_t steps, std::uint64_t seed, std::size_t dim = 1) {
  return ScenarioConfig{Brownian{dim, 0.0}, 1.0, steps, seed};
}

std::vector<double> increments(std::span<const double> x) {
  std::vector<double> d;
  for (std::size_t k = 1; k < x.size(); ++k) d.push_back(x[k] - x[k - 1]);
  return d;
}

}  // namespace

TEST(Simulate, BrownianIsReproducible) {
  const auto cfg = brownian(256, 42);
  const auto a = gen_brownian(cfg, 3), b = gen_brownian(cfg, 3), c = gen_brownian(cfg, 4);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(Simulate, BrownianIncrementVariance) {
  const auto cfg = brownian(1000, 5);
  const double dt = 1.0 / 1000.0;
  std::vector<double> sq;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    for (double d : increments(gen_brownian(cfg, i).values())) sq.push_back(d * d);
  }
  const auto m = mean_se(sq);
  EXPECT_LE(std::abs(m.mean - dt), 5.0 * m.se);
}

TEST(Simulate, BrownianComponentsUncorrelated) {
  const auto cfg = brownian(1000, 9, 2);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  std::size_t n = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto p = gen_brownian(cfg, i);
    const auto dx = increments(p.component(0)), dy = increments(p.component(1));
    for (std::size_t k = 0; k < dx.size(); ++k) {
      sxy += dx[k] * dy[k];
      sxx += dx[k] * dx[k];
      syy += dy[k] * dy[k];
      ++n;
    }
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Simulate, BesselStaysNonnegative) {
  const ScenarioConfig cfg{Bessel{3.0, 0.0}, 1.0, 512, 1};
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto p = gen_bessel(cfg, i);
    for (double x : p.values()) ASSERT_GE(x, 0.0);
  }
}

TEST(Simulate, BesselAlphaOneMatchesAbsBrownianOracle) {
  const ScenarioConfig cfg{Bessel{1.0, 0.0}, 1.0, 512, 2};
  std::vector<double> a, b;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    a.push_back(functionals(gen_bessel(cfg, i)).runmax.back());
    b.push_back(functionals(gen_bessel_norm_oracle(cfg, i)).runmax.back());
  }
  const auto ma = mean_se(a), mb = mean_se(b);
  EXPECT_LE(std::abs(ma.mean - mb.mean), 5.0 * std::hypot(ma.se, mb.se));
}

TEST(Simulate, BesselQuadraticVariationNearX0SquaredPlusT) {
  // RMS error of [X]_T against x0^2 + T shrinks under refinement.
  auto rms = [](std::size_t steps) {
    const ScenarioConfig cfg{Bessel{2.0, 0.5}, 1.0, steps, 3};
    double s = 0.0;
    for (std::uint64_t i = 0; i < 400; ++i) {
      const double e = functionals(gen_bessel(cfg, i)).qv.back() - 1.25;
      s += e * e;
    }
    return std::sqrt(s / 400.0);
  };
  const double coarse = rms(64), fine = rms(1024);
  EXPECT_LT(fine, coarse);
  EXPECT_LT(fine, 0.2);
}

TEST(Simulate, OracleRequiresIntegerAlpha) {
  const ScenarioConfig cfg{Bessel{1.5, 0.0}, 1.0, 16, 0};
  EXPECT_THROW(gen_bessel_norm_oracle(cfg), ConfigError);
}

TEST(Simulate, ValidationRules) {
  EXPECT_THROW(validate({Bessel{0.5, 0.0}, 1.0, 16, 0}), ConfigError);
  EXPECT_THROW(validate({Brownian{}, 1.0, 1, 0}), ConfigError);
  EXPECT_THROW(validate({Brownian{}, 0.0, 16, 0}), ConfigError);
  DriftedDiffusion d;
  d.mu = 0.2;
  d.s_bound = 0.1;
  EXPECT_THROW(validate({d, 1.0, 16, 0}), ConfigError);
  d.mu = 0.1;
  d.sigma = 2.0;
  EXPECT_THROW(validate({d, 1.0, 16, 0}), ConfigError);
  d.sigma = 0.2;
  EXPECT_NO_THROW(validate({d, 1.0, 16, 0}));
}

TEST(Simulate, DriftedWithoutNoiseOrDriftIsConstant) {
  DriftedDiffusion d;
  d.sigma = 0.0;
  d.mu = 0.0;
  d.x0 = 1.0;
  const auto p = gen_drifted({d, 1.0, 100, 4}, 0);
  for (double x : p.values()) EXPECT_EQ(x, 1.0);
}

TEST(Simulate, JumpRateZeroEqualsBrownian) {
  const ScenarioConfig j{JumpDiffusion{}, 1.0, 300, 17};
  const auto b = gen_brownian(brownian(300, 17), 5);
  const auto p = gen_jump(j, 5);
  EXPECT_TRUE(std::equal(p.values().begin(), p.values().end(), b.values().begin()));
}

TEST(Simulate, JumpsAddVariation) {
  JumpDiffusion jd;
  jd.jump_rate = 5.0;
  jd.law = JumpLaw::StudentT3;
  const ScenarioConfig cfg{jd, 1.0, 500, 8};
  double jumps = 0.0, plain = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    jumps += functionals(gen_jump(cfg, i)).qv.back();
    plain += functionals(gen_brownian(brownian(500, 8), i)).qv.back();
  }
  EXPECT_GT(jumps, plain);
}

TEST(Simulate, TSquaredSinHasVanishingVariation) {
  double prev = 1e9;
  for (std::size_t steps : {64u, 256u, 1024u, 4096u}) {
    const double qv = functionals(gen_deterministic("tsquared_sin", 1.0, steps)).qv.back();
    EXPECT_LT(qv, prev);
    prev = qv;
  }
  EXPECT_LT(prev, 1e-3);
  EXPECT_THROW(gen_deterministic("nope", 1.0, 4), ConfigError);
}

TEST(Simulate, StopRules) {
  const auto p = gen_deterministic("linear", 1.0, 10);
  EXPECT_EQ(apply_stop(p, {StopAtTime{1.0}}), 10u);
  EXPECT_EQ(apply_stop(p, {HitLevelAbs{0.35}}), 4u);
  EXPECT_EQ(apply_stop(p, {HitLevelAbs{5.0}}), 10u);
  EXPECT_EQ(apply_stop(p, {MinOf{{StoppingRule{HitLevelAbs{0.8}}, StoppingRule{StopAtTime{0.5}}}}}), 5u);
  // A_t = min(t / T, 1) at u = 0.5: first time strictly after T/2.
  EXPECT_EQ(apply_stop(p, {RandomizedTime{RampKind::Linear, 1.0, 1.0}}, 0.5), 6u);
  EXPECT_EQ(apply_stop(p, {IndependentTime{TimeLaw::Fixed, 0.3}}, 0.99), 3u);
  EXPECT_EQ(apply_stop(p, {IndependentTime{TimeLaw::UniformGrid, 1.0}}, 0.999), 10u);
  EXPECT_EQ(apply_stop(p, {IndependentTime{TimeLaw::UniformGrid, 1.0}}, 0.0), 0u);
  EXPECT_EQ(apply_stop(p, {IndependentTime{TimeLaw::Exponential, 1.0}}, 0.9999), 10u);
}

TEST(Simulate, IndicatorRampReducesToFixedTime) {
  const auto cfg = brownian(64, 21);
  const auto p = gen_brownian(cfg, 0);
  const auto fixed = apply_stop(p, {StopAtTime{0.3}});
  for (double u : {0.0, 0.1, 0.5, 0.9, 0.999999}) {
    EXPECT_EQ(apply_stop(p, {RandomizedTime{RampKind::Indicator, 0.3, 1.0}}, u), fixed);
  }
}

TEST(Simulate, RandomizedAtomAtInfinityGoesToTerminal) {
  const auto p = gen_deterministic("linear", 1.0, 10);
  const RandomizedTime r{RampKind::Linear, 1.0, 0.8};
  const auto a = randomized_measure(p, r);
  EXPECT_DOUBLE_EQ(a.back(), 0.8);
  EXPECT_EQ(apply_stop(p, {r}, 0.9), 10u);
  EXPECT_THROW(randomized_measure(p, {RampKind::Linear, 1.0, 1.5}), ConfigError);
}

TEST(Simulate, RandomStepPathsCoverLawsAndStarts) {
  RandomPathSpec spec;
  spec.min_len = 2;
  spec.max_len = 40;
  std::size_t nonzero_start = 0;
  for (std::uint64_t i = 0; i < 400; ++i) {
    const auto p = random_step_path(spec, 1, i);
    ASSERT_GE(p.size(), 2u);
    ASSERT_LE(p.size(), 40u);
    nonzero_start += p.values()[0] != 0.0;
  }
  EXPECT_GT(nonzero_start, 100u);
  EXPECT_LT(nonzero_start, 300u);
  const auto a = random_step_path(spec, 1, 7), b = random_step_path(spec, 1, 7);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}
