#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "pbdg/certify.hpp"
#include "pbdg/simulate.hpp"
#include "pbdg/suites.hpp"

using namespace pbdg;

namespace {

const std::vector<double> kX{0, 1, -1, 2};

std::vector<double> values_of(const StepPath& p) { return {p.values().begin(), p.values().end()}; }

RandomPathSpec spec(std::size_t max_len, IncrementLaw law = IncrementLaw::Mixed,
                    StartMode start = StartMode::Mixed) {
  RandomPathSpec s;
  s.max_len = max_len;
  s.law = law;
  s.start = start;
  return s;
}

}  // namespace

TEST(Certify, DavisWorkedExample) {
  const auto f = functionals(kX);
  const auto [upper, lower] = davis_certificates(kX, f);
  EXPECT_TRUE(upper.passed);
  EXPECT_TRUE(lower.passed);
  // residual_1 at k = 3: 3 * 2 + 2.63896 - sqrt(14).
  const auto hx = riemann_integral(davis(kX, f).values, kX);
  EXPECT_NEAR(3 * f.runmax[3] - hx[3] - std::sqrt(f.qv[3]), 4.8973, 5e-5);
}

TEST(Certify, ZeroPathResidualsVanish) {
  const std::vector<double> z(8, 0.0);
  const auto f = functionals(z);
  const auto yf = YoungFunction::power(2.0);
  for (const auto& pair : {davis_certificates(z, f), davis_bounds_certificates(z, f),
                           continuous_certificates(z, f, 0.0), bdg_certificates(z, f, yf),
                           hxgx_certificates(z, f, yf, 1.0), hxgx_certificates(z, f, yf, 0.5)}) {
    EXPECT_EQ(pair.first.min_residual, 0.0) << pair.first.id;
    EXPECT_EQ(pair.second.min_residual, 0.0) << pair.second.id;
    EXPECT_TRUE(pair.first.passed && pair.second.passed);
  }
  const StepPath z2({0, 1, 2}, std::vector<std::vector<double>>{{0, 0, 0}, {0, 0, 0}});
  const auto md = multidim_davis(z2);
  EXPECT_EQ(md.first.min_residual, 0.0);
  EXPECT_EQ(md.second.min_residual, 0.0);
}

TEST(Certify, DavisExactOnEveryLaw) {
  for (auto law : {IncrementLaw::Gaussian, IncrementLaw::StudentT3, IncrementLaw::CompoundPoisson,
                   IncrementLaw::Mixed}) {
    for (auto start : {StartMode::Zero, StartMode::Random}) {
      for (std::uint64_t i = 0; i < 300; ++i) {
        const auto x = values_of(random_step_path(spec(512, law, start), 17, i));
        const auto f = functionals(x);
        const auto d = davis_certificates(x, f);
        const auto b = davis_bounds_certificates(x, f);
        ASSERT_TRUE(d.first.passed && d.second.passed) << "path " << i;
        ASSERT_TRUE(b.first.passed && b.second.passed) << "path " << i;
      }
    }
  }
}

TEST(Certify, DavisResidualsScaleLinearly) {
  const auto x = values_of(random_step_path(spec(100), 4, 2));
  const auto f = functionals(x);
  const auto h = riemann_integral(davis(x, f).values, x);
  for (double lambda : {0.1, 3.0, 1e3}) {
    std::vector<double> y(x);
    for (double& v : y) v *= lambda;
    const auto fy = functionals(y);
    const auto hy = riemann_integral(davis(y, fy).values, y);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r1 = 3 * f.runmax[k] - h[k] - std::sqrt(f.qv[k]);
      const double r1y = 3 * fy.runmax[k] - hy[k] - std::sqrt(fy.qv[k]);
      EXPECT_NEAR(r1y, lambda * r1, 1e-10 * lambda * (1 + std::abs(r1)));
    }
  }
}

TEST(Certify, ConstantTailLeavesTerminalResidualsUnchanged) {
  const auto x = values_of(random_step_path(spec(60), 6, 1));
  auto y = x;
  y.insert(y.end(), 25, x.back());
  const auto yf = YoungFunction::power(2.0);
  const auto a = bdg_certificates(x, functionals(x), yf);
  const auto b = bdg_certificates(y, functionals(y), yf);
  EXPECT_TRUE(a.first.passed && b.first.passed);
  auto terminal = [](const std::vector<double>& v) {
    const auto f = functionals(v);
    return 3 * f.runmax.back() - riemann_integral(davis(v, f).values, v).back() - std::sqrt(f.qv.back());
  };
  EXPECT_DOUBLE_EQ(terminal(x), terminal(y));
}

TEST(Certify, DavisBoundsEquality) {
  // |H| = 1 wherever the increment is nonzero iff [H.X] = [X] - x0^2.
  const std::vector<double> x{0, 0, 0};
  const auto f = functionals(x);
  EXPECT_EQ(davis_bounds_certificates(x, f).second.min_residual, 0.0);
}

TEST(Certify, BdgExactForPowerAndTabulated) {
  std::vector<YoungFunction> fams{YoungFunction::power(1.5), YoungFunction::power(2.0),
                                  YoungFunction::power(3.0),
                                  YoungFunction::tabulated({0, 1, 2}, {0, 1, 3})};
  for (const auto& yf : fams) {
    for (std::uint64_t i = 0; i < 150; ++i) {
      const auto x = values_of(random_step_path(spec(256), 23, i));
      const auto f = functionals(x);
      const auto tracks = bdg_pair(x, f, yf);
      const auto c = bdg_certificates(x, f, yf, tracks);
      ASSERT_TRUE(c.first.passed && c.second.passed) << "p=" << yf.exponent() << " path " << i;
      const auto h = hxgx_certificates(x, f, yf, 1.0, tracks);
      ASSERT_TRUE(h.first.passed && h.second.passed) << "p=" << yf.exponent() << " path " << i;
    }
  }
}

TEST(Certify, BdgSingleJumpPath) {
  const double c = 1.5;
  const std::vector<double> x(5, c);
  const auto f = functionals(x);
  const auto cert = bdg_certificates(x, f, YoungFunction::power(2.0));
  // (H.X) = 0, so the terminal residual is 288 c^2 - c^2.
  EXPECT_TRUE(cert.first.passed);
  EXPECT_NEAR(cert.first.min_residual, 287 * c * c, 1e-9);
}

TEST(Certify, HxgxConstants) {
  // Phi = t^2: y = 1 gives (4, 1) and y = 1/2 gives (1, 2).
  EXPECT_DOUBLE_EQ(std::pow(2.0 * 1.0, 2.0), 4.0);
  EXPECT_DOUBLE_EQ((2.0 - 1.0) / 1.0, 1.0);
  EXPECT_DOUBLE_EQ(std::pow(2.0 * 0.5, 2.0), 1.0);
  EXPECT_DOUBLE_EQ((2.0 - 1.0) / 0.5, 2.0);
  const std::vector<double> x{1, 2};
  const auto yf = YoungFunction::power(2.0);
  EXPECT_THROW(hxgx_certificates(x, functionals(x), yf, 0.4), std::invalid_argument);
  EXPECT_THROW(hxgx_certificates(x, functionals(x), yf, 1.1), std::invalid_argument);
}

TEST(Certify, HxgxLowerYCounterexample) {
  // The G-bound with constant (p - 1) / y fails for y < 1 on this path.
  const std::vector<double> x{-1, -2, -3, 2};
  const auto f = functionals(x);
  const auto yf = YoungFunction::power(2.0);
  const auto tracks = bdg_pair(x, f, yf);
  const double gq = std::sqrt(integral_qv(tracks.second.values, x)[3]);
  EXPECT_NEAR(gq, 48.26, 5e-3);
  const double rhs = std::pow(2.0 * 0.5, 2.0) * yf.big_phi(std::sqrt(f.qv[3])) + 2.0 * yf.big_phi(f.runmax[3]);
  EXPECT_DOUBLE_EQ(rhs, 46.0);
  const auto c = hxgx_certificates(x, f, yf, 0.5, tracks);
  EXPECT_TRUE(c.first.passed);
  EXPECT_FALSE(c.second.passed);
  EXPECT_EQ(c.second.argmin_index, 3u);
  EXPECT_TRUE(hxgx_certificates(x, f, yf, 1.0, tracks).second.passed);
}

TEST(Certify, HxgxCorrectedConstantHolds) {
  // With (p - 1) / y^(p / (p - 1)) in place of (p - 1) / y the G-bound holds at y = 1/p.
  for (double p : {1.5, 2.0, 3.0}) {
    const auto yf = YoungFunction::power(p);
    const double y = 1.0 / p;
    const double a = std::pow(p * y, p), b = (p - 1.0) / std::pow(y, p / (p - 1.0));
    for (std::uint64_t i = 0; i < 300; ++i) {
      const auto x = values_of(random_step_path(spec(128), 31, i));
      const auto f = functionals(x);
      const auto gq = integral_qv(bdg_pair(x, f, yf).second.values, x);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double rhs = a * yf.big_phi(std::sqrt(f.qv[k])) + b * yf.big_phi(f.runmax[k]);
        ASSERT_LE(std::sqrt(gq[k]), rhs * (1 + 1e-9) + 1e-12) << "p=" << p << " path " << i;
      }
    }
  }
}

TEST(Certify, TwoFunctionExamples) {
  const std::vector<double> one(11, 1.0);
  const auto c = two_function_certificate(one, one);
  EXPECT_DOUBLE_EQ(c.first.min_residual, 2.0);  // middle 1 vs lower -1
  EXPECT_DOUBLE_EQ(c.second.min_residual, 0.0);  // tight upper bound
  for (std::size_t n : {10u, 100u, 1000u}) {
    std::vector<double> ramp(n + 1), flat(n + 1, 1.0);
    for (std::size_t k = 0; k <= n; ++k) ramp[k] = 1.0 + static_cast<double>(k) / n;
    const auto a = two_function_certificate(ramp, flat);
    const auto b = two_function_certificate(flat, ramp);
    EXPECT_TRUE(a.first.passed && a.second.passed) << n;
    EXPECT_TRUE(b.first.passed && b.second.passed) << n;
    EXPECT_LE(a.first.tolerance, 20.0 / n);
  }
  EXPECT_THROW(two_function_certificate(std::vector<double>{0, 1}, std::vector<double>{1, 1}),
               std::domain_error);
  EXPECT_THROW(two_function_certificate(std::vector<double>{1, 1}, std::vector<double>{1}),
               std::invalid_argument);
}

TEST(Certify, TwoFunctionUpperBoundNeedsComparableStart) {
  // At t = 0 the middle term is g^2 / (f v g) > 0 while 3g - 2f < 0 once 2f > 3g.
  const std::vector<double> f(5, 2.0), g(5, 1.0);
  const auto c = two_function_certificate(f, g);
  EXPECT_TRUE(c.first.passed);
  EXPECT_FALSE(c.second.passed);
  EXPECT_DOUBLE_EQ(c.second.min_residual, -1.5);
}

TEST(Certify, MultidimAndSandwich) {
  for (std::size_t dim : {2u, 3u}) {
    const ScenarioConfig cfg{Brownian{dim, 0.0}, 1.0, 256, 77};
    for (std::uint64_t i = 0; i < 200; ++i) {
      const auto p = gen_brownian(cfg, i);
      const auto m = multidim_davis(p);
      const auto s = norm_sandwich_certificates(p);
      ASSERT_TRUE(m.first.passed && m.second.passed);
      ASSERT_TRUE(s.first.passed && s.second.passed);
    }
  }
  EXPECT_THROW(multidim_davis(StepPath::from_values({1, 2})), std::invalid_argument);
}

TEST(Certify, ContinuousRefinementShrinksViolations) {
  const auto levels = continuous_refinement({256, 1024, 4096}, 200, 0.05, 5, 1);
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_TRUE(medians_nonincreasing(levels));
  EXPECT_GE(levels[2].p99, 0.0);
  EXPECT_LT(levels[2].p99, levels[0].p99);
  EXPECT_GE(levels[2].fraction_within, 0.99);
  EXPECT_THROW(continuous_refinement({300, 1024}, 10, 0.05, 1, 1), ConfigError);
}
