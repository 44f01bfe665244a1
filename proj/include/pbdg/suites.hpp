#pragma once

// Suite-level helpers shared by the runner and the acceptance checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "pbdg/certify.hpp"
#include "pbdg/mc.hpp"
#include "pbdg/rng.hpp"
#include "pbdg/simulate.hpp"

namespace pbdg {

/// Grid for the Young battery: 0, 1, and n log-uniform points in
/// [1e-4, 1e4], sorted.
inline std::vector<double> young_grid(std::uint64_t seed, std::size_t n) {
  Engine eng = make_engine(seed, 0, lane::kShape);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::vector<double> g{0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) g.push_back(std::pow(10.0, u(eng)));
  std::sort(g.begin(), g.end());
  return g;
}

/// Empirical quantile with linear interpolation; q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct RefinementLevel {
  std::size_t steps = 0;
  double median = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double fraction_within = 0.0;
  std::vector<double> violations;  // per path
};

/// Continuous-case violations of Brownian paths on nested grids. Each path is
/// simulated once on the finest grid and subsampled, so the levels are
/// coupled.
inline std::vector<RefinementLevel> continuous_refinement(std::vector<std::size_t> steps,
                                                          std::size_t n_paths, double envelope,
                                                          std::uint64_t seed, unsigned workers,
                                                          double horizon = 1.0) {
  if (steps.empty()) return {};
  std::sort(steps.begin(), steps.end());
  const std::size_t finest = steps.back();
  for (auto s : steps) {
    if (s < 2 || finest % s != 0) {
      throw ConfigError("continuous: every steps value must divide the finest");
    }
  }
  ScenarioConfig cfg{Brownian{}, horizon, finest, seed};
  validate(cfg);
  std::vector<RefinementLevel> out(steps.size());
  for (std::size_t l = 0; l < steps.size(); ++l) {
    out[l].steps = steps[l];
    out[l].violations.assign(n_paths, 0.0);
  }
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const auto fine = gen_brownian(cfg, i);
    for (std::size_t l = 0; l < steps.size(); ++l) {
      const auto p = fine.subsample(finest / steps[l]);
      const auto x = p.values();
      out[l].violations[i] = continuous_violation(x, functionals(x));
    }
  });
  for (auto& lv : out) {
    lv.median = quantile(lv.violations, 0.5);
    lv.p99 = quantile(lv.violations, 0.99);
    lv.max = *std::max_element(lv.violations.begin(), lv.violations.end());
    const auto within = std::count_if(lv.violations.begin(), lv.violations.end(),
                                      [&](double v) { return v <= envelope; });
    lv.fraction_within =
        n_paths ? static_cast<double>(within) / static_cast<double>(n_paths) : 1.0;
  }
  return out;
}

inline bool medians_nonincreasing(const std::vector<RefinementLevel>& levels) {
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (levels[l].median > levels[l - 1].median) return false;
  }
  return true;
}

}  // namespace pbdg
