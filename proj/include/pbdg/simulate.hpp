#pragma once

// Path generators for every scenario family and the stopping rules applied
// to them. All generators are pure functions of (config, seed, path index).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pbdg/path.hpp"
#include "pbdg/rng.hpp"

namespace pbdg {

/// Invalid or unsupported scenario/configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Brownian {
  std::size_t dim = 1;
  double x0 = 0.0;
};

/// dX = (alpha - 1) / (2X) dt + dW, alpha >= 1.
struct Bessel {
  double alpha = 1.0;
  double x0 = 0.0;
};

enum class DriftMode { Constant, SignFeedback };

/// dX = sigma X (dW + mu dt) with mu switched off after t_cutoff.
/// SignFeedback uses mu_t = mu * sign(X_t).
struct DriftedDiffusion {
  double sigma = 0.2;
  double mu = 0.1;
  double s_bound = 0.1;
  double t_cutoff = 1.0;
  double x0 = 1.0;
  DriftMode mode = DriftMode::Constant;
};

enum class JumpLaw { Gaussian, StudentT3 };

/// Compound Poisson jumps plus a scaled Brownian part.
struct JumpDiffusion {
  double jump_rate = 0.0;
  JumpLaw law = JumpLaw::Gaussian;
  double jump_scale = 1.0;
  double diffusion_scale = 1.0;
  double x0 = 0.0;
};

/// Named closed-form paths: "zero", "constant", "linear", "tsquared_sin".
struct Deterministic {
  std::string name;
};

struct ScenarioConfig {
  std::variant<Brownian, Bessel, DriftedDiffusion, JumpDiffusion, Deterministic> kind;
  double horizon = 1.0;
  std::size_t steps = 1024;
  std::uint64_t seed = 0;
};

inline void validate(const ScenarioConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
    throw ConfigError("horizon must be positive");
  }
  if (cfg.steps < 2) throw ConfigError("steps must be >= 2");
  if (const auto* b = std::get_if<Brownian>(&cfg.kind); b && b->dim == 0) {
    throw ConfigError("brownian dim must be positive");
  }
  if (const auto* b = std::get_if<Bessel>(&cfg.kind)) {
    if (!(b->alpha >= 1.0)) {
      throw ConfigError("bessel alpha < 1 is unsupported (requires alpha >= 1)");
    }
    if (!(b->x0 >= 0.0)) throw ConfigError("bessel x0 must be nonnegative");
  }
  if (const auto* d = std::get_if<DriftedDiffusion>(&cfg.kind)) {
    if (!(d->s_bound >= 0.0) || !(d->t_cutoff >= 0.0)) {
      throw ConfigError("drifted: s_bound and t_cutoff must be nonnegative");
    }
    if (std::abs(d->mu) > d->s_bound || std::abs(d->sigma * d->mu) > d->s_bound) {
      throw ConfigError("drifted: requires |mu| <= s and |sigma mu| <= s");
    }
  }
  if (const auto* j = std::get_if<JumpDiffusion>(&cfg.kind)) {
    if (!(j->jump_rate >= 0.0)) throw ConfigError("jump: negative rate");
  }
}

inline std::vector<double> time_grid(double horizon, std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  }
  return t;
}

inline StepPath gen_brownian(const ScenarioConfig& cfg, std::uint64_t path_index = 0) {
  const auto& b = std::get<Brownian>(cfg.kind);
  const double sd = std::sqrt(cfg.horizon / static_cast<double>(cfg.steps));
  std::vector<std::vector<double>> comps(b.dim, std::vector<double>(cfg.steps + 1));
  // Components come from consecutive lanes of the diffusion stream.
  for (std::size_t i = 0; i < b.dim; ++i) {
    Engine eng = make_engine(cfg.seed, path_index, lane::kDiffusion + 16 * i);
    std::normal_distribution<double> n01;
    double x = i == 0 ? b.x0 : 0.0;
    comps[i][0] = x;
    for (std::size_t k = 1; k <= cfg.steps; ++k) {
      x += sd * n01(eng);
      comps[i][k] = x;
    }
  }
  return StepPath(time_grid(cfg.horizon, cfg.steps), std::move(comps));
}

/// Full-truncation Euler on the squared process dZ = alpha dt + 2 sqrt(Z) dW,
/// returning X = sqrt(Z).
inline StepPath gen_bessel(const ScenarioConfig& cfg, std::uint64_t path_index = 0) {
  const auto& b = std::get<Bessel>(cfg.kind);
  if (!(b.alpha >= 1.0)) throw ConfigError("bessel alpha < 1 is unsupported");
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  const double sd = std::sqrt(dt);
  Engine eng = make_engine(cfg.seed, path_index, lane::kDiffusion);
  std::normal_distribution<double> n01;
  std::vector<double> x(cfg.steps + 1);
  double z = b.x0 * b.x0;
  x[0] = b.x0;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    z = z + b.alpha * dt + 2.0 * std::sqrt(std::max(z, 0.0)) * sd * n01(eng);
    z = std::max(z, 0.0);
    x[k] = std::sqrt(z);
  }
  return StepPath(time_grid(cfg.horizon, cfg.steps), std::move(x));
}

/// Integer-dimension oracle: the norm of an alpha-dimensional Brownian motion
/// started at (x0, 0, ..., 0), on an independent lane.
inline StepPath gen_bessel_norm_oracle(const ScenarioConfig& cfg,
                                       std::uint64_t path_index = 0) {
  const auto& b = std::get<Bessel>(cfg.kind);
  const double rounded = std::round(b.alpha);
  if (rounded != b.alpha || rounded < 1.0) {
    throw ConfigError("norm-of-BM oracle needs integer alpha >= 1");
  }
  const auto dim = static_cast<std::size_t>(rounded);
  const double sd = std::sqrt(cfg.horizon / static_cast<double>(cfg.steps));
  Engine eng = make_engine(cfg.seed, path_index, lane::kOracle);
  std::normal_distribution<double> n01;
  std::vector<double> pos(dim, 0.0);
  pos[0] = b.x0;
  std::vector<double> x(cfg.steps + 1);
  x[0] = b.x0;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    double r2 = 0.0;
    for (double& c : pos) {
      c += sd * n01(eng);
      r2 += c * c;
    }
    x[k] = std::sqrt(r2);
  }
  return StepPath(time_grid(cfg.horizon, cfg.steps), std::move(x));
}

/// Euler scheme for dX = sigma X (dW + mu dt).
inline StepPath gen_drifted(const ScenarioConfig& cfg, std::uint64_t path_index = 0) {
  const auto& d = std::get<DriftedDiffusion>(cfg.kind);
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  const double sd = std::sqrt(dt);
  Engine eng = make_engine(cfg.seed, path_index, lane::kDiffusion);
  std::normal_distribution<double> n01;
  const auto t = time_grid(cfg.horizon, cfg.steps);
  std::vector<double> x(cfg.steps + 1);
  x[0] = d.x0;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    const double prev = x[k - 1];
    double mu = t[k - 1] < d.t_cutoff ? d.mu : 0.0;
    if (d.mode == DriftMode::SignFeedback) mu *= (prev > 0.0) - (prev < 0.0);
    const double dw = d.sigma == 0.0 ? 0.0 : sd * n01(eng);
    x[k] = prev + d.sigma * prev * (dw + mu * dt);
  }
  return StepPath(t, std::move(x));
}

/// Brownian part on the diffusion lane (identical to gen_brownian when
/// diffusion_scale = 1), jumps on their own lane.
inline StepPath gen_jump(const ScenarioConfig& cfg, std::uint64_t path_index = 0) {
  const auto& j = std::get<JumpDiffusion>(cfg.kind);
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  const double sd = std::sqrt(dt);
  Engine diff = make_engine(cfg.seed, path_index, lane::kDiffusion);
  Engine jumps = make_engine(cfg.seed, path_index, lane::kJumps);
  std::normal_distribution<double> n01;
  std::normal_distribution<double> jn(0.0, 1.0);
  std::student_t_distribution<double> jt(3.0);
  std::poisson_distribution<int> count(j.jump_rate > 0.0 ? j.jump_rate * dt : 1.0);
  std::vector<double> x(cfg.steps + 1);
  double v = j.x0;
  x[0] = v;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    v += j.diffusion_scale * sd * n01(diff);
    if (j.jump_rate > 0.0) {
      const int n = count(jumps);
      for (int i = 0; i < n; ++i) {
        v += j.jump_scale * (j.law == JumpLaw::Gaussian ? jn(jumps) : jt(jumps));
      }
    }
    x[k] = v;
  }
  return StepPath(time_grid(cfg.horizon, cfg.steps), std::move(x));
}

inline StepPath gen_deterministic(const std::string& name, double horizon,
                                  std::size_t steps) {
  auto t = time_grid(horizon, steps);
  std::vector<double> x(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double s = t[k];
    if (name == "zero") {
      x[k] = 0.0;
    } else if (name == "constant") {
      x[k] = 1.0;
    } else if (name == "linear") {
      x[k] = s;
    } else if (name == "tsquared_sin") {
      x[k] = s == 0.0 ? 0.0 : s * s * std::sin(1.0 / s);
    } else {
      throw ConfigError("unknown deterministic path '" + name + "'");
    }
  }
  return StepPath(std::move(t), std::move(x));
}

inline StepPath generate(const ScenarioConfig& cfg, std::uint64_t path_index = 0) {
  struct Visitor {
    const ScenarioConfig& cfg;
    std::uint64_t idx;
    StepPath operator()(const Brownian&) const { return gen_brownian(cfg, idx); }
    StepPath operator()(const Bessel&) const { return gen_bessel(cfg, idx); }
    StepPath operator()(const DriftedDiffusion&) const { return gen_drifted(cfg, idx); }
    StepPath operator()(const JumpDiffusion&) const { return gen_jump(cfg, idx); }
    StepPath operator()(const Deterministic& d) const {
      return gen_deterministic(d.name, cfg.horizon, cfg.steps);
    }
  };
  return std::visit(Visitor{cfg, path_index}, cfg.kind);
}

// ---------------------------------------------------------------------------
// Random step sequences for the certificate suites.

enum class IncrementLaw { Gaussian, StudentT3, CompoundPoisson, Mixed };
enum class StartMode { Zero, Random, Mixed };

struct RandomPathSpec {
  std::size_t min_len = 2;
  std::size_t max_len = 512;
  IncrementLaw law = IncrementLaw::Mixed;
  StartMode start = StartMode::Mixed;
  std::size_t dim = 1;
};

/// A random step sequence on the integer grid. Mixed laws pick one of
/// Gaussian, Student-t(3), compound Poisson or a per-step blend of the three;
/// the overall scale is log-uniform in [1e-3, 1e3].
inline StepPath random_step_path(const RandomPathSpec& spec, std::uint64_t seed,
                                 std::uint64_t path_index) {
  if (spec.min_len < 1 || spec.max_len < spec.min_len || spec.dim == 0) {
    throw ConfigError("random path: bad length range");
  }
  Engine shape = make_engine(seed, path_index, lane::kShape);
  std::uniform_int_distribution<std::size_t> len_d(spec.min_len, spec.max_len);
  const std::size_t n = len_d(shape);
  std::uniform_real_distribution<double> u01;
  const double scale = std::pow(10.0, -3.0 + 6.0 * u01(shape));

  int law = static_cast<int>(spec.law);
  if (spec.law == IncrementLaw::Mixed) law = std::uniform_int_distribution<int>(0, 3)(shape);
  bool random_start = spec.start == StartMode::Random;
  if (spec.start == StartMode::Mixed) random_start = u01(shape) < 0.5;

  Engine eng = make_engine(seed, path_index, lane::kDiffusion);
  std::normal_distribution<double> n01;
  std::student_t_distribution<double> t3(3.0);
  std::poisson_distribution<int> pois(0.3);
  auto draw = [&](int which) {
    switch (which) {
      case 0:
        return n01(eng);
      case 1:
        return t3(eng);
      case 2: {
        double s = 0.0;
        for (int i = pois(eng); i > 0; --i) s += 2.0 * n01(eng);
        return s;
      }
      default:
        return 0.0;
    }
  };

  std::vector<std::vector<double>> comps(spec.dim, std::vector<double>(n));
  for (auto& c : comps) {
    double x = random_start ? 2.0 * n01(eng) : 0.0;
    c[0] = scale * x;
    for (std::size_t k = 1; k < n; ++k) {
      const int which = law == 3 ? std::uniform_int_distribution<int>(0, 2)(eng) : law;
      x += draw(which);
      c[k] = scale * x;
    }
  }
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k);
  return StepPath(std::move(t), std::move(comps));
}

// ---------------------------------------------------------------------------
// Stopping rules.

struct StopAtTime {
  double t;
};

/// First grid index with |X| >= level (Euclidean norm for dim > 1), capped at
/// the horizon.
struct HitLevelAbs {
  double level;
};

struct StoppingRule;

struct MinOf {
  std::vector<StoppingRule> rules;
};

enum class TimeLaw { Fixed, UniformGrid, Exponential };

/// A time drawn independently of the path from the auxiliary uniform.
/// `param` is the time for Fixed and the rate for Exponential.
struct IndependentTime {
  TimeLaw law = TimeLaw::UniformGrid;
  double param = 1.0;
};

enum class RampKind { Linear, Indicator, RunMax };

/// Randomized stopping time given by an adapted increasing A with A(0) = 0:
///   Linear:    A_t = cap * min(t / param, 1)
///   Indicator: A_t = cap * 1{t >= param}
///   RunMax:    A_t = cap * min((X*_t - X*_0) / param, 1)
/// Mass 1 - A_T sits at infinity (the terminal values of the step path).
struct RandomizedTime {
  RampKind ramp = RampKind::Linear;
  double param = 1.0;
  double cap = 1.0;
};

struct StoppingRule {
  std::variant<StopAtTime, HitLevelAbs, MinOf, IndependentTime, RandomizedTime> kind;
};

inline std::vector<double> randomized_measure(const StepPath& p, const RandomizedTime& r) {
  if (!(r.cap >= 0.0 && r.cap <= 1.0)) throw ConfigError("randomized: cap must lie in [0, 1]");
  if (!(r.param > 0.0)) throw ConfigError("randomized: parameter must be positive");
  const auto t = p.times();
  std::vector<double> a(p.size(), 0.0);
  switch (r.ramp) {
    case RampKind::Linear:
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = r.cap * std::min(t[k] / r.param, 1.0);
      break;
    case RampKind::Indicator: {
      if (t.front() >= r.param) throw ConfigError("randomized: indicator must start at 0");
      const std::size_t k0 = grid_index_at(t, r.param);
      for (std::size_t k = k0; k < a.size(); ++k) a[k] = r.cap;
      break;
    }
    case RampKind::RunMax: {
      const auto f = functionals(p);
      for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = r.cap * std::min((f.runmax[k] - f.runmax[0]) / r.param, 1.0);
      }
      break;
    }
  }
  return a;
}

/// Grid index at which the rule stops the path. `aux_uniform` in [0, 1) is
/// the independent randomisation used by IndependentTime and RandomizedTime.
inline std::size_t apply_stop(const StepPath& p, const StoppingRule& rule,
                              double aux_uniform = 0.0) {
  const std::size_t last = p.size() - 1;
  struct Visitor {
    const StepPath& p;
    double u;
    std::size_t last;
    std::size_t operator()(const StopAtTime& s) const { return grid_index_at(p.times(), s.t); }
    std::size_t operator()(const HitLevelAbs& h) const {
      const auto x = p.dim() == 1 ? std::vector<double>(p.values().begin(), p.values().end())
                                  : p.norm();
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (std::abs(x[k]) >= h.level) return k;
      }
      return last;
    }
    std::size_t operator()(const MinOf& m) const {
      std::size_t best = last;
      for (const auto& r : m.rules) best = std::min(best, apply_stop(p, r, u));
      return best;
    }
    std::size_t operator()(const IndependentTime& it) const {
      switch (it.law) {
        case TimeLaw::Fixed:
          return grid_index_at(p.times(), it.param);
        case TimeLaw::UniformGrid:
          return std::min(static_cast<std::size_t>(u * static_cast<double>(p.size())), last);
        case TimeLaw::Exponential: {
          const double t = -std::log1p(-u) / it.param;
          return grid_index_at(p.times(), t);
        }
      }
      return last;
    }
    std::size_t operator()(const RandomizedTime& r) const {
      const auto a = randomized_measure(p, r);
      return std::min(cad_inverse(a, u), last);
    }
  };
  return std::visit(Visitor{p, aux_uniform, last}, rule.kind);
}

}  // namespace pbdg
