// Acceptance checks. `acceptance --criterion N` runs one criterion; with no
// arguments all thirteen run in order. Each prints detail lines followed by a
// single "criterion N: PASS|FAIL" verdict line. Exit status is 0 iff every
// selected criterion passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "pbdg/certify.hpp"
#include "pbdg/mc.hpp"
#include "pbdg/runner.hpp"
#include "pbdg/suites.hpp"

using namespace pbdg;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240917;
constexpr double kRelTol = 1e-9;
constexpr double kSlack = 1.1;
constexpr double kEnvelope = 0.02;
constexpr std::size_t kMcPaths = 100000;

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Worst certificate over a path suite, keyed by certificate id.
struct Worst {
  std::vector<Certificate> by_id;
  std::mutex m;

  // A violation outranks a pass; otherwise the smaller margin wins.
  static bool worse(const Certificate& a, const Certificate& b) {
    if (a.passed != b.passed) return !a.passed;
    return a.min_residual + a.tolerance < b.min_residual + b.tolerance;
  }

  void add(Certificate c, std::size_t path) {
    c.argmin_index = path;
    std::lock_guard lock(m);
    for (auto& w : by_id) {
      if (w.id == c.id) {
        if (worse(c, w)) w = c;
        return;
      }
    }
    by_id.push_back(c);
  }

  bool report(const std::string& prefix) {
    bool ok = true;
    for (const auto& c : by_id) {
      std::printf("  %s %-28s worst min_residual=% .6e tol=%.3e path=%zu %s\n", prefix.c_str(), c.id.c_str(),
                  c.min_residual, c.tolerance, c.argmin_index, c.passed ? "ok" : "VIOLATED");
      ok = ok && c.passed;
    }
    return ok;
  }
};

const RandomPathSpec kMixed{2, 512, IncrementLaw::Mixed, StartMode::Mixed, 1};

template <class F>
bool path_suite(std::size_t n, const RandomPathSpec& spec, std::uint64_t seed, const std::string& prefix, F check) {
  Worst w;
  parallel_for(n, workers(), [&](std::size_t i) {
    const auto p = random_step_path(spec, seed, i);
    const auto x = p.values();
    const auto f = functionals(x);
    for (const auto& c : check(x, f)) w.add(c, i);
  });
  return w.report(prefix);
}

std::vector<Certificate> both(const CertificatePair& c) { return {c.first, c.second}; }

bool mc_line(const McReport& r) {
  std::printf("  %-24s ratio=%.5f ci=[%.5f, %.5f] bounds=[%.5f, %.5f] slack=%.2f %s\n", r.scenario_id.c_str(), r.ratio,
              r.ci_low, r.ci_high, r.bound_low, r.bound_high, r.slack, r.passed ? "ok" : "FAILED");
  for (const auto& c : r.checks) {
    std::printf("    %-28s value=% .5e se=%.5e threshold=%.5e %s\n", c.id.c_str(), c.value, c.se, c.threshold,
                c.passed ? "ok" : "FAILED");
  }
  return r.passed;
}

McOptions mc_opts(const std::string& id, std::uint64_t seed) {
  McOptions o;
  o.id = id;
  o.n_paths = kMcPaths;
  o.seed = seed;
  o.workers = workers();
  o.slack = kSlack;
  return o;
}

const StoppingRule kAtOne{StopAtTime{1.0}};
const StoppingRule kHitOne{MinOf{{StoppingRule{HitLevelAbs{1.0}}, StoppingRule{StopAtTime{1.0}}}}};

bool c1() {
  return path_suite(100000, kMixed, kSeed, "davis", [](auto x, const auto& f) {
    return both(davis_certificates(x, f, kRelTol));
  });
}

bool c2() {
  return path_suite(100000, kMixed, kSeed, "bounds", [](auto x, const auto& f) {
    return both(davis_bounds_certificates(x, f, kRelTol));
  });
}

const RandomPathSpec kShort{2, 256, IncrementLaw::Mixed, StartMode::Mixed, 1};

bool c3() {
  bool ok = true;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto yf = YoungFunction::power(p);
    std::printf("  p=%g c_p=%.6g\n", p, c_p(p));
    ok &= path_suite(10000, kShort, kSeed + 3, "bdg", [&](auto x, const auto& f) {
      return both(bdg_certificates(x, f, yf, kRelTol));
    });
  }
  return ok;
}

bool c4() {
  bool ok = true;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto yf = YoungFunction::power(p);
    for (double y : {1.0 / p, 1.0}) {
      std::printf("  p=%g y=%.6g\n", p, y);
      ok &= path_suite(10000, kShort, kSeed + 3, "hxgx", [&](auto x, const auto& f) {
        return both(hxgx_certificates(x, f, yf, y, kRelTol));
      });
    }
  }
  return ok;
}

bool c5() {
  const auto levels = continuous_refinement({256, 1024, 4096, 16384}, 1000, kEnvelope, kSeed + 5, workers());
  for (const auto& l : levels) {
    std::printf("  steps=%-6zu median=%.6e p99=%.6e max=%.6e within(%.2f)=%.4f\n", l.steps, l.median, l.p99, l.max,
                kEnvelope, l.fraction_within);
  }
  const bool mono = medians_nonincreasing(levels);
  const bool env = levels.back().fraction_within >= 0.99;
  std::printf("  medians nonincreasing: %s; finest level within envelope for >= 99%%: %s\n", mono ? "yes" : "no",
              env ? "yes" : "no");
  return mono && env;
}

bool c6() {
  bool ok = true;
  const auto grid = young_grid(kSeed + 6, 200);
  auto battery = [&](const std::string& name, const YoungFunction& yf) {
    const auto b = check_young_battery(yf, grid, kRelTol);
    for (const auto& c : b.certificates) {
      std::printf("  %-22s %-28s min_residual=% .6e %s\n", name.c_str(), c.id.c_str(), c.min_residual,
                  c.passed ? "ok" : "VIOLATED");
    }
    ok &= b.passed();
  };
  for (double p : {1.2, 1.5, 2.0, 3.0}) {
    const auto yf = YoungFunction::power(p);
    battery("power p=" + fmt(p), yf);
    const double err = std::abs(yf.exponent() - p);
    std::printf("  power p=%-14g exponent error %.3e %s\n", p, err, err <= 1e-12 ? "ok" : "VIOLATED");
    ok &= err <= 1e-12;
  }
  battery("tabulated", YoungFunction::load_tabulated((fs::path(PBDG_CONFIG_DIR) / "phi_table.csv").string()));
  return ok;
}

bool c7() {
  const ScenarioConfig bm{Brownian{}, 1.0, 4096, 0};
  const auto a = mc_ratio(bm, kAtOne, {}, mc_opts("brownian.t1", kSeed + 7));
  const auto b = mc_ratio(bm, kHitOne, {}, mc_opts("brownian.hit1_and_1", kSeed + 70));
  const bool ok_a = mc_line(a);
  const bool ok_b = mc_line(b);
  const double target = oracle::mean_sup_abs_bm();
  const double rel = std::abs(a.ratio - target) / target;
  std::printf("  tau=1 ratio vs E sup|B| = %.10f: relative error %.4f (limit 0.02) %s\n", target, rel,
              rel <= 0.02 ? "ok" : "FAILED");
  return ok_a && ok_b && rel <= 0.02;
}

bool c8() {
  bool ok = true;
  std::uint64_t s = kSeed + 8;
  for (double alpha : {1.0, 1.5, 2.0, 3.0}) {
    ok &= mc_line(mc_bessel(alpha, 0.0, 1.0, 4096, kAtOne, {}, mc_opts("bessel.alpha=" + fmt(alpha), s++)));
  }
  return ok;
}

bool c9() {
  const ScenarioConfig bm{Brownian{}, 1.0, 256, 0};
  const PhiChoice sq{YoungFunction::power(2.0)};
  bool ok = true;
  for (const StoppingRule& rule : {kAtOne, kHitOne}) {
    ok &= mc_line(mc_martingale_zero(bm, IntegrandKind::BdgH, rule, sq, mc_opts("zero_mean.H", kSeed + 9)));
    ok &= mc_line(mc_martingale_zero(bm, IntegrandKind::BdgG, rule, sq, mc_opts("zero_mean.G", kSeed + 90)));
  }
  return ok;
}

bool c10() {
  const ScenarioConfig bm{Brownian{}, 1.0, 1024, 0};
  bool ok = true;
  ok &= mc_line(mc_randomized(bm, {RampKind::Linear, 1.0, 1.0}, {}, mc_opts("randomized.linear", kSeed + 10)));
  ok &= mc_line(mc_randomized(bm, {RampKind::Linear, 1.0, 0.8}, {}, mc_opts("randomized.linear_cap0.8", kSeed + 100)));
  return ok;
}

bool c11() {
  DriftedDiffusion d;
  d.sigma = 0.2;
  d.mu = 0.1;
  d.s_bound = 0.1;
  d.t_cutoff = 1.0;
  return mc_line(mc_change_of_measure(d, 1.0, 1024, kAtOne, mc_opts("drifted", kSeed + 11)));
}

bool c12() {
  bool ok = true;
  for (std::size_t n : {2u, 3u}) {
    Worst w;
    const ScenarioConfig cfg{Brownian{n, 0.0}, 1.0, 512, kSeed + 12 + n};
    parallel_for(10000, workers(), [&](std::size_t i) {
      const auto p = gen_brownian(cfg, i);
      for (const auto& c : both(multidim_davis(p, kRelTol))) w.add(c, i);
      for (const auto& c : both(norm_sandwich_certificates(p, kRelTol))) w.add(c, i);
    });
    std::printf("  n=%zu\n", n);
    ok &= w.report("multidim");
  }
  return ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool c13() {
  const fs::path cfg = fs::path(PBDG_CONFIG_DIR) / "smoke.json";
  const fs::path root = fs::temp_directory_path() / "pbdg_acceptance_c13";
  fs::remove_all(root);
  std::ostringstream log;
  auto run_with = [&](unsigned w, const std::string& name) {
    RunOverrides o;
    o.workers = w;
    const auto dir = root / name;
    fs::create_directories(dir);
    const int rc = run(cfg, RunMode::All, o, dir, log);
    std::printf("  run %-8s workers=%u exit=%d\n", name.c_str(), w, rc);
    return dir;
  };
  const auto a = run_with(1, "w1"), b = run_with(4, "w4"), c = run_with(1, "w1again");
  bool ok = true;
  for (const char* f : {"certificates.csv", "mc_summary.csv", "mc_reports.json", "continuous.csv"}) {
    const auto ref = slurp(a / f);
    const bool same = !ref.empty() && ref == slurp(b / f) && ref == slurp(c / f);
    std::printf("  %-18s %zu bytes %s\n", f, ref.size(), same ? "identical" : "DIFFERS");
    ok &= same;
  }
  // The manifest differs only in wall time.
  auto manifest = [](const fs::path& d) {
    auto j = Json::parse(slurp(d / "manifest.json"));
    j.erase("wall_time_seconds");
    j.erase("workers");
    return j.dump();
  };
  const bool same = manifest(a) == manifest(b) && manifest(a) == manifest(c);
  std::printf("  manifest.json      %s\n", same ? "identical apart from wall time and workers" : "DIFFERS");
  return ok && same;
}

const std::vector<std::pair<const char*, std::function<bool()>>> kCriteria = {
    {"exact Davis certificates", c1},
    {"Davis bounds certificates", c2},
    {"pathwise BDG certificates", c3},
    {"[H.X] and [G.X] certificates", c4},
    {"continuous-case refinement", c5},
    {"Young battery", c6},
    {"Brownian Monte Carlo", c7},
    {"Bessel Monte Carlo", c8},
    {"martingale zero mean", c9},
    {"randomized stopping times", c10},
    {"change of measure", c11},
    {"multidimensional", c12},
    {"reproducibility", c13},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  if (which.empty()) {
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) which.push_back(i);
  }
  bool all = true;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(kCriteria.size())) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    const auto& [name, fn] = kCriteria[n - 1];
    std::printf("criterion %d (%s)\n", n, name);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::printf("  error: %s\n", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s)\n", n, ok ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    all = all && ok;
  }
  return all ? 0 : 1;
}
