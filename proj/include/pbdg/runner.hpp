#pragma once

// Config-driven execution of certificate and Monte Carlo suites.
//
// Config (JSON, schema_version 1):
//   {
//     "schema_version": 1, "seed": 7, "workers": 1,
//     "tolerances": {"relative": 1e-9, "slack": 1.1, "continuous_envelope": 0.02},
//     "certify": [ {"id": ..., "suite": "davis" | "davis_bounds" | "bdg" | "hxgx" |
//                   "young" | "multidim" | "continuous", ...} ],
//     "mc": [ {"id": ..., "kind": "ratio" | "bessel" | "random_time" | "randomized" |
//              "change_of_measure" | "martingale_zero", ...} ]
//   }
// Unknown keys anywhere are schema errors.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pbdg/certify.hpp"
#include "pbdg/mc.hpp"
#include "pbdg/simulate.hpp"
#include "pbdg/suites.hpp"
#include "pbdg/young.hpp"

namespace pbdg {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

/// Config that does not match the schema (exit code 2).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a, used as the config digest.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsed configuration.

struct Tolerances {
  double relative = kDefaultRelTol;
  double slack = 1.1;
  double continuous_envelope = 0.02;
};

struct CertifySuite {
  std::string id;
  std::string suite;
  std::size_t n_paths = 100;
  RandomPathSpec paths;
  std::vector<YoungFunction> phis;  // bdg, hxgx, young
  std::vector<std::string> phi_names;
  std::vector<double> y;            // hxgx; values <= 0 mean 1/p
  std::size_t grid_points = 64;     // young
  std::size_t dim = 2;              // multidim
  std::size_t steps = 1024;         // multidim
  std::vector<std::size_t> levels;  // continuous
  double min_fraction = 0.99;       // continuous
};

struct McSuite {
  std::string id;
  std::string kind;
  ScenarioConfig scenario;
  StoppingRule stop{StopAtTime{1.0}};
  PhiChoice phi;
  IntegrandKind integrand = IntegrandKind::Davis;
  std::size_t n_paths = 1000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  Tolerances tol;
  std::vector<CertifySuite> certify;
  std::vector<McSuite> mc;
  std::string digest;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> horizon;
  std::optional<unsigned> workers;
  std::optional<std::size_t> n_paths;
  bool dump_integrands = false;
};

enum class RunMode { Certify, Mc, All };

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline void check_keys(const Json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw SchemaError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(where + ": bad value for '" + key + "'");
  }
}

template <class T>
T require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
  return get_or<T>(j, key, T{}, where);
}

inline std::vector<double> number_list(const Json& j, const std::string& key,
                                       std::vector<double> fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw SchemaError(where + ": '" + key + "' must be a number or list");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(where + ": '" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

template <class E>
E enum_of(const std::string& s, const std::map<std::string, E>& table, const std::string& where) {
  const auto it = table.find(s);
  if (it == table.end()) throw SchemaError(where + ": unknown value '" + s + "'");
  return it->second;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  std::filesystem::path p(file);
  return p.is_absolute() ? p : base / p;
}

inline YoungFunction young_from(const Json& j, const std::filesystem::path& base,
                                const std::string& where, std::string* name) {
  check_keys(j, where, {"type", "p", "file"});
  const auto type = require<std::string>(j, "type", where);
  try {
    if (type == "power") {
      const double p = require<double>(j, "p", where);
      if (name) *name = "power:" + j.at("p").dump();
      return YoungFunction::power(p);
    }
    if (type == "tabulated") {
      const auto file = require<std::string>(j, "file", where);
      if (name) *name = "tabulated:" + std::filesystem::path(file).filename().string();
      return YoungFunction::load_tabulated(resolve(base, file).string());
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  throw SchemaError(where + ": unknown phi type '" + type + "'");
}

inline PhiChoice phi_from(const Json& j, const std::filesystem::path& base,
                          const std::string& where) {
  if (j.is_object() && j.value("type", "") == "identity") {
    check_keys(j, where, {"type"});
    return {};
  }
  return PhiChoice{young_from(j, base, where, nullptr)};
}

inline StoppingRule stop_from(const Json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  const auto type = require<std::string>(j, "type", where);
  if (type == "time") {
    check_keys(j, where, {"type", "t"});
    return {StopAtTime{require<double>(j, "t", where)}};
  }
  if (type == "hit") {
    check_keys(j, where, {"type", "level"});
    return {HitLevelAbs{require<double>(j, "level", where)}};
  }
  if (type == "min") {
    check_keys(j, where, {"type", "rules"});
    if (!j.contains("rules") || !j["rules"].is_array()) {
      throw SchemaError(where + ": 'rules' must be a list");
    }
    MinOf m;
    for (const auto& r : j["rules"]) m.rules.push_back(stop_from(r, where + ".rules"));
    return {std::move(m)};
  }
  if (type == "independent") {
    check_keys(j, where, {"type", "law", "param"});
    IndependentTime it;
    it.law = enum_of<TimeLaw>(require<std::string>(j, "law", where),
                              {{"fixed", TimeLaw::Fixed},
                               {"uniform_grid", TimeLaw::UniformGrid},
                               {"exponential", TimeLaw::Exponential}},
                              where);
    it.param = get_or<double>(j, "param", 1.0, where);
    return {it};
  }
  if (type == "randomized") {
    check_keys(j, where, {"type", "ramp", "param", "cap"});
    RandomizedTime r;
    r.ramp = enum_of<RampKind>(require<std::string>(j, "ramp", where),
                               {{"linear", RampKind::Linear},
                                {"indicator", RampKind::Indicator},
                                {"runmax", RampKind::RunMax}},
                               where);
    r.param = get_or<double>(j, "param", 1.0, where);
    r.cap = get_or<double>(j, "cap", 1.0, where);
    if (!(r.cap >= 0.0 && r.cap <= 1.0) || !(r.param > 0.0)) {
      throw SchemaError(where + ": randomized needs param > 0 and cap in [0, 1]");
    }
    return {r};
  }
  throw SchemaError(where + ": unknown stop type '" + type + "'");
}

inline ScenarioConfig scenario_from(const Json& j, const std::string& where) {
  ScenarioConfig cfg;
  const auto type = require<std::string>(j, "type", where);
  if (type == "brownian") {
    check_keys(j, where, {"type", "dim", "x0"});
    cfg.kind = Brownian{get_or<std::size_t>(j, "dim", 1, where), get_or<double>(j, "x0", 0.0, where)};
  } else if (type == "bessel") {
    check_keys(j, where, {"type", "alpha", "x0"});
    cfg.kind = Bessel{require<double>(j, "alpha", where), get_or<double>(j, "x0", 0.0, where)};
  } else if (type == "drifted") {
    check_keys(j, where, {"type", "sigma", "mu", "s_bound", "t_cutoff", "x0", "mode"});
    DriftedDiffusion d;
    d.sigma = get_or<double>(j, "sigma", d.sigma, where);
    d.mu = get_or<double>(j, "mu", d.mu, where);
    d.s_bound = get_or<double>(j, "s_bound", d.s_bound, where);
    d.t_cutoff = get_or<double>(j, "t_cutoff", d.t_cutoff, where);
    d.x0 = get_or<double>(j, "x0", d.x0, where);
    d.mode = enum_of<DriftMode>(get_or<std::string>(j, "mode", "constant", where),
                                {{"constant", DriftMode::Constant},
                                 {"sign_feedback", DriftMode::SignFeedback}},
                                where);
    cfg.kind = d;
  } else if (type == "jump") {
    check_keys(j, where, {"type", "rate", "law", "jump_scale", "diffusion_scale", "x0"});
    JumpDiffusion jd;
    jd.jump_rate = get_or<double>(j, "rate", 0.0, where);
    jd.law = enum_of<JumpLaw>(get_or<std::string>(j, "law", "gaussian", where),
                              {{"gaussian", JumpLaw::Gaussian}, {"student_t3", JumpLaw::StudentT3}},
                              where);
    jd.jump_scale = get_or<double>(j, "jump_scale", 1.0, where);
    jd.diffusion_scale = get_or<double>(j, "diffusion_scale", 1.0, where);
    jd.x0 = get_or<double>(j, "x0", 0.0, where);
    cfg.kind = jd;
  } else if (type == "deterministic") {
    check_keys(j, where, {"type", "name"});
    cfg.kind = Deterministic{require<std::string>(j, "name", where)};
  } else {
    throw SchemaError(where + ": unknown scenario type '" + type + "'");
  }
  return cfg;
}

inline RandomPathSpec paths_from(const Json& j, const std::string& where) {
  RandomPathSpec s;
  s.min_len = get_or<std::size_t>(j, "min_len", 2, where);
  s.max_len = get_or<std::size_t>(j, "max_len", 512, where);
  s.law = enum_of<IncrementLaw>(get_or<std::string>(j, "law", "mixed", where),
                                {{"gaussian", IncrementLaw::Gaussian},
                                 {"student_t3", IncrementLaw::StudentT3},
                                 {"compound_poisson", IncrementLaw::CompoundPoisson},
                                 {"mixed", IncrementLaw::Mixed}},
                                where);
  s.start = enum_of<StartMode>(get_or<std::string>(j, "start", "mixed", where),
                               {{"zero", StartMode::Zero},
                                {"random", StartMode::Random},
                                {"mixed", StartMode::Mixed}},
                               where);
  if (s.min_len < 1 || s.max_len < s.min_len) throw SchemaError(where + ": bad length range");
  return s;
}

inline CertifySuite certify_from(const Json& j, const std::filesystem::path& base,
                                 const std::string& where) {
  CertifySuite c;
  c.id = require<std::string>(j, "id", where);
  c.suite = require<std::string>(j, "suite", where);
  const std::string w = where + "[" + c.id + "]";
  const std::set<std::string> path_keys{"id", "suite", "n_paths", "min_len", "max_len", "law",
                                        "start"};
  auto with = [&](std::set<std::string> extra) {
    extra.insert(path_keys.begin(), path_keys.end());
    return extra;
  };
  auto phis = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
      throw SchemaError(w + ": '" + key + "' must be a nonempty list");
    }
    for (const auto& e : j[key]) {
      std::string name;
      c.phis.push_back(young_from(e, base, w + "." + key, &name));
      c.phi_names.push_back(name);
    }
  };
  if (c.suite == "davis" || c.suite == "davis_bounds") {
    check_keys(j, w, path_keys);
  } else if (c.suite == "bdg") {
    check_keys(j, w, with({"phi"}));
    phis("phi");
  } else if (c.suite == "hxgx") {
    check_keys(j, w, with({"phi", "y"}));
    phis("phi");
    if (!j.contains("y") || !j["y"].is_array()) throw SchemaError(w + ": 'y' must be a list");
    for (const auto& e : j["y"]) {
      if (e.is_string() && e.get<std::string>() == "1/p") {
        c.y.push_back(0.0);
      } else if (e.is_number() && e.get<double>() > 0.0) {
        c.y.push_back(e.get<double>());
      } else {
        throw SchemaError(w + ": y entries must be positive numbers or \"1/p\"");
      }
    }
  } else if (c.suite == "young") {
    check_keys(j, w, {"id", "suite", "phi", "grid_points"});
    phis("phi");
    c.grid_points = get_or<std::size_t>(j, "grid_points", 64, w);
  } else if (c.suite == "multidim") {
    check_keys(j, w, {"id", "suite", "n_paths", "dim", "steps"});
    c.dim = get_or<std::size_t>(j, "dim", 2, w);
    c.steps = get_or<std::size_t>(j, "steps", 1024, w);
    if (c.dim < 2 || c.steps < 2) throw SchemaError(w + ": multidim needs dim >= 2, steps >= 2");
  } else if (c.suite == "continuous") {
    check_keys(j, w, {"id", "suite", "n_paths", "steps", "min_fraction"});
    for (double s : number_list(j, "steps", {256, 1024, 4096, 16384}, w)) {
      if (!(s >= 2) || s != std::floor(s)) throw SchemaError(w + ": steps must be integers >= 2");
      c.levels.push_back(static_cast<std::size_t>(s));
    }
    c.min_fraction = get_or<double>(j, "min_fraction", 0.99, w);
  } else {
    throw SchemaError(w + ": unknown suite '" + c.suite + "'");
  }
  c.n_paths = get_or<std::size_t>(j, "n_paths", 100, w);
  if (c.suite != "young" && c.suite != "continuous" && c.suite != "multidim") {
    c.paths = paths_from(j, w);
  }
  return c;
}

inline McSuite mc_from(const Json& j, const std::filesystem::path& base, const std::string& where) {
  McSuite m;
  m.id = require<std::string>(j, "id", where);
  const std::string w = where + "[" + m.id + "]";
  check_keys(j, w, {"id", "kind", "scenario", "horizon", "steps", "stop", "phi", "integrand",
                    "n_paths"});
  m.kind = require<std::string>(j, "kind", w);
  static const std::set<std::string> kinds{"ratio",      "bessel",           "random_time",
                                           "randomized", "change_of_measure", "martingale_zero"};
  if (!kinds.count(m.kind)) throw SchemaError(w + ": unknown kind '" + m.kind + "'");
  if (!j.contains("scenario")) throw SchemaError(w + ": missing 'scenario'");
  m.scenario = scenario_from(j["scenario"], w + ".scenario");
  m.scenario.horizon = get_or<double>(j, "horizon", 1.0, w);
  m.scenario.steps = get_or<std::size_t>(j, "steps", 1024, w);
  if (j.contains("stop")) m.stop = stop_from(j["stop"], w + ".stop");
  if (j.contains("phi")) m.phi = phi_from(j["phi"], base, w + ".phi");
  m.integrand = enum_of<IntegrandKind>(get_or<std::string>(j, "integrand", "davis", w),
                                       {{"davis", IntegrandKind::Davis},
                                        {"continuous", IntegrandKind::Continuous},
                                        {"bdg_h", IntegrandKind::BdgH},
                                        {"bdg_g", IntegrandKind::BdgG}},
                                       w);
  m.n_paths = get_or<std::size_t>(j, "n_paths", 1000, w);

  const bool bessel = std::holds_alternative<Bessel>(m.scenario.kind);
  const bool drifted = std::holds_alternative<DriftedDiffusion>(m.scenario.kind);
  if ((m.kind == "bessel") != bessel) {
    throw SchemaError(w + ": kind 'bessel' goes with a bessel scenario");
  }
  if ((m.kind == "change_of_measure") != drifted) {
    throw SchemaError(w + ": kind 'change_of_measure' goes with a drifted scenario");
  }
  if (m.kind == "random_time" && !std::holds_alternative<IndependentTime>(m.stop.kind)) {
    throw SchemaError(w + ": random_time needs an 'independent' stop");
  }
  if (m.kind == "randomized" && !std::holds_alternative<RandomizedTime>(m.stop.kind)) {
    throw SchemaError(w + ": randomized needs a 'randomized' stop");
  }
  if (m.kind == "martingale_zero" && m.phi.identity() &&
      (m.integrand == IntegrandKind::BdgH || m.integrand == IntegrandKind::BdgG)) {
    throw SchemaError(w + ": BDG integrands need a Young 'phi'");
  }
  if (m.n_paths < kMinMcPaths) throw SchemaError(w + ": n_paths must be at least 1000");
  try {
    validate(m.scenario);
  } catch (const ConfigError& e) {
    throw SchemaError(w + ": " + e.what());
  }
  return m;
}

}  // namespace detail

/// Parses config text; `base_dir` resolves relative tabulated-phi files.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  detail::check_keys(j, "config",
                     {"schema_version", "seed", "workers", "tolerances", "certify", "mc"});
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("config: schema_version must be 1");
  }
  RunConfig cfg;
  cfg.digest = hex64(fnv1a(text));
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0, "config");
  cfg.workers = detail::get_or<unsigned>(j, "workers", 1, "config");
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    detail::check_keys(t, "tolerances", {"relative", "slack", "continuous_envelope"});
    cfg.tol.relative = detail::get_or<double>(t, "relative", cfg.tol.relative, "tolerances");
    cfg.tol.slack = detail::get_or<double>(t, "slack", cfg.tol.slack, "tolerances");
    cfg.tol.continuous_envelope =
        detail::get_or<double>(t, "continuous_envelope", cfg.tol.continuous_envelope, "tolerances");
    if (!(cfg.tol.relative >= 0.0) || !(cfg.tol.slack >= 1.0) ||
        !(cfg.tol.continuous_envelope >= 0.0)) {
      throw SchemaError("tolerances: relative >= 0, slack >= 1, continuous_envelope >= 0");
    }
  }
  for (const char* key : {"certify", "mc"}) {
    if (j.contains(key) && !j[key].is_array()) {
      throw SchemaError(std::string("config: '") + key + "' must be a list");
    }
  }
  std::set<std::string> ids;
  auto unique = [&](const std::string& id) {
    if (!ids.insert(id).second) throw SchemaError("config: duplicate suite id '" + id + "'");
  };
  for (const auto& e : j.value("certify", Json::array())) {
    cfg.certify.push_back(detail::certify_from(e, base_dir, "certify"));
    unique(cfg.certify.back().id);
  }
  for (const auto& e : j.value("mc", Json::array())) {
    cfg.mc.push_back(detail::mc_from(e, base_dir, "mc"));
    unique(cfg.mc.back().id);
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

inline void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  for (auto& m : cfg.mc) {
    if (o.steps) m.scenario.steps = *o.steps;
    if (o.horizon) m.scenario.horizon = *o.horizon;
    if (o.n_paths) m.n_paths = *o.n_paths;
  }
  for (auto& c : cfg.certify) {
    if (o.n_paths) c.n_paths = *o.n_paths;
    if (o.steps) {
      if (c.suite == "multidim") c.steps = *o.steps;
      if (c.suite == "continuous") c.levels = {*o.steps};
    }
  }
  for (auto& m : cfg.mc) {
    try {
      validate(m.scenario);
    } catch (const ConfigError& e) {
      throw SchemaError("override: " + std::string(e.what()));
    }
    if (m.n_paths < kMinMcPaths) throw SchemaError("override: n_paths must be at least 1000");
  }
}

// ---------------------------------------------------------------------------
// Execution.

struct CertificateRow {
  std::string suite_id;
  std::size_t path_id = 0;
  Certificate cert;
  double argmin_time = 0.0;
};

struct ContinuousSummary {
  std::string suite_id;
  RefinementLevel level;
  double envelope = 0.0;
};

struct IntegrandRow {
  std::string suite_id;
  std::string kind;
  std::size_t index = 0;
  double time = 0.0;
  double value = 0.0;
  double integrand = 0.0;
};

struct SuiteOutcome {
  std::string id;
  std::string type;  // "certify" or "mc"
  bool passed = true;
};

struct RunResult {
  std::vector<SuiteOutcome> suites;
  std::vector<CertificateRow> certificates;
  std::vector<ContinuousSummary> continuous;
  std::vector<McReport> mc;
  std::vector<IntegrandRow> integrands;

  bool passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteOutcome& s) { return s.passed; });
  }
};

namespace detail {

inline void push_pair(std::vector<CertificateRow>& out, const std::string& id, std::size_t path,
                      const CertificatePair& c, std::span<const double> times) {
  for (const auto* cert : {&c.first, &c.second}) {
    CertificateRow r{id, path, *cert, times.empty() ? 0.0 : times[cert->argmin_index]};
    out.push_back(std::move(r));
  }
}

inline void dump_track(RunResult& res, const std::string& id, const std::string& kind,
                       const StepPath& p, const std::vector<double>& v) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    res.integrands.push_back({id, kind, k, p.times()[k], p.values()[k], v[k]});
  }
}

inline std::string suite_label(const CertifySuite& c, std::size_t phi, double y = -1.0) {
  std::string s = c.id + "/" + c.phi_names[phi];
  if (y >= 0.0) {
    std::ostringstream os;
    os << "/y=" << std::setprecision(6) << y;
    s += os.str();
  }
  return s;
}

inline void run_certify(const CertifySuite& c, const RunConfig& cfg, bool dump, RunResult& res) {
  const double tol = cfg.tol.relative;
  const std::size_t n = c.n_paths;
  bool ok = true;
  std::vector<std::vector<CertificateRow>> per(n);
  auto path = [&](std::size_t i) { return random_step_path(c.paths, cfg.seed, i); };
  auto collect = [&] {
    for (auto& v : per) {
      for (auto& r : v) {
        ok = ok && r.cert.passed;
        res.certificates.push_back(std::move(r));
      }
    }
  };

  if (c.suite == "davis" || c.suite == "davis_bounds") {
    const bool bounds = c.suite == "davis_bounds";
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto p = path(i);
      const auto x = p.values();
      const auto f = functionals(x);
      push_pair(per[i], c.id, i, bounds ? davis_bounds_certificates(x, f, tol) : davis_certificates(x, f, tol),
                p.times());
    });
    collect();
    if (dump && n > 0) {
      const auto p = path(0);
      const auto f = functionals(p.values());
      dump_track(res, c.id, "davis", p, davis(p.values(), f).values);
      dump_track(res, c.id, "continuous", p, continuous_davis(p.values(), f).values);
    }
  } else if (c.suite == "bdg" || c.suite == "hxgx") {
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto p = path(i);
      const auto x = p.values();
      const auto f = functionals(x);
      for (std::size_t k = 0; k < c.phis.size(); ++k) {
        const auto& yf = c.phis[k];
        const auto tracks = bdg_pair(x, f, yf);
        if (c.suite == "bdg") {
          push_pair(per[i], suite_label(c, k), i, bdg_certificates(x, f, yf, tracks, tol), p.times());
        } else {
          for (double y : c.y) {
            const double yy = y > 0.0 ? y : 1.0 / yf.exponent();
            push_pair(per[i], suite_label(c, k, yy), i,
                      hxgx_certificates(x, f, yf, yy, tracks, tol), p.times());
          }
        }
      }
    });
    collect();
    if (dump && n > 0) {
      const auto p = path(0);
      const auto f = functionals(p.values());
      for (std::size_t k = 0; k < c.phis.size(); ++k) {
        const auto tr = bdg_pair(p.values(), f, c.phis[k]);
        dump_track(res, suite_label(c, k), "bdg_h", p, tr.first.values);
        dump_track(res, suite_label(c, k), "bdg_g", p, tr.second.values);
      }
    }
  } else if (c.suite == "young") {
    const auto grid = young_grid(cfg.seed, c.grid_points);
    for (std::size_t k = 0; k < c.phis.size(); ++k) {
      const auto& yf = c.phis[k];
      const auto bat = check_young_battery(yf, grid, tol);
      for (const auto& cert : bat.certificates) {
        ok = ok && cert.passed;
        res.certificates.push_back({suite_label(c, k), k, cert, grid[cert.argmin_index % grid.size()]});
      }
      if (const auto* pf = std::get_if<PowerFamily>(&yf.kind())) {
        Certificate e{"young.exponent", -std::abs(yf.exponent() - pf->p), 0, 1e-12, false};
        e.passed = e.min_residual >= -e.tolerance;
        ok = ok && e.passed;
        res.certificates.push_back({suite_label(c, k), k, e, 0.0});
      }
    }
  } else if (c.suite == "multidim") {
    ScenarioConfig sc{Brownian{c.dim, 0.0}, 1.0, c.steps, cfg.seed};
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto p = gen_brownian(sc, i);
      push_pair(per[i], c.id, i, multidim_davis(p, tol), p.times());
      push_pair(per[i], c.id, i, norm_sandwich_certificates(p, tol), p.times());
    });
    collect();
  } else if (c.suite == "continuous") {
    const double env = cfg.tol.continuous_envelope;
    const auto levels = continuous_refinement(c.levels, n, env, cfg.seed, cfg.workers);
    for (const auto& lv : levels) {
      const std::string id = c.id + "/steps=" + std::to_string(lv.steps);
      for (std::size_t i = 0; i < n; ++i) {
        Certificate cert{"continuous.violation", -lv.violations[i], 0, env, false};
        cert.passed = lv.violations[i] <= env;
        res.certificates.push_back({id, i, cert, 0.0});
      }
      res.continuous.push_back({c.id, lv, env});
    }
    ok = medians_nonincreasing(levels) &&
         (levels.empty() || levels.back().fraction_within >= c.min_fraction);
  }
  res.suites.push_back({c.id, "certify", ok});
}

inline McReport run_mc(const McSuite& m, const RunConfig& cfg) {
  McOptions o{m.id, m.n_paths, cfg.seed, cfg.workers, cfg.tol.slack};
  if (m.kind == "ratio") return mc_ratio(m.scenario, m.stop, m.phi, o);
  if (m.kind == "bessel") {
    const auto& b = std::get<Bessel>(m.scenario.kind);
    return mc_bessel(b.alpha, b.x0, m.scenario.horizon, m.scenario.steps, m.stop, m.phi, o);
  }
  if (m.kind == "random_time") {
    return mc_random_time(m.scenario, std::get<IndependentTime>(m.stop.kind), m.phi, o);
  }
  if (m.kind == "randomized") {
    return mc_randomized(m.scenario, std::get<RandomizedTime>(m.stop.kind), m.phi, o);
  }
  if (m.kind == "change_of_measure") {
    return mc_change_of_measure(std::get<DriftedDiffusion>(m.scenario.kind), m.scenario.horizon,
                                m.scenario.steps, m.stop, o);
  }
  return mc_martingale_zero(m.scenario, m.integrand, m.stop, m.phi, o);
}

}  // namespace detail

/// Runs the suites selected by `mode`. Degenerate Monte Carlo scenarios
/// yield a failed report rather than an exception.
inline RunResult execute(const RunConfig& cfg, RunMode mode, bool dump_integrands = false) {
  RunResult res;
  if (mode != RunMode::Mc) {
    for (const auto& c : cfg.certify) detail::run_certify(c, cfg, dump_integrands, res);
  }
  if (mode != RunMode::Certify) {
    for (const auto& m : cfg.mc) {
      McReport r;
      try {
        r = detail::run_mc(m, cfg);
      } catch (const std::domain_error&) {
        r.scenario_id = m.id;
        r.n_paths = m.n_paths;
        r.passed = false;
      }
      res.mc.push_back(r);
      res.suites.push_back({m.id, "mc", r.passed});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline Json to_json(const McReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"id", c.id}, {"value", c.value}, {"se", c.se}, {"threshold", c.threshold},
                      {"passed", c.passed}});
  }
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"scenario_id", r.scenario_id},     {"n_paths", r.n_paths},
          {"mean_phi_qv", num(r.mean_phi_qv)}, {"mean_phi_max", num(r.mean_phi_max)},
          {"ratio", num(r.ratio)},             {"ci_low", num(r.ci_low)},
          {"ci_high", num(r.ci_high)},         {"bound_low", num(r.bound_low)},
          {"bound_high", num(r.bound_high)},   {"slack", r.slack},
          {"ratio_checked", r.ratio_checked},  {"checks", checks},
          {"passed", r.passed}};
}

inline void write_certificates_csv(std::ostream& out, const RunResult& res) {
  out << "suite_id,path_id,inequality_id,min_residual,argmin_time,passed\n";
  for (const auto& r : res.certificates) {
    out << r.suite_id << ',' << r.path_id << ',' << r.cert.id << ',' << fmt(r.cert.min_residual)
        << ',' << fmt(r.argmin_time) << ',' << (r.cert.passed ? 1 : 0) << '\n';
  }
}

inline void write_mc_summary_csv(std::ostream& out, const RunResult& res) {
  out << "scenario_id,n_paths,mean_phi_qv,mean_phi_max,ratio,ci_low,ci_high,bound_low,bound_high,"
         "slack,passed\n";
  for (const auto& r : res.mc) {
    out << r.scenario_id << ',' << r.n_paths << ',' << fmt(r.mean_phi_qv) << ','
        << fmt(r.mean_phi_max) << ',' << fmt(r.ratio) << ',' << fmt(r.ci_low) << ','
        << fmt(r.ci_high) << ',' << fmt(r.bound_low) << ',' << fmt(r.bound_high) << ','
        << fmt(r.slack) << ',' << (r.passed ? 1 : 0) << '\n';
  }
}

inline void write_continuous_csv(std::ostream& out, const RunResult& res) {
  out << "suite_id,steps,median,p99,max,fraction_within,envelope\n";
  for (const auto& c : res.continuous) {
    out << c.suite_id << ',' << c.level.steps << ',' << fmt(c.level.median) << ','
        << fmt(c.level.p99) << ',' << fmt(c.level.max) << ',' << fmt(c.level.fraction_within)
        << ',' << fmt(c.envelope) << '\n';
  }
}

inline Json manifest_json(const RunConfig& cfg, const RunResult& res, double wall_seconds) {
  Json suites = Json::object();
  for (const auto& s : res.suites) suites[s.id] = {{"type", s.type}, {"passed", s.passed}};
  return {{"config_digest", cfg.digest}, {"seed", cfg.seed},   {"version", kVersion},
          {"workers", cfg.workers},      {"suites", suites},   {"passed", res.passed()},
          {"wall_time_seconds", wall_seconds}};
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

/// Writes certificates.csv, continuous.csv, mc_reports.json, mc_summary.csv,
/// manifest.json and, when requested, integrands.csv into `dir`.
inline void write_reports(const std::filesystem::path& dir, const RunConfig& cfg,
                          const RunResult& res, double wall_seconds, bool dump_integrands) {
  std::filesystem::create_directories(dir);
  std::ostringstream cert, mcs, cont;
  write_certificates_csv(cert, res);
  write_mc_summary_csv(mcs, res);
  write_continuous_csv(cont, res);
  write_file(dir / "certificates.csv", cert.str());
  write_file(dir / "mc_summary.csv", mcs.str());
  write_file(dir / "continuous.csv", cont.str());
  Json reports = Json::array();
  for (const auto& r : res.mc) reports.push_back(to_json(r));
  write_file(dir / "mc_reports.json", reports.dump(2) + "\n");
  write_file(dir / "manifest.json", manifest_json(cfg, res, wall_seconds).dump(2) + "\n");
  if (dump_integrands) {
    std::ostringstream os;
    os << "suite_id,kind,index,time,value,integrand\n";
    for (const auto& r : res.integrands) {
      os << r.suite_id << ',' << r.kind << ',' << r.index << ',' << fmt(r.time) << ','
         << fmt(r.value) << ',' << fmt(r.integrand) << '\n';
    }
    write_file(dir / "integrands.csv", os.str());
  }
}

/// Output directory: explicit flag, then $PBDG_OUT_DIR, then ./pbdg_out.
inline std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PBDG_OUT_DIR"); env && *env) return env;
  return "pbdg_out";
}

/// Exit codes: 0 all suites pass, 1 some suite fails, 2 schema/config error.
inline int run(const std::filesystem::path& config, RunMode mode, const RunOverrides& o,
               const std::filesystem::path& out_dir, std::ostream& log) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(config);
    apply_overrides(cfg, o);
    const auto res = execute(cfg, mode, o.dump_integrands);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_reports(out_dir, cfg, res, wall, o.dump_integrands);
    for (const auto& s : res.suites) {
      log << (s.passed ? "PASS " : "FAIL ") << s.type << ' ' << s.id << '\n';
    }
    return res.passed() ? 0 : 1;
  } catch (const SchemaError& e) {
    log << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }
}

/// Re-runs the config once per value of `param` ("steps" or "n_paths") and
/// writes sweep.csv plus sweep_summary.json. Exit code as for run(), with
/// a non-monotone continuous-case median or p99 counting as a failure.
inline int sweep(const std::filesystem::path& config, const std::string& param,
                 const std::vector<std::size_t>& values, const RunOverrides& base,
                 const std::filesystem::path& out_dir, std::ostream& log) {
  try {
    if (param != "steps" && param != "n_paths") {
      throw SchemaError("sweep parameter must be 'steps' or 'n_paths'");
    }
    if (values.empty()) throw SchemaError("sweep needs at least one value");
    const auto cfg0 = load_config(config);
    std::ostringstream csv;
    csv << "parameter,value,suite_id,type,passed,ratio,ci_width,median_violation,p99_violation\n";
    std::map<std::string, std::vector<double>> medians, p99s, widths;
    bool all_pass = true;
    for (std::size_t v : values) {
      auto cfg = cfg0;
      RunOverrides o = base;
      (param == "steps" ? o.steps : o.n_paths) = v;
      apply_overrides(cfg, o);
      const auto res = execute(cfg, RunMode::All);
      all_pass = all_pass && res.passed();
      for (const auto& s : res.suites) {
        csv << param << ',' << v << ',' << s.id << ',' << s.type << ',' << (s.passed ? 1 : 0);
        const auto mc = std::find_if(res.mc.begin(), res.mc.end(),
                                     [&](const McReport& r) { return r.scenario_id == s.id; });
        const auto co = std::find_if(res.continuous.begin(), res.continuous.end(),
                                     [&](const ContinuousSummary& c) { return c.suite_id == s.id; });
        if (mc != res.mc.end()) {
          csv << ',' << fmt(mc->ratio) << ',' << fmt(mc->ci_high - mc->ci_low) << ",,";
          widths[s.id].push_back(mc->ci_high - mc->ci_low);
        } else if (co != res.continuous.end()) {
          csv << ",,," << fmt(co->level.median) << ',' << fmt(co->level.p99);
          medians[s.id].push_back(co->level.median);
          p99s[s.id].push_back(co->level.p99);
        } else {
          csv << ",,,,";
        }
        csv << '\n';
      }
    }
    auto nonincreasing = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) return false;
      }
      return true;
    };
    Json summary = {{"parameter", param}, {"values", values}, {"all_runs_passed", all_pass}};
    bool monotone = true;
    Json envelopes = Json::object();
    for (const auto& [id, m] : medians) {
      const bool ok = nonincreasing(m) && nonincreasing(p99s[id]);
      monotone = monotone && ok;
      envelopes[id] = {{"median", m}, {"p99", p99s[id]}, {"nonincreasing", ok}};
    }
    Json ci = Json::object();
    for (const auto& [id, w] : widths) ci[id] = {{"ci_width", w}, {"nonincreasing", nonincreasing(w)}};
    summary["continuous_envelopes"] = envelopes;
    summary["mc_ci_widths"] = ci;
    summary["envelopes_nonincreasing"] = monotone;
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "sweep.csv", csv.str());
    write_file(out_dir / "sweep_summary.json", summary.dump(2) + "\n");
    log << "sweep over " << param << ": " << values.size() << " values, "
        << (all_pass && monotone ? "PASS" : "FAIL") << '\n';
    return all_pass && monotone ? 0 : 1;
  } catch (const SchemaError& e) {
    log << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace pbdg
