// Command-line front end: pbdg {certify,mc,all,sweep} --config FILE [options]

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbdg/runner.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double horizon = 0.0;
  unsigned workers = 0;
  bool dump = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory (default: $PBDG_OUT_DIR or ./pbdg_out)");
  sub->add_option("--seed", f.seed, "override the config seed");
  sub->add_option("--steps", f.steps, "override grid steps")->check(CLI::PositiveNumber);
  sub->add_option("--horizon", f.horizon, "override the horizon")->check(CLI::PositiveNumber);
  sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

pbdg::RunOverrides overrides(const CLI::App* sub, const CommonFlags& f) {
  pbdg::RunOverrides o;
  if (sub->count("--seed")) o.seed = f.seed;
  if (sub->count("--steps")) o.steps = f.steps;
  if (sub->count("--horizon")) o.horizon = f.horizon;
  if (sub->count("--workers")) o.workers = f.workers;
  o.dump_integrands = f.dump;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathwise BDG certificates and Monte Carlo ratio checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pbdg::kVersion));

  CommonFlags flags;
  std::string param;
  std::string values;

  auto* certify = app.add_subcommand("certify", "run the certificate suites");
  auto* mc = app.add_subcommand("mc", "run the Monte Carlo suites");
  auto* all = app.add_subcommand("all", "run every suite");
  auto* sweep = app.add_subcommand("sweep", "rerun the config over a list of values");
  for (auto* s : {certify, mc, all, sweep}) add_common(s, flags);
  for (auto* s : {certify, all}) {
    s->add_flag("--dump-integrands", flags.dump, "write integrands.csv for the first path of each suite");
  }
  sweep->add_option("--param", param, "steps or n_paths")->required()->check(CLI::IsMember({"steps", "n_paths"}));
  sweep->add_option("--values", values, "comma-separated values, e.g. 256,1024")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto out = pbdg::output_dir(flags.out);
  if (*sweep) {
    std::vector<std::size_t> vals;
    std::stringstream ss(values);
    for (std::string tok; std::getline(ss, tok, ',');) {
      try {
        vals.push_back(std::stoul(tok));
      } catch (const std::exception&) {
        std::cerr << "bad --values entry '" << tok << "'\n";
        return 2;
      }
    }
    return pbdg::sweep(flags.config, param, vals, overrides(sweep, flags), out, std::cout);
  }
  auto* sub = *certify ? certify : *mc ? mc : all;
  const auto mode = *certify ? pbdg::RunMode::Certify : *mc ? pbdg::RunMode::Mc : pbdg::RunMode::All;
  return pbdg::run(flags.config, mode, overrides(sub, flags), out, std::cout);
}
