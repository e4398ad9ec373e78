// Command-line front end: one verb per run mode.
//
//   tirepde simulate --config scenarios/open_loop.cfg --out out/open
//   tirepde observe  --set observer.eta=10 --seed 7
//   tirepde analyze | certify | acceptance | run
//
// Settings resolve as defaults < config file < --set < --out/--seed.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tirepde/tirepde.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "scenario file (key = value)");
  cmd->add_option("-o,--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "noise seed");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set grid.cells=100")
      ->allow_extra_args(false);
  cmd->add_flag("--print-config", c.print_config, "print the effective configuration and exit");
}

tirepde::ScenarioConfig resolve(const Common& c, std::optional<tirepde::RunMode> mode) {
  tirepde::ScenarioConfig cfg;
  if (!c.config.empty()) cfg = tirepde::parse_config_file(c.config);
  for (const auto& kv : c.overrides) tirepde::apply_override(cfg, kv);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (mode) cfg.mode = *mode;
  tirepde::validate(cfg);
  return cfg;
}

int run_acceptance(const std::vector<int>& ids, bool verbose, const std::string& csv) {
  namespace acc = tirepde::acceptance;
  acc::Context ctx;
  std::vector<acc::CriterionResult> results;
  std::vector<int> selected = ids;
  if (selected.empty()) {
    for (int id = 1; id <= static_cast<int>(acc::criteria().size()); ++id) selected.push_back(id);
  }
  for (int id : selected) {
    results.push_back(acc::run_criterion(id, ctx));
    std::cout << acc::result_line(results.back()) << std::endl;
    if (verbose) {
      for (const auto& n : results.back().notes) std::cout << "      " << n << "\n";
    }
  }
  if (!csv.empty()) {
    std::ofstream os(csv);
    acc::write_results_csv(os, results);
  }
  for (const auto& r : results) {
    if (!r.passed) return tirepde::kExitAcceptance;
  }
  return tirepde::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle lateral dynamics with distributed tire friction: simulation, observer "
               "synthesis and analysis"};
  app.require_subcommand(1);

  struct Verb {
    const char* name;
    const char* help;
    std::optional<tirepde::RunMode> mode;
  };
  const Verb verbs[] = {
      {"simulate", "open-loop plant simulation", tirepde::RunMode::open_loop},
      {"observe", "plant, sensors and observer on one clock", tirepde::RunMode::closed_loop},
      {"analyze", "frequency responses and the small-gain check",
       tirepde::RunMode::freq_analysis},
      {"certify", "certify that C(s)^{-1} has no closed right-half-plane poles",
       tirepde::RunMode::certify_poles},
      {"run", "run the mode named in the configuration", std::nullopt},
  };
  std::vector<Common> common(std::size(verbs));
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < std::size(verbs); ++i) {
    cmds.push_back(app.add_subcommand(verbs[i].name, verbs[i].help));
    add_common(cmds.back(), common[i]);
  }

  std::vector<int> criteria;
  bool verbose = false;
  std::string csv;
  CLI::App* acc = app.add_subcommand("acceptance", "run the acceptance criteria");
  acc->add_option("--criterion", criteria, "criterion number (repeatable; default all)")
      ->check(CLI::Range(1, 12));
  acc->add_flag("-v,--verbose", verbose, "print supporting measurements");
  acc->add_option("--csv", csv, "write a machine-readable results table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tirepde::kExitConfig;
  }

  if (acc->parsed()) return run_acceptance(criteria, verbose, csv);

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!cmds[i]->parsed()) continue;
    tirepde::ScenarioConfig cfg;
    try {
      cfg = resolve(common[i], verbs[i].mode);
    } catch (const tirepde::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return tirepde::kExitConfig;
    }
    if (common[i].print_config) {
      std::cout << tirepde::describe(cfg);
      return tirepde::kExitOk;
    }
    return tirepde::run(cfg, std::cerr);
  }
  return tirepde::kExitConfig;
}
