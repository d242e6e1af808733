#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "gpeopt/gpeopt.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of Bose-Einstein condensate trap transformations"};
  std::string command, config;
  std::optional<std::string> out;
  std::optional<int> level, threads;
  std::optional<double> continue_ms;
  bool check = false, quiet = false;

  app.add_option("command", command, "groundstate | propagate | optimize | bdg | reduce1d | extract")
      ->required()
      ->check(CLI::IsMember(gpeopt::subcommands()));
  app.add_option("-c,--config", config, "scenario TOML file")->required()->check(CLI::ExistingFile);
  app.add_option("-o,--out", out, "output directory (overrides output.directory)");
  app.add_option("--level", level, "run only this 1-based level of the schedule")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--continue-ms", continue_ms, "free evolution after T, in ms")->check(CLI::NonNegativeNumber);
  app.add_flag("--assert", check, "exit with code 3 if an [assert] check fails");
  app.add_flag("-q,--quiet", quiet, "no progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : gpeopt::exit_config;
  }

  if (threads) gpeopt::set_thread_count(*threads);
  gpeopt::ScenarioConfig cfg;
  try {
    cfg = gpeopt::parse_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gpeopt::exit_config;
  }

  gpeopt::RunOptions opts;
  if (out) opts.out = *out;
  opts.level = level;
  opts.continue_ms = continue_ms;
  opts.check = check;
  opts.log = quiet ? nullptr : &std::cerr;
  const auto r = gpeopt::run_scenario(cfg, command, opts);
  if (r.exit_code != gpeopt::exit_ok) {
    std::cerr << (r.exit_code == gpeopt::exit_assertion ? "" : "error: ") << r.message << "\n";
    return r.exit_code;
  }
  std::cout << r.summary.dump(2) << "\n";
  return 0;
}
