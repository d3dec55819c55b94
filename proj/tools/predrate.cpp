#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "predrate/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential Bayesian predictive-density rate verifications"};
  app.require_subcommand(1, 1);

  predrate::RunOptions options;
  std::string config, out, verify;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config, "YAML plan");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--jobs", jobs, "replication threads (overrides the config)");
    sub->add_option("--verify", verify, "comma-separated verifications (overrides the config)");
  };
  add_common(app.add_subcommand("check", "static identities, inequalities and certifications"), true);
  add_common(app.add_subcommand("simulate", "every selected verification, Monte Carlo included"), true);
  add_common(app.add_subcommand("sieve", "covering and sieve construction report"), true);
  add_common(app.add_subcommand("report", "collect summary.csv files under --out"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : predrate::exit_status::config_error;
  }

  CLI::App* sub = app.get_subcommands().front();
  options.command = *predrate::parse_command(sub->get_name());
  if (!config.empty()) options.config = config;
  if (sub->count("--out")) options.out = out;
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--jobs")) options.jobs = jobs;
  if (sub->count("--verify")) {
    std::vector<std::string> names;
    std::stringstream ss(verify);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) names.push_back(item);
    }
    options.verify = names;
  }
  return predrate::run(options, std::cout, std::cerr);
}
