#include <CLI11.hpp>

#include <iostream>
#include <utility>

#include "chain/config.hpp"
#include "chain/errors.hpp"
#include "chain/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"CHAIN normalization experiments: training runs, ablations, theorem checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"train", "one training run: metrics.csv + state_snapshot.txt"},
      {"verify", "property checks: verify_report.txt/.csv, exit 1 on any failure"},
      {"ablate", "one training run per listed variant, same seed"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : chain::kExitConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  chain::RunConfig config;
  try {
    config = chain::load_config(config_path);
  } catch (const chain::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return chain::kExitConfigError;
  }
  config.command = chain::parse_command(chosen->get_name());
  config.out_dir = out_dir;
  if (chosen->count("--seed") > 0) config.seed_override = seed;

  return chain::run_experiment(config, std::cerr);
}
