#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "acflow/acflow.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acflow: artificial-compression incompressible flow solver"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const acflow::RunConfig&, const std::filesystem::path&);
  };
  const Command commands[] = {
      {"run", "time-step a configured flow; writes norms, ledgers, schedule and snapshots", acflow::cmd_run},
      {"convergence", "temporal convergence study against a manufactured solution", acflow::cmd_convergence},
      {"adapt", "divergence-driven halving-and-doubling run", acflow::cmd_adapt},
      {"acoustic", "linear acoustic sub-model and its energy identities", acflow::cmd_acoustic},
      {"validate-schedule", "slow-variation audit of a step/eps schedule", acflow::cmd_validate_schedule},
  };

  std::string config_path, out_dir;
  const Command* chosen = nullptr;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "configuration file (key = value)")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->callback([&chosen, &c] { chosen = &c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : acflow::kExitConfig;
  }

  acflow::RunConfig cfg;
  const int load = acflow::run_guarded([&] {
    cfg = acflow::load_config(config_path);
    return 0;
  });
  if (load != 0) return load;
  return chosen->fn(cfg, out_dir);
}
