#include "guidelab/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"guidelab: diffusion guidance laboratory"};
  app.require_subcommand(1);

  guidelab::CommandLine cmd;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (falls back to $GUIDELAB_OUT)");
    sub->add_option("--seed", seed, "run seed; overrides the config");
    sub->add_option("--threads", cmd.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  for (const char* name : {"gen-data", "train-denoiser", "train-classifier", "sample", "eval"}) {
    add_common(app.add_subcommand(name));
  }
  auto* experiment = app.add_subcommand("experiment", "run an experiment preset");
  experiment->add_option("preset", cmd.preset, "preset name")
      ->required()
      ->check(CLI::IsMember(guidelab::experiment_presets()));
  add_common(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : guidelab::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  cmd.command = sub->get_name();
  if (sub->count("--config")) cmd.config_path = config;
  if (sub->count("--out")) cmd.out_dir = out;
  if (sub->count("--seed")) cmd.seed = seed;
  return guidelab::run_command(cmd, std::cout, std::cerr);
}
