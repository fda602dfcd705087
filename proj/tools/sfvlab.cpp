#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sfv/workbench.hpp"

// sfvlab: experiment front-end. Exit codes: 0 success, 1 usage error,
// 2 runtime failure.

int main(int argc, char** argv) {
  CLI::App app{"skills-from-videos experiment workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string init_override;
  int iterations_override = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON")
        ->required();
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--seed", seed, "random seed");
  };

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "denoise pose predictions into a clip");
  add_common(reconstruct);
  CLI::App* train = app.add_subcommand("train", "train an imitation policy");
  add_common(train);
  train->add_option("--init", init_override,
                    "override init-state mode (fsi|rsi|asi)");
  train->add_option("--iterations", iterations_override,
                    "override iteration budget");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved policy");
  add_common(eval);
  CLI::App* ablate =
      app.add_subcommand("ablate", "init-mode ablation or k sweep");
  add_common(ablate);
  ablate->add_option("--iterations", iterations_override,
                     "override iteration budget");
  CLI::App* complete =
      app.add_subcommand("complete", "complete a motion from a query pose");
  add_common(complete);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    sfv::ExperimentConfig cfg = sfv::load_experiment_config(config_path);
    if (!init_override.empty()) cfg.init_mode = init_override;
    if (iterations_override > 0) cfg.iterations = iterations_override;
    cfg.validate();
    if (reconstruct->parsed()) return sfv::cmd_reconstruct(cfg, seed, out_dir);
    if (train->parsed()) return sfv::cmd_train(cfg, seed, out_dir);
    if (eval->parsed()) return sfv::cmd_eval(cfg, seed, out_dir);
    if (ablate->parsed()) return sfv::cmd_ablate(cfg, seed, out_dir);
    if (complete->parsed()) return sfv::cmd_complete(cfg, seed, out_dir);
    std::cerr << "no command selected\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
