#include "racbf/commands.hpp"
#include "racbf/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"reach-avoid value functions and safety-filtered episodes"};
  app.require_subcommand(1);

  std::string config, out, value, seeds, transport = "stdio";
  bool force = false;
  std::vector<std::string> inputs;

  auto* solve = app.add_subcommand("solve", "solve the reach-avoid game on the configured grid");
  solve->add_option("--config", config, "run config (TOML)")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", out, "output directory (default: [run] out)");

  auto* simulate = app.add_subcommand("simulate", "run seeded episodes and write CSVs and a summary");
  simulate->add_option("--config", config, "run config (TOML)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--value", value, "value function (.ravg); default <out>/value.ravg when needed");
  simulate->add_option("--out", out, "output directory (default: [run] out)");
  simulate->add_option("--seeds", seeds, "seeds, e.g. 0-99 or 1,2,3 (default: [run] seeds)");
  simulate->add_flag("--force", force, "accept a value function solved for a different spec");

  auto* serve = app.add_subcommand("serve", "speak the episode protocol");
  serve->add_option("--config", config, "run config (TOML)")->required()->check(CLI::ExistingFile);
  serve->add_option("--value", value, "value function (.ravg); default <out>/value.ravg when needed");
  serve->add_option("--out", out, "directory holding value.ravg (default: [run] out)");
  serve->add_option("--transport", transport, "stdio or tcp:PORT");
  serve->add_flag("--force", force, "accept a value function solved for a different spec");

  auto* eval = app.add_subcommand("eval", "recompute the summary from episode CSVs");
  eval->add_option("--config", config, "run config (TOML)")->required()->check(CLI::ExistingFile);
  eval->add_option("run_dir", inputs, "directory written by simulate")->required()->expected(1);
  eval->add_option("--out", out, "output directory (default: the run directory)");

  auto* exp = app.add_subcommand("export", "merge per-episode tables into mean/std CSV tables");
  exp->add_option("inputs", inputs, "summary.csv files, run directories or learning-curve CSVs")->required();
  exp->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*exp) {
      racbf::cmd_export(inputs, out, std::cerr);
      return 0;
    }
    const racbf::RunConfig cfg = racbf::load_run_config(config);
    const bool out_given = !out.empty();
    if (!out_given) out = cfg.out_dir;
    auto value_path = [&] {
      if (!value.empty()) return value;
      const bool needed = cfg.episode.filter_enabled || cfg.episode.initial == racbf::InitialMode::SampledInTube ||
                          cfg.episode.disturbance == racbf::DisturbanceMode::WorstCase;
      return needed ? out + "/value.ravg" : std::string();
    };
    if (*solve) {
      racbf::cmd_solve(cfg, out, std::cerr);
    } else if (*simulate) {
      const auto seed_list = seeds.empty() ? cfg.seeds : racbf::parse_seeds(seeds);
      const auto summary = racbf::cmd_simulate(cfg, value_path(), out, seed_list, force, std::cerr);
      std::cout << summary.dump(2) << std::endl;
    } else if (*serve) {
      racbf::cmd_serve(cfg, value_path(), transport, force, std::cin, std::cout, std::cerr);
    } else if (*eval) {
      const auto summary = racbf::cmd_eval(cfg, inputs.front(), out_given ? out : inputs.front(), std::cerr);
      std::cout << summary.dump(2) << std::endl;
    }
  } catch (const racbf::InstabilityError& e) {
    std::cerr << "racbf: instability: " << e.what() << '\n';
    return 3;
  } catch (const racbf::ConfigError& e) {
    std::cerr << "racbf: config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "racbf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
