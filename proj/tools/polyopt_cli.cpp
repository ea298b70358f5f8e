// Experiment runner: training loops, convergence-analysis sweeps, tournament
// evaluation and plot-data emission, all driven by JSON config files.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int workers = 1;
  std::string resume;
};

polyopt::RunOptions to_options(const CommonFlags& flags) {
  polyopt::RunOptions options;
  if (flags.seed_set) options.seed_override = flags.seed;
  if (!flags.out.empty()) options.out_override = flags.out;
  options.workers = flags.workers;
  options.resume_path = flags.resume;
  if (const char* root = std::getenv("POLYOPT_OUT_ROOT")) options.out_root = root;
  return options;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_resume) {
  cmd->add_option("config", flags.config_path, "JSON experiment config")->required();
  cmd->add_option("--seed", flags.seed, "override the master seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--out", flags.out, "override the output directory");
  cmd->add_option("--workers", flags.workers, "worker threads for sampling/episodes");
  if (with_resume) {
    cmd->add_option("--resume", flags.resume, "checkpoint to continue from");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyopt: multi-agent competitive-optimization experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, analyze_flags, tournament_flags;
  std::string plot_spec_path, plot_out;

  CLI::App* run = app.add_subcommand("run", "train on a bench game or MARL environment");
  add_common(run, run_flags, true);

  CLI::App* analyze =
      app.add_subcommand("analyze", "sweep convergence verdicts over a game family");
  add_common(analyze, analyze_flags, false);

  CLI::App* tournament =
      app.add_subcommand("tournament", "evaluate checkpoint populations head to head");
  add_common(tournament, tournament_flags, false);

  CLI::App* plotdata =
      app.add_subcommand("plotdata", "merge metrics CSVs into a long-format plot table");
  plotdata->add_option("spec", plot_spec_path, "JSON plot spec")->required();
  plotdata->add_option("--out", plot_out, "override the output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = polyopt::parse_config(run_flags.config_path);
      return polyopt::run_experiment(config, to_options(run_flags));
    }
    if (analyze->parsed()) {
      const auto config = polyopt::parse_config(analyze_flags.config_path);
      return polyopt::run_analysis_sweep(config, to_options(analyze_flags));
    }
    if (tournament->parsed()) {
      const auto config = polyopt::parse_config(tournament_flags.config_path);
      const auto report = polyopt::run_tournament(config, to_options(tournament_flags));
      std::cout << report.composition << ": team a " << report.wins_a << " / team b "
                << report.wins_b << " over " << report.episodes << " episodes\n";
      return 0;
    }
    if (plotdata->parsed()) {
      auto spec = polyopt::parse_plot_spec(plot_spec_path);
      if (!plot_out.empty()) spec.out = plot_out;
      polyopt::RunOptions options;
      if (const char* root = std::getenv("POLYOPT_OUT_ROOT")) options.out_root = root;
      return polyopt::emit_plot_data(spec, options);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
