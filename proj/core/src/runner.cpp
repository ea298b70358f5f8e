#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "polyopt/analysis.hpp"
#include "polyopt/bench_games.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/experiment.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

const char* const kMetricsSchema = "# polyopt.metrics.v1";
const char* const kAnalysisSchema = "# polyopt.analysis.v1";
const char* const kTournamentSchema = "# polyopt.tournament.v1";
const char* const kPlotSchema = "# polyopt.plotdata.v1";

std::string format_double(double v) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, result.ptr);
}

std::unique_ptr<Game> make_bench_game(const GameSection& section) {
  if (section.type == "bilinear") return bilinear_game(section.coupling);
  if (section.type == "four_player_example") return four_player_example();
  if (section.type == "random_quadratic") {
    return std::make_unique<QuadraticPolymatrixGame>(random_quadratic_polymatrix(
        section.seed, section.dims, section.s_scale, section.a_scale));
  }
  throw ConfigError("unknown game type '" + section.type + "'");
}

std::unique_ptr<Env> make_env(const EnvSection& section) {
  if (section.type == "soccer") return std::make_unique<SoccerEnv>(section.soccer);
  if (section.type == "market") return std::make_unique<MarketEnv>(section.market);
  throw ConfigError("unknown env type '" + section.type + "'");
}

PolicySet make_policy_set(const Env& env, const MarlSection& marl) {
  PolicySet set;
  for (int i = 0; i < env.num_players(); ++i) {
    MlpPolicy policy;
    policy.layers.push_back(env.obs_dim());
    for (Eigen::Index h : marl.hidden) policy.layers.push_back(h);
    if (env.num_actions() > 0) {
      policy.layers.push_back(env.num_actions());
      policy.head = PolicyHead::kCategoricalLogits;
    } else {
      policy.layers.push_back(1);
      policy.head = PolicyHead::kGaussianMean;
      policy.sigma = marl.sigma;
    }
    set.policies.push_back(std::move(policy));
  }
  return set;
}

namespace {

namespace fs = std::filesystem;

fs::path resolve_out_dir(const ExperimentConfig& config, const RunOptions& options) {
  fs::path out(options.out_override.value_or(config.experiment.out));
  if (!options.out_root.empty() && out.is_relative()) {
    out = fs::path(options.out_root) / out;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  return out;
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "zero") return BaselineKind::kZero;
  if (name == "tabular") return BaselineKind::kTabular;
  if (name == "mlp") return BaselineKind::kMlp;
  throw ConfigError("unknown baseline '" + name + "'");
}

std::ofstream open_csv(const fs::path& path, const char* schema,
                       const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << schema << "\n" << header << "\n";
  return out;
}

std::string metrics_header(int players) {
  std::string header = "step,wall_ms";
  for (int i = 0; i < players; ++i) header += ",loss_" + std::to_string(i);
  header += ",xi_norm,step_norm,cg_iters,cg_residual,eta";
  return header;
}

void write_metrics_row(std::ofstream& out, long step, double wall_ms,
                       const UpdateReport& report, double eta) {
  out << step << ',' << format_double(wall_ms);
  for (Eigen::Index i = 0; i < report.losses.size(); ++i) {
    out << ',' << format_double(report.losses[i]);
  }
  out << ',' << format_double(report.grad_norm) << ',' << format_double(report.step_norm)
      << ',' << report.cg_iterations << ',' << format_double(report.cg_residual) << ','
      << format_double(eta) << '\n';
}

struct RunContext {
  std::unique_ptr<Game> game;
  RlGameAdapter* adapter = nullptr;  // non-null for marl runs
  FlatParams theta;
  std::string architecture = "raw";
};

RunContext build_run_context(const ExperimentConfig& config, std::uint64_t seed,
                             int workers) {
  RunContext ctx;
  if (config.experiment.kind == "bench") {
    ctx.game = make_bench_game(config.game);
    const BlockPartition& partition = ctx.game->partition();
    ctx.theta = FlatParams(partition, Eigen::VectorXd::Ones(partition.total));
    if (!config.game.theta0.empty()) {
      if (static_cast<Eigen::Index>(config.game.theta0.size()) != partition.total) {
        throw ConfigError("game.theta0 length does not match the game dimension");
      }
      for (Eigen::Index i = 0; i < partition.total; ++i) {
        ctx.theta.values[i] = config.game.theta0[i];
      }
    }
    return ctx;
  }
  if (config.experiment.kind == "marl") {
    std::unique_ptr<Env> env = make_env(config.env);
    PolicySet set = make_policy_set(*env, config.marl);
    ctx.architecture = policy_set_to_string(set);
    ctx.theta = set.init_params(seed);
    RlAdapterConfig adapter_config;
    adapter_config.batch = config.marl.batch;
    adapter_config.gamma = config.marl.gamma;
    adapter_config.lambda = config.marl.lambda;
    adapter_config.workers = workers;
    adapter_config.baseline = baseline_kind_from_string(config.marl.baseline);
    adapter_config.baseline_hidden = config.marl.baseline_hidden;
    adapter_config.baseline_learning_rate = config.marl.baseline_learning_rate;
    adapter_config.baseline_epochs = config.marl.baseline_epochs;
    auto adapter = std::make_unique<RlGameAdapter>(std::move(env), std::move(set),
                                                   adapter_config, seed);
    ctx.adapter = adapter.get();
    ctx.game = std::move(adapter);
    return ctx;
  }
  throw ConfigError("run_experiment: kind must be bench or marl");
}

Checkpoint make_checkpoint(const RunContext& ctx, const Stepper& stepper,
                           std::uint64_t seed, long step_index) {
  Checkpoint checkpoint;
  checkpoint.dims = ctx.theta.partition.dims;
  checkpoint.architecture = ctx.architecture;
  checkpoint.values = ctx.theta.values;
  checkpoint.master_seed = seed;
  checkpoint.step_index = static_cast<std::uint64_t>(step_index);
  checkpoint.warm_start = stepper.state().prev_cg_solution;
  checkpoint.opt_step_count = static_cast<std::uint64_t>(stepper.state().step_count);
  if (ctx.adapter) {
    checkpoint.sample_passes = static_cast<std::uint64_t>(ctx.adapter->sample_passes());
    checkpoint.extras = ctx.adapter->baseline().state();
  }
  return checkpoint;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const std::uint64_t seed = options.seed_override.value_or(config.experiment.seed);
  const fs::path out_dir = resolve_out_dir(config, options);

  RunContext ctx = build_run_context(config, seed, options.workers);
  Stepper stepper(config.optimizer);

  long start_step = 0;
  if (!options.resume_path.empty()) {
    const Checkpoint checkpoint = load_checkpoint(options.resume_path);
    if (checkpoint.architecture != ctx.architecture ||
        checkpoint.dims != ctx.theta.partition.dims) {
      throw IoError("resume: checkpoint is incompatible with this experiment");
    }
    ctx.theta.values = checkpoint.values;
    StepState state;
    state.prev_cg_solution = checkpoint.warm_start;
    state.step_count = static_cast<long>(checkpoint.opt_step_count);
    stepper.restore_state(std::move(state));
    if (ctx.adapter) {
      ctx.adapter->restore_sample_passes(static_cast<long>(checkpoint.sample_passes));
      ctx.adapter->baseline().restore(checkpoint.extras);
    }
    start_step = static_cast<long>(checkpoint.step_index);
  }

  const int players = ctx.game->partition().players();
  std::ofstream csv = open_csv(out_dir / "metrics.csv", kMetricsSchema,
                               metrics_header(players));

  for (long step = start_step; step < config.experiment.epochs; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const UpdateReport report = stepper.step(*ctx.game, ctx.theta);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    write_metrics_row(csv, step, wall_ms, report, config.optimizer.eta);
    if (!csv) throw IoError("metrics write failed");

    if (config.experiment.checkpoint_every > 0 &&
        (step + 1) % config.experiment.checkpoint_every == 0) {
      save_checkpoint((out_dir / ("ckpt_" + std::to_string(step + 1) + ".bin")).string(),
                      make_checkpoint(ctx, stepper, seed, step + 1));
    }
  }
  csv.flush();

  save_checkpoint((out_dir / "ckpt_final.bin").string(),
                  make_checkpoint(ctx, stepper, seed, config.experiment.epochs));
  return 0;
}

int run_analysis_sweep(const ExperimentConfig& config, const RunOptions& options) {
  if (config.experiment.kind != "analysis-sweep") {
    throw ConfigError("run_analysis_sweep: experiment.kind must be analysis-sweep");
  }
  const std::uint64_t seed_base = options.seed_override.value_or(config.experiment.seed);
  const fs::path out_dir = resolve_out_dir(config, options);
  std::ofstream csv =
      open_csv(out_dir / "analysis.csv", kAnalysisSchema,
               "seed,a_scale,eta,rho,simgd_rho,step_bound,is_local_nash,converges");

  const AnalysisSection& sweep = config.analysis;
  AnalysisOptions analysis_options;

  for (int index = 0; index < sweep.seeds; ++index) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(index);
    for (double a_scale : sweep.a_scales) {
      QuadraticPolymatrixGame game =
          random_quadratic_polymatrix(seed, sweep.dims, sweep.s_scale, a_scale);
      const BlockPartition& partition = game.partition();
      const FlatParams origin(partition);
      const Eigen::MatrixXd h = game.dense_hessian(origin);
      const HessianDecomposition parts = decompose(h, partition);
      const double bound = theorem_step_bound(parts.s, analysis_options);
      const bool local_nash = check_local_nash(game, origin, 1e-9, analysis_options);

      std::vector<double> etas = sweep.eta_grid;
      for (double factor : sweep.eta_bound_factors) etas.push_back(factor * bound);

      for (double eta : etas) {
        const Eigen::MatrixXd jacobian = pcgd_update_jacobian(h, partition, eta);
        const SpectralEstimate rho = spectral_radius(
            LinearOperator::from_dense(jacobian), analysis_options.spectral_tol,
            analysis_options.spectral_max_iter, analysis_options.spectral_restarts);
        const Eigen::MatrixXd simgd_jacobian =
            Eigen::MatrixXd::Identity(h.rows(), h.cols()) - eta * h;
        const SpectralEstimate simgd_rho = spectral_radius(
            LinearOperator::from_dense(simgd_jacobian), analysis_options.spectral_tol,
            analysis_options.spectral_max_iter, analysis_options.spectral_restarts);

        csv << seed << ',' << format_double(a_scale) << ',' << format_double(eta) << ','
            << format_double(rho.value) << ',' << format_double(simgd_rho.value) << ','
            << format_double(bound) << ',' << (local_nash ? 1 : 0) << ','
            << (rho.value < 1.0 - analysis_options.rho_margin ? 1 : 0) << '\n';
      }
    }
  }
  return 0;
}

}  // namespace polyopt
