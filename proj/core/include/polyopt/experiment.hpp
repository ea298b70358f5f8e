#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyopt/envs.hpp"
#include "polyopt/marl.hpp"
#include "polyopt/optimizers.hpp"

namespace polyopt {

// ---------------------------------------------------------------------------
// Declarative experiment configuration (JSON file with fixed sections; see
// README for the full key reference). Unknown keys are rejected by name.
// ---------------------------------------------------------------------------

struct ExperimentSection {
  std::string kind;  // bench | marl | analysis-sweep | tournament
  int epochs = 1;
  std::uint64_t seed = 0;
  std::string out = "runs/out";
  int checkpoint_every = 0;  // 0: only the final checkpoint
};

struct GameSection {
  std::string type;  // bilinear | four_player_example | random_quadratic
  double coupling = 1.0;
  std::vector<Eigen::Index> dims = {2, 2, 2};
  std::uint64_t seed = 0;
  double s_scale = 1.0;
  double a_scale = 1.0;
  std::vector<double> theta0;  // empty: all-ones start
};

struct EnvSection {
  std::string type;  // soccer | market
  SoccerConfig soccer;
  MarketConfig market;
};

struct MarlSection {
  int batch = 16;
  double gamma = 0.99;
  double lambda = 0.95;
  std::string baseline = "mlp";  // zero | tabular | mlp
  std::vector<Eigen::Index> hidden = {64, 32};
  std::vector<Eigen::Index> baseline_hidden = {64, 32};
  double sigma = 25.0;  // gaussian policy stddev (continuous-action envs)
  double baseline_learning_rate = 1e-3;
  int baseline_epochs = 5;
};

struct AnalysisSection {
  int seeds = 100;
  std::vector<Eigen::Index> dims = {2, 2, 2};
  double s_scale = 1.0;
  std::vector<double> a_scales = {1.0};
  std::vector<double> eta_grid;           // absolute step sizes
  std::vector<double> eta_bound_factors;  // relative: eta = factor / (4 ||S||)
};

struct TournamentSection {
  int episodes = 1000;
  std::string composition = "2v2";  // "<a>v<b>", a + b == players
  std::string checkpoint_a;
  std::string checkpoint_b;
};

struct ExperimentConfig {
  ExperimentSection experiment;
  OptimizerConfig optimizer;
  GameSection game;
  EnvSection env;
  MarlSection marl;
  AnalysisSection analysis;
  TournamentSection tournament;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// ---------------------------------------------------------------------------
// Checkpoints: versioned little-endian binary, written temp-then-rename so a
// crash mid-write never corrupts the previous file. Round trips are
// bit-identical.
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<Eigen::Index> dims;
  std::string architecture;  // policy-set descriptor, or "raw" for bench games
  Eigen::VectorXd values;
  std::uint64_t master_seed = 0;
  std::uint64_t step_index = 0;
  std::uint64_t sample_passes = 0;
  Eigen::VectorXd warm_start;  // previous linear-system solution; may be empty
  std::uint64_t opt_step_count = 0;
  std::vector<std::pair<std::string, Eigen::VectorXd>> extras;  // e.g. baselines
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

namespace detail {
void write_checkpoint_stream(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint_stream(std::istream& in);
}  // namespace detail

// Architecture descriptor round trip for checkpoints.
std::string policy_set_to_string(const PolicySet& set);
PolicySet policy_set_from_string(const std::string& descriptor);

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  std::string out_root;  // prefix for relative output dirs (env POLYOPT_OUT_ROOT)
  int workers = 1;
  std::string resume_path;  // checkpoint to continue from
};

// Builders shared by the runner, tournaments, and tests.
std::unique_ptr<Game> make_bench_game(const GameSection& section);
std::unique_ptr<Env> make_env(const EnvSection& section);
PolicySet make_policy_set(const Env& env, const MarlSection& marl);

// Shortest round-trip decimal rendering used for every CSV float, so reruns
// are byte-comparable.
std::string format_double(double v);

// Versioned CSV writers/readers. Metrics schema:
//   step,wall_ms,loss_0..loss_{n-1},xi_norm,step_norm,cg_iters,cg_residual,eta
extern const char* const kMetricsSchema;
extern const char* const kAnalysisSchema;
extern const char* const kTournamentSchema;
extern const char* const kPlotSchema;

// Runs a bench or marl training experiment: per-step CSV metrics, periodic
// checkpoints, final checkpoint. Returns the process exit status.
int run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// One convergence verdict per (game seed, a_scale, eta): spectral radius of
// the update map, the certified step bound, and the SimGD comparison radius.
int run_analysis_sweep(const ExperimentConfig& config, const RunOptions& options = {});

struct TournamentReport {
  std::string composition;
  int episodes = 0;
  int seats_a = 0, seats_b = 0;
  double wins_a = 0.0, wins_b = 0.0;  // fractional tie splits; sum == episodes
};

TournamentReport run_tournament(const ExperimentConfig& config,
                                const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Plot data: merges metrics CSVs into one long-format table (method, x,
// value) with optional moving average; no rendering.
// ---------------------------------------------------------------------------

struct PlotInput {
  std::string path;
  std::string method;
};

struct PlotSpec {
  std::vector<PlotInput> inputs;
  std::string metric = "loss_0";
  std::string x = "step";  // step | wall_ms
  int moving_average = 0;  // 0: off; must not exceed the series length
  bool negate = false;
  std::string out;
};

PlotSpec parse_plot_spec(const std::string& path);
int emit_plot_data(const PlotSpec& spec, const RunOptions& options = {});

}  // namespace polyopt
