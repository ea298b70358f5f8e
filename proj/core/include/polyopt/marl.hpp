#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyopt/envs.hpp"
#include "polyopt/game.hpp"
#include "polyopt/policy.hpp"

namespace polyopt {

// One sampled episode. Per-step arrays all share the episode length.
struct EpisodeData {
  std::vector<std::vector<Eigen::VectorXd>> obs;  // [t][player]
  std::vector<std::vector<Action>> actions;       // [t][player]
  std::vector<std::vector<double>> log_probs;     // [t][player], behavior policy
  std::vector<Eigen::VectorXd> rewards;           // [t], length n
  std::vector<Eigen::VectorXd> values;            // [t], length n, baseline at s_t
  std::vector<int> state_keys;                    // [t], -1 when unavailable

  int length() const { return static_cast<int>(rewards.size()); }
};

struct TrajectoryBuffer {
  std::vector<EpisodeData> episodes;
  int num_players = 0;
  int resampled = 0;  // episodes discarded after environment faults
};

struct AdvantageTable {
  std::vector<Eigen::MatrixXd> advantages;     // [e], T x n
  std::vector<Eigen::MatrixXd> value_targets;  // [e], T x n (advantage + value)
};

struct PolicySet {
  std::vector<MlpPolicy> policies;

  BlockPartition partition() const;
  FlatParams init_params(std::uint64_t seed) const;
};

// State-value baseline; estimates are recorded into the buffer at sampling
// time so one optimizer step sees one consistent set of values.
class Baseline {
 public:
  virtual ~Baseline() = default;
  virtual double value(int player, const Eigen::VectorXd& obs,
                       std::optional<int> state_key) const = 0;
  virtual void fit(const TrajectoryBuffer& buffer, double gamma) = 0;

  // Named state blobs for checkpointing; default is stateless.
  virtual std::vector<std::pair<std::string, Eigen::VectorXd>> state() const { return {}; }
  virtual void restore(const std::vector<std::pair<std::string, Eigen::VectorXd>>& state);
};

class ZeroBaseline : public Baseline {
 public:
  double value(int, const Eigen::VectorXd&, std::optional<int>) const override { return 0.0; }
  void fit(const TrajectoryBuffer&, double) override {}
};

// Running per-state mean of discounted return-to-go, keyed by the
// environment's discrete state id. Only usable on tabular environments.
class TabularBaseline : public Baseline {
 public:
  explicit TabularBaseline(int num_players)
      : keys_(num_players), sums_(num_players), counts_(num_players) {}
  double value(int player, const Eigen::VectorXd& obs,
               std::optional<int> state_key) const override;
  void fit(const TrajectoryBuffer& buffer, double gamma) override;
  std::vector<std::pair<std::string, Eigen::VectorXd>> state() const override;
  void restore(const std::vector<std::pair<std::string, Eigen::VectorXd>>& state) override;

 private:
  int find_slot(int player, int key) const;  // index into the sorted key table, -1 if absent
  std::vector<std::vector<int>> keys_;       // sorted per player
  std::vector<std::vector<double>> sums_;
  std::vector<std::vector<double>> counts_;
};

// Per-player value network fit by plain full-batch gradient descent on
// discounted return-to-go (a fixed number of inner epochs per optimizer
// step).
class MlpBaseline : public Baseline {
 public:
  MlpBaseline(int num_players, Eigen::Index obs_dim, std::vector<Eigen::Index> hidden,
              double learning_rate, int epochs_per_fit, std::uint64_t seed);
  double value(int player, const Eigen::VectorXd& obs,
               std::optional<int> state_key) const override;
  void fit(const TrajectoryBuffer& buffer, double gamma) override;
  std::vector<std::pair<std::string, Eigen::VectorXd>> state() const override;
  void restore(const std::vector<std::pair<std::string, Eigen::VectorXd>>& state) override;

 private:
  MlpPolicy net_;  // shared architecture; scalar output head
  std::vector<Eigen::VectorXd> params_;  // per player
  double learning_rate_;
  int epochs_;
};

// Samples `batch` episodes with per-episode derived sub-seeds. Episodes are
// deterministic functions of their own seed, so worker fan-out merges into
// an order-identical buffer. Environment faults discard and resample the
// episode (counted in the buffer).
TrajectoryBuffer sample_trajectories(const Env& proto, const PolicySet& set,
                                     const FlatParams& theta, const Baseline* baseline,
                                     int batch, std::uint64_t seed, int workers = 1,
                                     int max_episode_steps = 100000);

// Generalized advantage estimation. With lambda = 1 and gamma = 1 the
// advantage equals undiscounted return-to-go minus the recorded value,
// computed through that identity so the equality is exact; lambda = 0 gives
// the one-step TD residual exactly.
AdvantageTable gae_advantages(const TrajectoryBuffer& buffer, double gamma, double lambda);

// Per-(episode, step, player) behavior log-probability graphs, built once
// per sampling pass at a fixed parameter vector and reused by every
// estimator call against that buffer (notably across all inner solver
// iterations). Owns a stable copy of theta so the graphs stay valid.
class ScoreTapes {
 public:
  ScoreTapes(const TrajectoryBuffer& buffer, const PolicySet& set, FlatParams theta);

  // grad log pi_p(a_t | s_t) . direction, by a forward-mode sweep.
  double contraction(std::size_t episode, int t, int player,
                     const Eigen::VectorXd& direction) const;

  // grad += coef * grad log pi_p(a_t | s_t).
  void accumulate(std::size_t episode, int t, int player, double coef,
                  Eigen::VectorXd& grad) const;

  const FlatParams& theta() const { return theta_; }

 private:
  FlatParams theta_;
  std::vector<std::vector<ad::Tape>> tapes_;          // [episode][t * n + player]
  std::vector<std::vector<ad::NodeId>> log_probs_;    // same shape
  int num_players_ = 0;
};

// Score-function estimate of the simultaneous gradient of the expected
// returns (ascent direction): block i is the batch mean of
// sum_t gamma^t grad log pi_i(a_t|s_t) A_i(t), with the advantages treated
// as constants so only first-order backward passes are needed.
FlatParams estimate_xi(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                       const PolicySet& set, const FlatParams& theta, double gamma);
FlatParams estimate_xi(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                       const ScoreTapes& tapes, double gamma);

// Score-function estimate of H_o v (or H_o^T v) for the expected-return
// game, using the three-term mixed-derivative expansion: the step-t score
// product plus the two log-probability history terms. Per-step score
// contractions with v are computed in a first (forward-mode) pass; the
// contracted pseudo-objective then needs only first-order backward passes.
FlatParams estimate_offdiag_hvp(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                                const PolicySet& set, const FlatParams& theta, double gamma,
                                const FlatParams& v, bool transpose = false);
FlatParams estimate_offdiag_hvp(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                                const ScoreTapes& tapes, double gamma, const FlatParams& v,
                                bool transpose = false);

struct EnumerationResult {
  Eigen::VectorXd returns;   // exact J per player
  Eigen::VectorXd xi;        // exact simultaneous gradient of J
  Eigen::MatrixXd hessian;   // exact game Hessian of J
};

// Exact expected returns by summing probability x return over every
// trajectory of a small scripted MDP.
Eigen::VectorXd exact_expected_returns(const ScriptedMdpSpec& spec, const PolicySet& set,
                                       const FlatParams& theta, double gamma);

// Independent oracle for the estimators: xi and H by central finite
// differences of the exact expected returns. Deliberately avoids the tape.
EnumerationResult exact_gradients_by_enumeration(const ScriptedMdpSpec& spec,
                                                 const PolicySet& set,
                                                 const FlatParams& theta, double gamma,
                                                 double fd_step = 1e-5);

enum class BaselineKind { kZero, kTabular, kMlp };

struct RlAdapterConfig {
  int batch = 16;
  double gamma = 0.99;
  double lambda = 0.95;
  int workers = 1;
  BaselineKind baseline = BaselineKind::kMlp;
  std::vector<Eigen::Index> baseline_hidden = {64, 32};
  double baseline_learning_rate = 1e-3;
  int baseline_epochs = 5;
};

// Presents a multi-agent RL problem as a Game. Rewards are negated at this
// boundary so the optimizers uniformly minimize. All oracle calls at the same
// parameter vector share one cached sampling pass; a call with changed
// parameters triggers a resample.
class RlGameAdapter : public Game {
 public:
  RlGameAdapter(std::unique_ptr<Env> env, PolicySet set, RlAdapterConfig config,
                std::uint64_t master_seed);

  const BlockPartition& partition() const override { return partition_; }
  Eigen::VectorXd losses(const FlatParams& theta) override;
  FlatParams simultaneous_gradient(const FlatParams& theta) override;
  FlatParams offdiag_hvp(const FlatParams& theta, const FlatParams& v) override;
  bool has_offdiag_hvp_transpose() const override { return true; }
  FlatParams offdiag_hvp_transpose(const FlatParams& theta, const FlatParams& v) override;
  bool pure_oracles() const override { return false; }

  // Mean per-player discounted return of the cached buffer (positive sign).
  Eigen::VectorXd mean_returns(const FlatParams& theta);

  long sample_passes() const { return sample_passes_; }
  void restore_sample_passes(long passes) { sample_passes_ = passes; }
  int last_resampled() const { return buffer_.resampled; }

  Baseline& baseline() { return *baseline_; }
  const PolicySet& policy_set() const { return set_; }
  const Env& env() const { return *env_; }

 private:
  void ensure_buffer(const FlatParams& theta);

  std::unique_ptr<Env> env_;
  PolicySet set_;
  BlockPartition partition_;
  RlAdapterConfig config_;
  std::unique_ptr<Baseline> baseline_;
  std::uint64_t master_seed_ = 0;
  long sample_passes_ = 0;

  bool cache_valid_ = false;
  Eigen::VectorXd cached_theta_;
  TrajectoryBuffer buffer_;
  AdvantageTable adv_;
  std::unique_ptr<ScoreTapes> tapes_;
  Eigen::VectorXd cached_mean_returns_;
};

}  // namespace polyopt
