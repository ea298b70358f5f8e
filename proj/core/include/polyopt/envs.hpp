#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace polyopt {

// One simultaneous action. Categorical environments read `discrete`;
// continuous (bidding) environments read `continuous`.
struct Action {
  int discrete = -1;
  double continuous = 0.0;
};

struct StepResult {
  Eigen::VectorXd rewards;
  bool done = false;
};

// Episodic multi-agent environment with simultaneous moves. reset(seed)
// fixes the full episode randomness; identical seeds give identical
// trajectories under identical action sequences. Instances are
// single-threaded; samplers clone one per worker.
class Env {
 public:
  virtual ~Env() = default;

  virtual int num_players() const = 0;
  virtual int obs_dim() const = 0;
  // Number of discrete actions per player; 0 means a scalar continuous action.
  virtual int num_actions() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  virtual Eigen::VectorXd observe(int player) const = 0;
  virtual StepResult step(const std::vector<Action>& actions) = 0;

  // Discrete state id for tabular baselines; nullopt when uncountable.
  virtual std::optional<int> state_key() const { return std::nullopt; }

  virtual std::unique_ptr<Env> clone() const = 0;
};

// ---------------------------------------------------------------------------
// Four-player gridworld soccer.
// ---------------------------------------------------------------------------

// Which penalty the two uninvolved players take when a goal is scored:
// kAppendix gives them -0.25, kMainText gives every non-scorer -1.
enum class SoccerRewardVariant { kAppendix, kMainText };

struct SoccerConfig {
  int width = 8;
  int height = 8;
  int step_cap = 200;  // capped episodes end with zero terminal reward
  SoccerRewardVariant reward_variant = SoccerRewardVariant::kAppendix;
};

// Actions: 0 up, 1 down, 2 left, 3 right, 4 stand. Coordinates: x grows
// rightward, y grows downward. Each player owns one full side of the board
// as its goal, clockwise from player 0: top, right, bottom, left. The
// ball-holder scores by walking off the board; crossing an opponent's side
// scores in that goal, crossing its own side is an own goal (scorer -1,
// others 0). Observations are the 56-vector of relative offsets described
// by soccer layout: per player a 14-vector (three opponent goals, ball,
// three opponents, all target minus self), concatenated in clockwise
// rotation starting with the observing player.
class SoccerEnv : public Env {
 public:
  explicit SoccerEnv(SoccerConfig config = {});

  int num_players() const override { return 4; }
  int obs_dim() const override { return 56; }
  int num_actions() const override { return 5; }

  void reset(std::uint64_t seed) override;
  Eigen::VectorXd observe(int player) const override;
  StepResult step(const std::vector<Action>& actions) override;
  std::unique_ptr<Env> clone() const override;

  struct Cell {
    int x = 0, y = 0;
    bool operator==(const Cell&) const = default;
  };

  // State accessors used by tests.
  Cell player_position(int i) const { return positions_[i]; }
  Cell ball_position() const;          // holder's cell when held
  int ball_holder() const { return holder_; }  // -1 when free
  int steps_taken() const { return steps_; }

  // Scenario setup: place players and ball explicitly (holder -1 = free ball).
  void set_state(const std::array<Cell, 4>& positions, Cell ball, int holder);

  const SoccerConfig& config() const { return config_; }

 private:
  bool in_grid(Cell c) const;
  int occupant(Cell c) const;  // player index or -1
  int goal_side(Cell off_grid_target) const;  // owner of the crossed side

  SoccerConfig config_;
  std::array<Cell, 4> positions_;
  Cell ball_cell_;
  int holder_ = -1;
  int steps_ = 0;
  std::uint64_t rng_state_ = 0;  // per-episode stream for processing order
};

// ---------------------------------------------------------------------------
// Electricity market bidding game.
// ---------------------------------------------------------------------------

struct GeneratorOffer {
  double cost = 0.0;      // currency per MWh
  double capacity = 0.0;  // MW offered
};

struct ClearingResult {
  Eigen::VectorXd dispatch;  // MW per offer, same order as input
  double price = 0.0;        // uniform system price; 0 when demand is 0
};

// Single-zone merit-order clearing: offers are dispatched in ascending cost
// until demand is met; the marginal cost level sets the price, and demand
// remaining inside a tied cost level is split pro rata by capacity. Total
// offered capacity must cover demand.
ClearingResult market_clearing(const std::vector<GeneratorOffer>& offers, double demand);

struct MarketConfig {
  std::array<double, 6> base_demands = {150, 300, 280, 250, 200, 300};
  std::array<double, 6> price_thresholds = {25, 25, 25, 35, 30, 25};
  double baseline_cost = 35.0;
  double baseline_capacity = 1000.0;
  std::array<int, 3> learner_buses = {0, 2, 4};
  std::array<double, 3> learner_costs = {20.0, 22.0, 24.0};
  double bid_min = 0.0;
  double bid_max = 10000.0;
  double profit_scale = 50.0;
  double end_probability = 0.2;
};

// Three learning generators submit capacity bids (their costs are fixed);
// one high-cost baseline generator per bus keeps the market feasible. The
// shared clearing price flips per-bus load flags (price strictly above the
// bus threshold halves that bus's demand next step), which is all the
// learners observe. Episodes end with fixed probability after each step.
class MarketEnv : public Env {
 public:
  explicit MarketEnv(MarketConfig config = {});

  int num_players() const override { return 3; }
  int obs_dim() const override { return 6; }
  int num_actions() const override { return 0; }  // continuous scalar bids

  void reset(std::uint64_t seed) override;
  Eigen::VectorXd observe(int player) const override;
  StepResult step(const std::vector<Action>& actions) override;
  std::unique_ptr<Env> clone() const override;

  std::optional<int> state_key() const override;

  double total_demand() const;
  const std::array<bool, 6>& load_flags() const { return flags_; }
  double last_price() const { return last_price_; }
  const MarketConfig& config() const { return config_; }

 private:
  MarketConfig config_;
  std::array<bool, 6> flags_ = {};
  double last_price_ = 0.0;
  std::uint64_t rng_state_ = 0;
};

// ---------------------------------------------------------------------------
// Scripted tabular MDPs (estimator oracles).
// ---------------------------------------------------------------------------

struct ScriptedMdpSpec {
  int num_states = 1;
  std::vector<int> actions_per_player;  // size n
  int horizon = 1;
  int initial_state = 0;
  // transitions[s][joint] -> list of (next state, probability); empty list
  // means the state is absorbing at reward 0. Joint actions are mixed-radix
  // with player 0 as the fastest-varying digit.
  std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions;
  // rewards[s][joint] -> per-player reward.
  std::vector<std::vector<Eigen::VectorXd>> rewards;

  int num_players() const { return static_cast<int>(actions_per_player.size()); }
  int joint_actions() const;
  int joint_index(const std::vector<Action>& actions) const;
  void validate() const;
};

// Observations are one-hot state encodings; state_key() exposes the state id.
class ScriptedMdpEnv : public Env {
 public:
  explicit ScriptedMdpEnv(ScriptedMdpSpec spec);

  int num_players() const override { return spec_.num_players(); }
  int obs_dim() const override { return spec_.num_states; }
  int num_actions() const override;  // requires uniform action count
  void reset(std::uint64_t seed) override;
  Eigen::VectorXd observe(int player) const override;
  StepResult step(const std::vector<Action>& actions) override;
  std::unique_ptr<Env> clone() const override;
  std::optional<int> state_key() const override { return state_; }

  const ScriptedMdpSpec& spec() const { return spec_; }

 private:
  ScriptedMdpSpec spec_;
  int state_ = 0;
  int t_ = 0;
  std::uint64_t rng_state_ = 0;
};

// Number of distinct trajectories (state-branch and action choices combined),
// used to guard enumeration.
long trajectory_combinations(const ScriptedMdpSpec& spec);

// One-step matching pennies: two players, two actions, zero-sum payoffs.
ScriptedMdpSpec matching_pennies();

// Two-state, two-player, two-action, horizon-2 general-sum MDP whose
// transition flips state when the players disagree. Small enough for exact
// trajectory enumeration, rich enough for nonzero mixed derivatives.
ScriptedMdpSpec two_state_mdp();

}  // namespace polyopt
