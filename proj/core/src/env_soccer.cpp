#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "polyopt/envs.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

namespace {

// up, down, left, right, stand
constexpr std::array<int, 5> kDx = {0, 0, -1, 1, 0};
constexpr std::array<int, 5> kDy = {-1, 1, 0, 0, 0};

// xorshift-style step on an explicit state; keeps episode randomness
// self-contained and clone-safe.
std::uint64_t next_u64(std::uint64_t& state) {
  state = split_seed(state, 0x51ed);
  return state;
}

// Uniform integer in [0, n) from the stream.
int next_below(std::uint64_t& state, int n) {
  return static_cast<int>(next_u64(state) % static_cast<std::uint64_t>(n));
}

double next_unit(std::uint64_t& state) {
  return static_cast<double>(next_u64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

SoccerEnv::SoccerEnv(SoccerConfig config) : config_(config) {
  if (config_.width < 2 || config_.height < 2) {
    throw ContractViolation("SoccerEnv: grid must be at least 2x2");
  }
  reset(0);
}

bool SoccerEnv::in_grid(Cell c) const {
  return c.x >= 0 && c.x < config_.width && c.y >= 0 && c.y < config_.height;
}

int SoccerEnv::occupant(Cell c) const {
  for (int i = 0; i < 4; ++i) {
    if (positions_[i] == c) return i;
  }
  return -1;
}

int SoccerEnv::goal_side(Cell target) const {
  // Sides clockwise from the top edge belong to players 0..3.
  if (target.y < 0) return 0;
  if (target.x >= config_.width) return 1;
  if (target.y >= config_.height) return 2;
  return 3;
}

SoccerEnv::Cell SoccerEnv::ball_position() const {
  return holder_ >= 0 ? positions_[holder_] : ball_cell_;
}

void SoccerEnv::reset(std::uint64_t seed) {
  rng_state_ = split_seed(seed, 0x50cce1);
  steps_ = 0;
  holder_ = -1;

  // Distinct random cells for the four players.
  const int cells = config_.width * config_.height;
  for (int i = 0; i < 4; ++i) {
    while (true) {
      const int c = next_below(rng_state_, cells);
      const Cell cell{c % config_.width, c / config_.width};
      bool clash = false;
      for (int j = 0; j < i; ++j) clash |= positions_[j] == cell;
      if (!clash) {
        positions_[i] = cell;
        break;
      }
    }
  }
  // The ball may land on a player, who then starts holding it.
  const int c = next_below(rng_state_, cells);
  ball_cell_ = Cell{c % config_.width, c / config_.width};
  holder_ = occupant(ball_cell_);
}

Eigen::VectorXd SoccerEnv::observe(int player) const {
  if (player < 0 || player >= 4) throw ContractViolation("SoccerEnv::observe: bad player");

  // Goal anchor: midpoint of the owned side, one step off-grid.
  auto goal_anchor = [&](int p) -> std::pair<double, double> {
    const double mx = (config_.width - 1) / 2.0;
    const double my = (config_.height - 1) / 2.0;
    switch (p) {
      case 0: return {mx, -1.0};
      case 1: return {static_cast<double>(config_.width), my};
      case 2: return {mx, static_cast<double>(config_.height)};
      default: return {-1.0, my};
    }
  };

  const Cell ball = ball_position();
  Eigen::VectorXd out(56);
  Eigen::Index pos = 0;
  // Local state of player q, relative to q's own cell: the three opponent
  // goals, the ball, and the three opponents, all in clockwise order from q.
  auto emit_local_state = [&](int q) {
    const Cell self = positions_[q];
    for (int step = 1; step <= 3; ++step) {
      const auto [gx, gy] = goal_anchor((q + step) % 4);
      out[pos++] = gx - self.x;
      out[pos++] = gy - self.y;
    }
    out[pos++] = static_cast<double>(ball.x - self.x);
    out[pos++] = static_cast<double>(ball.y - self.y);
    for (int step = 1; step <= 3; ++step) {
      const Cell other = positions_[(q + step) % 4];
      out[pos++] = static_cast<double>(other.x - self.x);
      out[pos++] = static_cast<double>(other.y - self.y);
    }
  };
  for (int step = 0; step < 4; ++step) emit_local_state((player + step) % 4);
  return out;
}

StepResult SoccerEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != 4) throw ContractViolation("SoccerEnv::step: need 4 actions");

  StepResult result;
  result.rewards = Eigen::VectorXd::Zero(4);

  // Actions are processed sequentially in a fresh random order each round,
  // so several steals may chain within one round.
  std::array<int, 4> order = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i) {
    std::swap(order[i], order[next_below(rng_state_, i + 1)]);
  }

  for (const int p : order) {
    const int a = actions[p].discrete;
    if (a < 0 || a > 4) throw ContractViolation("SoccerEnv::step: bad action");
    if (a == 4) continue;  // stand
    const Cell target{positions_[p].x + kDx[a], positions_[p].y + kDy[a]};

    if (!in_grid(target)) {
      if (holder_ != p) continue;  // off-grid moves are no-ops for non-holders
      const int goal_owner = goal_side(target);
      if (goal_owner == p) {
        // Own goal: scorer -1, everyone else 0.
        result.rewards[p] = -1.0;
      } else {
        result.rewards[p] = 1.0;
        for (int q = 0; q < 4; ++q) {
          if (q == p) continue;
          if (q == goal_owner) {
            result.rewards[q] = -1.0;
          } else {
            result.rewards[q] =
                config_.reward_variant == SoccerRewardVariant::kAppendix ? -0.25 : -1.0;
          }
        }
      }
      result.done = true;
      steps_ += 1;
      return result;
    }

    const int other = occupant(target);
    if (other >= 0 && other != p) {
      if (holder_ == other) holder_ = p;  // steal; both keep their positions
      continue;  // blocked cell: no movement either way
    }

    positions_[p] = target;
    if (holder_ < 0 && ball_cell_ == target) holder_ = p;  // pick up
  }

  steps_ += 1;
  if (steps_ >= config_.step_cap) result.done = true;
  return result;
}

std::unique_ptr<Env> SoccerEnv::clone() const {
  return std::make_unique<SoccerEnv>(*this);
}

void SoccerEnv::set_state(const std::array<Cell, 4>& positions, Cell ball, int holder) {
  for (int i = 0; i < 4; ++i) {
    if (!in_grid(positions[i])) throw ContractViolation("set_state: player off grid");
    for (int j = 0; j < i; ++j) {
      if (positions[i] == positions[j]) {
        throw ContractViolation("set_state: players must occupy distinct cells");
      }
    }
  }
  if (holder < -1 || holder >= 4) throw ContractViolation("set_state: bad holder");
  if (holder < 0 && !in_grid(ball)) throw ContractViolation("set_state: ball off grid");
  positions_ = positions;
  ball_cell_ = holder >= 0 ? positions[holder] : ball;
  holder_ = holder;
  steps_ = 0;
}

}  // namespace polyopt
