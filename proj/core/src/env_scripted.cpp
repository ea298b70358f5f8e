#include <cmath>
#include <string>

#include "polyopt/envs.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

namespace {

std::uint64_t next_u64(std::uint64_t& state) {
  state = split_seed(state, 0x5c71);
  return state;
}

double next_unit(std::uint64_t& state) {
  return static_cast<double>(next_u64(state) >> 11) * 0x1.0p-53;
}

}  // namespace


int ScriptedMdpSpec::joint_actions() const {
  int joint = 1;
  for (int a : actions_per_player) joint *= a;
  return joint;
}

int ScriptedMdpSpec::joint_index(const std::vector<Action>& actions) const {
  int idx = 0, stride = 1;
  for (std::size_t p = 0; p < actions_per_player.size(); ++p) {
    const int a = actions[p].discrete;
    if (a < 0 || a >= actions_per_player[p]) {
      throw ContractViolation("ScriptedMdp: action out of range");
    }
    idx += stride * a;
    stride *= actions_per_player[p];
  }
  return idx;
}

void ScriptedMdpSpec::validate() const {
  if (num_states < 1 || horizon < 1 || actions_per_player.empty()) {
    throw ContractViolation("ScriptedMdpSpec: malformed spec");
  }
  if (initial_state < 0 || initial_state >= num_states) {
    throw ContractViolation("ScriptedMdpSpec: bad initial state");
  }
  const int joint = joint_actions();
  if (transitions.size() != static_cast<std::size_t>(num_states) ||
      rewards.size() != static_cast<std::size_t>(num_states)) {
    throw ContractViolation("ScriptedMdpSpec: table size mismatch");
  }
  for (int s = 0; s < num_states; ++s) {
    if (transitions[s].size() != static_cast<std::size_t>(joint) ||
        rewards[s].size() != static_cast<std::size_t>(joint)) {
      throw ContractViolation("ScriptedMdpSpec: table size mismatch at state " +
                              std::to_string(s));
    }
    for (int j = 0; j < joint; ++j) {
      if (rewards[s][j].size() != num_players()) {
        throw ContractViolation("ScriptedMdpSpec: reward vector length mismatch");
      }
      double total = 0;
      for (const auto& [next, prob] : transitions[s][j]) {
        if (next < 0 || next >= num_states || prob < 0) {
          throw ContractViolation("ScriptedMdpSpec: bad transition entry");
        }
        total += prob;
      }
      if (!transitions[s][j].empty() && std::abs(total - 1.0) > 1e-12) {
        throw ContractViolation("ScriptedMdpSpec: transition probabilities must sum to 1");
      }
    }
  }
}

ScriptedMdpEnv::ScriptedMdpEnv(ScriptedMdpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  reset(0);
}

int ScriptedMdpEnv::num_actions() const {
  const int a = spec_.actions_per_player[0];
  for (int ap : spec_.actions_per_player) {
    if (ap != a) {
      throw ContractViolation("ScriptedMdpEnv: players have differing action counts");
    }
  }
  return a;
}

void ScriptedMdpEnv::reset(std::uint64_t seed) {
  rng_state_ = split_seed(seed, 0x3d9);
  state_ = spec_.initial_state;
  t_ = 0;
}

Eigen::VectorXd ScriptedMdpEnv::observe(int player) const {
  if (player < 0 || player >= num_players()) {
    throw ContractViolation("ScriptedMdpEnv::observe: bad player");
  }
  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(spec_.num_states);
  onehot[state_] = 1.0;
  return onehot;
}

StepResult ScriptedMdpEnv::step(const std::vector<Action>& actions) {
  if (static_cast<int>(actions.size()) != num_players()) {
    throw ContractViolation("ScriptedMdpEnv::step: wrong action count");
  }
  const int joint = spec_.joint_index(actions);
  StepResult result;
  result.rewards = spec_.rewards[state_][joint];

  const auto& branches = spec_.transitions[state_][joint];
  if (!branches.empty()) {
    const double u = next_unit(rng_state_);
    double acc = 0;
    int next = branches.back().first;
    for (const auto& [candidate, prob] : branches) {
      acc += prob;
      if (u < acc) {
        next = candidate;
        break;
      }
    }
    state_ = next;
  }
  t_ += 1;
  result.done = t_ >= spec_.horizon;
  return result;
}

std::unique_ptr<Env> ScriptedMdpEnv::clone() const {
  return std::make_unique<ScriptedMdpEnv>(*this);
}

long trajectory_combinations(const ScriptedMdpSpec& spec) {
  long per_step = spec.joint_actions();
  int max_branch = 1;
  for (const auto& per_state : spec.transitions) {
    for (const auto& branches : per_state) {
      max_branch = std::max(max_branch, static_cast<int>(branches.size()));
    }
  }
  long total = 1;
  for (int t = 0; t < spec.horizon; ++t) {
    total *= per_step * max_branch;
    if (total > 1000000L) return total;  // early out; caller will reject
  }
  return total;
}

ScriptedMdpSpec matching_pennies() {
  ScriptedMdpSpec spec;
  spec.num_states = 1;
  spec.actions_per_player = {2, 2};
  spec.horizon = 1;
  spec.transitions = {{{}, {}, {}, {}}};
  Eigen::VectorXd win(2), lose(2);
  win << 1, -1;
  lose << -1, 1;
  // joint index = a0 + 2*a1; player 0 wins on a match.
  spec.rewards = {{win, lose, lose, win}};
  return spec;
}

ScriptedMdpSpec two_state_mdp() {
  ScriptedMdpSpec spec;
  spec.num_states = 2;
  spec.actions_per_player = {2, 2};
  spec.horizon = 2;
  spec.initial_state = 0;
  spec.transitions.assign(2, std::vector<std::vector<std::pair<int, double>>>(4));
  spec.rewards.assign(2, std::vector<Eigen::VectorXd>(4));
  auto joint = [](int a0, int a1) { return a0 + 2 * a1; };
  const double r1[2][2][2] = {{{1.0, -0.5}, {0.2, 0.7}}, {{0.3, 0.9}, {-0.2, 0.4}}};
  const double r2[2][2][2] = {{{-0.6, 0.8}, {0.5, -0.1}}, {{0.2, -0.7}, {0.6, 0.1}}};
  for (int s = 0; s < 2; ++s) {
    for (int a0 = 0; a0 < 2; ++a0) {
      for (int a1 = 0; a1 < 2; ++a1) {
        const int next = (a0 == a1) ? s : 1 - s;
        spec.transitions[s][joint(a0, a1)] = {{next, 1.0}};
        Eigen::VectorXd r(2);
        r << r1[s][a0][a1], r2[s][a0][a1];
        spec.rewards[s][joint(a0, a1)] = r;
      }
    }
  }
  return spec;
}

}  // namespace polyopt
