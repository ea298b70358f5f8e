#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyopt/envs.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

namespace {

std::uint64_t next_u64(std::uint64_t& state) {
  state = split_seed(state, 0x6d6b);
  return state;
}

double next_unit(std::uint64_t& state) {
  return static_cast<double>(next_u64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

ClearingResult market_clearing(const std::vector<GeneratorOffer>& offers, double demand) {
  if (demand < 0) throw ContractViolation("market_clearing: negative demand");
  ClearingResult result;
  result.dispatch = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offers.size()));
  if (demand == 0.0) return result;  // degenerate: no dispatch, price 0

  double available = 0.0;
  for (const auto& offer : offers) {
    if (offer.capacity < 0 || offer.cost < 0 || !std::isfinite(offer.capacity)) {
      throw ContractViolation("market_clearing: malformed offer");
    }
    available += offer.capacity;
  }
  if (available + 1e-9 < demand) {
    throw NumericError("market_clearing: infeasible, offered capacity below demand");
  }

  // Ascending cost, generator index as the deterministic tiebreak.
  std::vector<std::size_t> order(offers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (offers[a].cost != offers[b].cost) return offers[a].cost < offers[b].cost;
    return a < b;
  });

  double remaining = demand;
  std::size_t i = 0;
  while (i < order.size() && remaining > 0.0) {
    // Gather the whole cost level so ties split pro rata by capacity.
    std::size_t j = i;
    double level_capacity = 0.0;
    while (j < order.size() && offers[order[j]].cost == offers[order[i]].cost) {
      level_capacity += offers[order[j]].capacity;
      ++j;
    }
    result.price = offers[order[i]].cost;
    if (level_capacity <= remaining) {
      for (std::size_t k = i; k < j; ++k) {
        result.dispatch[static_cast<Eigen::Index>(order[k])] = offers[order[k]].capacity;
      }
      remaining -= level_capacity;
    } else {
      const double fraction = remaining / level_capacity;
      for (std::size_t k = i; k < j; ++k) {
        result.dispatch[static_cast<Eigen::Index>(order[k])] =
            fraction * offers[order[k]].capacity;
      }
      remaining = 0.0;
    }
    i = j;
  }
  return result;
}

MarketEnv::MarketEnv(MarketConfig config) : config_(config) { reset(0); }

void MarketEnv::reset(std::uint64_t seed) {
  rng_state_ = split_seed(seed, 0x6d6b7431);
  // Load states start random (standard or reduced demand per bus).
  for (auto& flag : flags_) flag = next_unit(rng_state_) < 0.5;
  last_price_ = 0.0;
}

Eigen::VectorXd MarketEnv::observe(int player) const {
  if (player < 0 || player >= 3) throw ContractViolation("MarketEnv::observe: bad player");
  Eigen::VectorXd obs(6);
  for (int b = 0; b < 6; ++b) obs[b] = flags_[b] ? 1.0 : 0.0;
  return obs;
}

double MarketEnv::total_demand() const {
  double total = 0.0;
  for (int b = 0; b < 6; ++b) {
    total += flags_[b] ? config_.base_demands[b] / 2.0 : config_.base_demands[b];
  }
  return total;
}

std::optional<int> MarketEnv::state_key() const {
  int key = 0;
  for (int b = 0; b < 6; ++b) key |= (flags_[b] ? 1 : 0) << b;
  return key;
}

StepResult MarketEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != 3) throw ContractViolation("MarketEnv::step: need 3 bids");

  std::vector<GeneratorOffer> offers;
  offers.reserve(9);
  for (int i = 0; i < 3; ++i) {
    double bid = actions[i].continuous;
    if (!std::isfinite(bid)) throw ContractViolation("MarketEnv::step: non-finite bid");
    bid = std::clamp(bid, config_.bid_min, config_.bid_max);
    offers.push_back({config_.learner_costs[i], bid});
  }
  for (int b = 0; b < 6; ++b) {
    offers.push_back({config_.baseline_cost, config_.baseline_capacity});
  }

  const ClearingResult clearing = market_clearing(offers, total_demand());
  last_price_ = clearing.price;

  StepResult result;
  result.rewards = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 3; ++i) {
    const double dispatched = clearing.dispatch[i];
    result.rewards[i] =
        dispatched * (clearing.price - config_.learner_costs[i]) / config_.profit_scale;
  }

  // The shared price drives next step's per-bus load flags; strictly above
  // the threshold halves that bus's demand.
  for (int b = 0; b < 6; ++b) flags_[b] = clearing.price > config_.price_thresholds[b];

  result.done = next_unit(rng_state_) < config_.end_probability;
  return result;
}

std::unique_ptr<Env> MarketEnv::clone() const {
  return std::make_unique<MarketEnv>(*this);
}

}  // namespace polyopt
