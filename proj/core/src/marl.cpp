#include "polyopt/marl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "polyopt/autodiff.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

BlockPartition PolicySet::partition() const {
  std::vector<Eigen::Index> dims;
  dims.reserve(policies.size());
  for (const auto& p : policies) dims.push_back(p.param_count());
  return BlockPartition::from_dims(std::move(dims));
}

FlatParams PolicySet::init_params(std::uint64_t seed) const {
  FlatParams theta(partition());
  for (std::size_t i = 0; i < policies.size(); ++i) {
    std::mt19937_64 rng(split_seed(seed, 0x1417 + i));
    policies[i].init_params(theta.block(static_cast<int>(i)), rng);
  }
  return theta;
}

void Baseline::restore(const std::vector<std::pair<std::string, Eigen::VectorXd>>&) {}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

int TabularBaseline::find_slot(int player, int key) const {
  const auto& keys = keys_[player];
  const auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return -1;
  return static_cast<int>(it - keys.begin());
}

double TabularBaseline::value(int player, const Eigen::VectorXd&,
                              std::optional<int> state_key) const {
  if (!state_key) {
    throw ContractViolation("TabularBaseline: environment has no discrete state key");
  }
  const int slot = find_slot(player, *state_key);
  if (slot < 0) return 0.0;
  return sums_[player][slot] / counts_[player][slot];
}

void TabularBaseline::fit(const TrajectoryBuffer& buffer, double gamma) {
  for (const auto& ep : buffer.episodes) {
    const int t_len = ep.length();
    Eigen::VectorXd togo = Eigen::VectorXd::Zero(buffer.num_players);
    for (int t = t_len - 1; t >= 0; --t) {
      togo = ep.rewards[t] + gamma * togo;
      const int key = ep.state_keys[t];
      if (key < 0) {
        throw ContractViolation("TabularBaseline: environment has no discrete state key");
      }
      for (int i = 0; i < buffer.num_players; ++i) {
        int slot = find_slot(i, key);
        if (slot < 0) {
          const auto it = std::lower_bound(keys_[i].begin(), keys_[i].end(), key);
          slot = static_cast<int>(it - keys_[i].begin());
          keys_[i].insert(it, key);
          sums_[i].insert(sums_[i].begin() + slot, 0.0);
          counts_[i].insert(counts_[i].begin() + slot, 0.0);
        }
        sums_[i][slot] += togo[i];
        counts_[i][slot] += 1.0;
      }
    }
  }
}

std::vector<std::pair<std::string, Eigen::VectorXd>> TabularBaseline::state() const {
  std::vector<std::pair<std::string, Eigen::VectorXd>> out;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(keys_[i].size());
    Eigen::VectorXd packed(3 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      packed[3 * k] = static_cast<double>(keys_[i][k]);
      packed[3 * k + 1] = sums_[i][k];
      packed[3 * k + 2] = counts_[i][k];
    }
    out.emplace_back("baseline.tabular." + std::to_string(i), std::move(packed));
  }
  return out;
}

void TabularBaseline::restore(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& state) {
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::string name = "baseline.tabular." + std::to_string(i);
    for (const auto& [key, packed] : state) {
      if (key != name) continue;
      const Eigen::Index n = packed.size() / 3;
      keys_[i].resize(n);
      sums_[i].resize(n);
      counts_[i].resize(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        keys_[i][k] = static_cast<int>(packed[3 * k]);
        sums_[i][k] = packed[3 * k + 1];
        counts_[i][k] = packed[3 * k + 2];
      }
    }
  }
}

MlpBaseline::MlpBaseline(int num_players, Eigen::Index obs_dim,
                         std::vector<Eigen::Index> hidden, double learning_rate,
                         int epochs_per_fit, std::uint64_t seed)
    : learning_rate_(learning_rate), epochs_(epochs_per_fit) {
  net_.layers.push_back(obs_dim);
  for (Eigen::Index h : hidden) net_.layers.push_back(h);
  net_.layers.push_back(1);
  params_.resize(num_players);
  for (int i = 0; i < num_players; ++i) {
    params_[i].resize(net_.param_count());
    std::mt19937_64 rng(split_seed(seed, 0xBA5E + i));
    net_.init_params(params_[i], rng);
  }
}

double MlpBaseline::value(int player, const Eigen::VectorXd& obs,
                          std::optional<int>) const {
  return net_.eval(params_[player], obs)[0];
}

void MlpBaseline::fit(const TrajectoryBuffer& buffer, double gamma) {
  const int n = buffer.num_players;
  long samples = 0;
  for (const auto& ep : buffer.episodes) samples += ep.length();
  if (samples == 0) return;

  for (int epoch = 0; epoch < epochs_; ++epoch) {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_[i].size());
      for (const auto& ep : buffer.episodes) {
        const int t_len = ep.length();
        double togo = 0.0;
        std::vector<double> targets(t_len);
        for (int t = t_len - 1; t >= 0; --t) {
          togo = ep.rewards[t][i] + gamma * togo;
          targets[t] = togo;
        }
        for (int t = 0; t < t_len; ++t) {
          ad::Tape tape;
          tape.bind(params_[i]);
          const ad::NodeId v = tape.select(net_.build(tape, 0, ep.obs[t][i]), 0);
          const ad::NodeId diff = tape.sub(v, tape.scalar(targets[t]));
          tape.backward(tape.mul(diff, diff), grad);
        }
      }
      params_[i] -= (learning_rate_ / static_cast<double>(samples)) * grad;
    }
  }
}

std::vector<std::pair<std::string, Eigen::VectorXd>> MlpBaseline::state() const {
  std::vector<std::pair<std::string, Eigen::VectorXd>> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("baseline.mlp." + std::to_string(i), params_[i]);
  }
  return out;
}

void MlpBaseline::restore(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& state) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string name = "baseline.mlp." + std::to_string(i);
    for (const auto& [key, packed] : state) {
      if (key == name) {
        if (packed.size() != params_[i].size()) {
          throw ContractViolation("MlpBaseline::restore: parameter size mismatch");
        }
        params_[i] = packed;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

EpisodeData run_episode(Env& env, const PolicySet& set, const FlatParams& theta,
                        const Baseline* baseline, std::uint64_t episode_seed,
                        int max_steps) {
  const int n = env.num_players();
  env.reset(episode_seed);
  std::mt19937_64 action_rng(split_seed(episode_seed, 0xAC710));

  EpisodeData ep;
  for (int t = 0; t < max_steps; ++t) {
    std::vector<Eigen::VectorXd> obs(n);
    std::vector<Action> actions(n);
    std::vector<double> log_probs(n);
    Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
    const std::optional<int> key = env.state_key();

    for (int i = 0; i < n; ++i) {
      obs[i] = env.observe(i);
      if (baseline) values[i] = baseline->value(i, obs[i], key);
      const MlpPolicy& policy = set.policies[i];
      const Eigen::VectorXd out = policy.eval(theta.block(i), obs[i]);
      SampledAction sampled;
      if (policy.head == PolicyHead::kCategoricalLogits) {
        sampled = sample_categorical(out, action_rng);
        actions[i].discrete = sampled.discrete;
      } else {
        sampled = sample_gaussian(out[0], policy.sigma, action_rng);
        actions[i].continuous = sampled.continuous;
      }
      log_probs[i] = sampled.log_prob;
      if (!std::isfinite(log_probs[i])) {
        throw NumericError("sample_trajectories: non-finite behavior log-prob");
      }
    }

    const StepResult result = env.step(actions);
    if (!result.rewards.allFinite()) {
      throw NumericError("sample_trajectories: non-finite reward");
    }

    ep.obs.push_back(std::move(obs));
    ep.actions.push_back(std::move(actions));
    ep.log_probs.push_back(std::move(log_probs));
    ep.rewards.push_back(result.rewards);
    ep.values.push_back(std::move(values));
    ep.state_keys.push_back(key.value_or(-1));
    if (result.done) return ep;
  }
  return ep;  // safety cap reached
}

}  // namespace

TrajectoryBuffer sample_trajectories(const Env& proto, const PolicySet& set,
                                     const FlatParams& theta, const Baseline* baseline,
                                     int batch, std::uint64_t seed, int workers,
                                     int max_episode_steps) {
  if (batch < 1) throw ContractViolation("sample_trajectories: batch must be >= 1");
  if (static_cast<int>(set.policies.size()) != proto.num_players()) {
    throw ContractViolation("sample_trajectories: policy count does not match players");
  }
  if (!theta.conforms_to(set.partition())) {
    throw ContractViolation("sample_trajectories: theta does not conform to policies");
  }

  TrajectoryBuffer buffer;
  buffer.num_players = proto.num_players();
  buffer.episodes.resize(batch);

  std::atomic<int> next_episode{0};
  std::atomic<int> resampled{0};
  constexpr int kMaxEpisodeRetries = 5;

  auto worker = [&]() {
    const std::unique_ptr<Env> env = proto.clone();
    while (true) {
      const int e = next_episode.fetch_add(1);
      if (e >= batch) break;
      const std::uint64_t episode_seed = split_seed(seed, 0xE0000 + e);
      for (int retry = 0;; ++retry) {
        try {
          buffer.episodes[e] = run_episode(*env, set, theta, baseline,
                                           split_seed(episode_seed, retry),
                                           max_episode_steps);
          break;
        } catch (const std::exception&) {
          resampled.fetch_add(1);
          if (retry + 1 >= kMaxEpisodeRetries) throw;
        }
      }
    }
  };

  const int thread_count = std::max(1, std::min(workers, batch));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (int w = 0; w < thread_count; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  buffer.resampled = resampled.load();
  return buffer;
}

// ---------------------------------------------------------------------------
// Advantages
// ---------------------------------------------------------------------------

AdvantageTable gae_advantages(const TrajectoryBuffer& buffer, double gamma, double lambda) {
  AdvantageTable table;
  table.advantages.reserve(buffer.episodes.size());
  table.value_targets.reserve(buffer.episodes.size());
  const int n = buffer.num_players;

  for (const auto& ep : buffer.episodes) {
    const int t_len = ep.length();
    Eigen::MatrixXd adv(t_len, n);
    Eigen::MatrixXd target(t_len, n);

    if (gamma == 1.0 && lambda == 1.0) {
      // Exact identity path: advantage == return-to-go minus baseline.
      Eigen::VectorXd togo = Eigen::VectorXd::Zero(n);
      for (int t = t_len - 1; t >= 0; --t) {
        togo = ep.rewards[t] + togo;
        for (int i = 0; i < n; ++i) {
          adv(t, i) = togo[i] - ep.values[t][i];
          target(t, i) = togo[i];
        }
      }
    } else {
      Eigen::VectorXd next_adv = Eigen::VectorXd::Zero(n);
      for (int t = t_len - 1; t >= 0; --t) {
        for (int i = 0; i < n; ++i) {
          const double next_value = (t + 1 < t_len) ? ep.values[t + 1][i] : 0.0;
          const double delta = ep.rewards[t][i] + gamma * next_value - ep.values[t][i];
          next_adv[i] = delta + gamma * lambda * next_adv[i];
          adv(t, i) = next_adv[i];
          target(t, i) = adv(t, i) + ep.values[t][i];
        }
      }
    }
    table.advantages.push_back(std::move(adv));
    table.value_targets.push_back(std::move(target));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

namespace {

ad::NodeId log_prob_node(ad::Tape& tape, const MlpPolicy& policy, Eigen::Index offset,
                         const Eigen::VectorXd& obs, const Action& action) {
  const ad::NodeId out = policy.build(tape, offset, obs);
  if (policy.head == PolicyHead::kCategoricalLogits) {
    return categorical_log_prob(tape, out, action.discrete);
  }
  return gaussian_log_prob(tape, tape.select(out, 0), policy.sigma, action.continuous);
}

}  // namespace

ScoreTapes::ScoreTapes(const TrajectoryBuffer& buffer, const PolicySet& set,
                       FlatParams theta)
    : theta_(std::move(theta)), num_players_(buffer.num_players) {
  if (!theta_.conforms_to(set.partition())) {
    throw ContractViolation("ScoreTapes: theta does not conform to the policies");
  }
  tapes_.resize(buffer.episodes.size());
  log_probs_.resize(buffer.episodes.size());
  for (std::size_t e = 0; e < buffer.episodes.size(); ++e) {
    const EpisodeData& ep = buffer.episodes[e];
    tapes_[e].resize(static_cast<std::size_t>(ep.length()) * num_players_);
    log_probs_[e].resize(tapes_[e].size());
    for (int t = 0; t < ep.length(); ++t) {
      for (int p = 0; p < num_players_; ++p) {
        ad::Tape& tape = tapes_[e][static_cast<std::size_t>(t) * num_players_ + p];
        tape.bind(theta_.values);
        log_probs_[e][static_cast<std::size_t>(t) * num_players_ + p] =
            log_prob_node(tape, set.policies[p], theta_.partition.offsets[p],
                          ep.obs[t][p], ep.actions[t][p]);
      }
    }
  }
}

double ScoreTapes::contraction(std::size_t episode, int t, int player,
                               const Eigen::VectorXd& direction) const {
  const std::size_t slot = static_cast<std::size_t>(t) * num_players_ + player;
  return tapes_[episode][slot].directional(log_probs_[episode][slot], direction);
}

void ScoreTapes::accumulate(std::size_t episode, int t, int player, double coef,
                            Eigen::VectorXd& grad) const {
  if (coef == 0.0) return;
  const std::size_t slot = static_cast<std::size_t>(t) * num_players_ + player;
  tapes_[episode][slot].backward(log_probs_[episode][slot], coef, grad);
}

FlatParams estimate_xi(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                       const PolicySet& set, const FlatParams& theta, double gamma) {
  return estimate_xi(buffer, adv, ScoreTapes(buffer, set, theta), gamma);
}

FlatParams estimate_xi(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                       const ScoreTapes& tapes, double gamma) {
  if (buffer.episodes.empty()) throw ContractViolation("estimate_xi: empty buffer");
  if (adv.advantages.size() != buffer.episodes.size()) {
    throw ContractViolation("estimate_xi: advantages do not match buffer");
  }
  const FlatParams& theta = tapes.theta();
  const int n = buffer.num_players;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());

  for (std::size_t e = 0; e < buffer.episodes.size(); ++e) {
    const EpisodeData& ep = buffer.episodes[e];
    const Eigen::MatrixXd& a = adv.advantages[e];
    for (int i = 0; i < n; ++i) {
      double discount = 1.0;
      for (int t = 0; t < ep.length(); ++t) {
        tapes.accumulate(e, t, i, discount * a(t, i), grad);
        discount *= gamma;
      }
    }
  }
  grad /= static_cast<double>(buffer.episodes.size());
  return FlatParams(theta.partition, std::move(grad));
}

FlatParams estimate_offdiag_hvp(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                                const PolicySet& set, const FlatParams& theta, double gamma,
                                const FlatParams& v, bool transpose) {
  return estimate_offdiag_hvp(buffer, adv, ScoreTapes(buffer, set, theta), gamma, v,
                              transpose);
}

FlatParams estimate_offdiag_hvp(const TrajectoryBuffer& buffer, const AdvantageTable& adv,
                                const ScoreTapes& tapes, double gamma, const FlatParams& v,
                                bool transpose) {
  if (buffer.episodes.empty()) throw ContractViolation("estimate_offdiag_hvp: empty buffer");
  const FlatParams& theta = tapes.theta();
  if (!v.conforms_to(theta.partition)) {
    throw ContractViolation("estimate_offdiag_hvp: v does not conform");
  }
  const int n = buffer.num_players;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());

  for (std::size_t e = 0; e < buffer.episodes.size(); ++e) {
    const EpisodeData& ep = buffer.episodes[e];
    const Eigen::MatrixXd& a = adv.advantages[e];
    const int t_len = ep.length();

    // First pass: per-step score contractions c(t, p) = grad log pi_p . v^p,
    // by forward-mode directional sweeps over the cached graphs.
    Eigen::MatrixXd c(t_len, n);
    for (int t = 0; t < t_len; ++t) {
      for (int p = 0; p < n; ++p) c(t, p) = tapes.contraction(e, t, p, v.values);
    }

    std::vector<double> coef(t_len);
    if (!transpose) {
      // Block i of H_o v: per step, the step-t product term plus the two
      // history terms fold into one coefficient on player i's scores:
      //   coef_t = gamma^t A_i(t) (u_t + U_t) + W_t,
      // u_t the sum of other players' contractions, U_t its prefix sum, and
      // W_t the suffix sum of gamma^s A_i(s) u_s.
      for (int i = 0; i < n; ++i) {
        std::vector<double> u(t_len), w(t_len + 1, 0.0);
        double discount = 1.0;
        std::vector<double> ga(t_len);
        for (int t = 0; t < t_len; ++t) {
          u[t] = c.row(t).sum() - c(t, i);
          ga[t] = discount * a(t, i);
          discount *= gamma;
        }
        for (int t = t_len - 1; t >= 0; --t) w[t] = w[t + 1] + ga[t] * u[t];
        double prefix_u = 0.0;
        for (int t = 0; t < t_len; ++t) {
          coef[t] = ga[t] * (u[t] + prefix_u) + w[t + 1];
          prefix_u += u[t];
        }
        for (int t = 0; t < t_len; ++t) tapes.accumulate(e, t, i, coef[t], grad);
      }
    } else {
      // Block j of H_o^T v: the same three terms with the roles of the two
      // players exchanged; contractions now come from the advantage-owner's
      // own block. beta_t(i) = gamma^t A_i(t) c(t, i).
      Eigen::MatrixXd beta(t_len, n), ga(t_len, n);
      {
        double discount = 1.0;
        for (int t = 0; t < t_len; ++t) {
          for (int i = 0; i < n; ++i) {
            ga(t, i) = discount * a(t, i);
            beta(t, i) = ga(t, i) * c(t, i);
          }
          discount *= gamma;
        }
      }
      Eigen::MatrixXd suffix = Eigen::MatrixXd::Zero(t_len + 1, n);
      for (int t = t_len - 1; t >= 0; --t) {
        suffix.row(t) = suffix.row(t + 1) + beta.row(t);
      }
      Eigen::MatrixXd prefix_c = Eigen::MatrixXd::Zero(t_len, n);
      for (int t = 1; t < t_len; ++t) {
        prefix_c.row(t) = prefix_c.row(t - 1) + c.row(t - 1);
      }
      for (int j = 0; j < n; ++j) {
        for (int t = 0; t < t_len; ++t) {
          double value = 0.0;
          for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            value += beta(t, i) + ga(t, i) * prefix_c(t, i) + suffix(t + 1, i);
          }
          coef[t] = value;
        }
        for (int t = 0; t < t_len; ++t) tapes.accumulate(e, t, j, coef[t], grad);
      }
    }
  }
  grad /= static_cast<double>(buffer.episodes.size());
  return FlatParams(theta.partition, std::move(grad));
}

// ---------------------------------------------------------------------------
// Enumeration oracle
// ---------------------------------------------------------------------------

namespace {

void require_enumerable(const ScriptedMdpSpec& spec) {
  const long budget = static_cast<long>(spec.num_states) * spec.joint_actions() *
                      spec.horizon;
  if (budget > 10000) {
    throw ContractViolation("enumeration: state-action-horizon budget exceeded");
  }
}

// Exact finite-horizon value recursion; probabilities from the policies'
// softmax outputs (no tape involved).
Eigen::VectorXd enum_value(const ScriptedMdpSpec& spec, const PolicySet& set,
                           const FlatParams& theta, double gamma, int state, int t) {
  const int n = spec.num_players();
  if (t >= spec.horizon) return Eigen::VectorXd::Zero(n);

  Eigen::VectorXd obs = Eigen::VectorXd::Zero(spec.num_states);
  obs[state] = 1.0;
  std::vector<Eigen::VectorXd> probs(n);
  for (int p = 0; p < n; ++p) {
    const Eigen::VectorXd logits = set.policies[p].eval(theta.block(p), obs);
    const double m = logits.maxCoeff();
    Eigen::VectorXd q = (logits.array() - m).exp();
    probs[p] = q / q.sum();
  }

  Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
  const int joint = spec.joint_actions();
  std::vector<Action> actions(n);
  for (int idx = 0; idx < joint; ++idx) {
    int rest = idx;
    double weight = 1.0;
    for (int p = 0; p < n; ++p) {
      const int a = rest % spec.actions_per_player[p];
      rest /= spec.actions_per_player[p];
      actions[p].discrete = a;
      weight *= probs[p][a];
    }
    const int j = spec.joint_index(actions);
    Eigen::VectorXd contribution = spec.rewards[state][j];
    for (const auto& [next, prob] : spec.transitions[state][j]) {
      contribution += gamma * prob * enum_value(spec, set, theta, gamma, next, t + 1);
    }
    value += weight * contribution;
  }
  return value;
}

}  // namespace

Eigen::VectorXd exact_expected_returns(const ScriptedMdpSpec& spec, const PolicySet& set,
                                       const FlatParams& theta, double gamma) {
  spec.validate();
  require_enumerable(spec);
  return enum_value(spec, set, theta, gamma, spec.initial_state, 0);
}

EnumerationResult exact_gradients_by_enumeration(const ScriptedMdpSpec& spec,
                                                 const PolicySet& set,
                                                 const FlatParams& theta, double gamma,
                                                 double fd_step) {
  const Eigen::Index d = theta.size();
  const int n = spec.num_players();
  const BlockPartition& partition = theta.partition;

  EnumerationResult result;
  result.returns = exact_expected_returns(spec, set, theta, gamma);

  auto block_of = [&](Eigen::Index coord) {
    for (int i = 0; i < n; ++i) {
      if (coord < partition.offsets[i + 1]) return i;
    }
    return n - 1;
  };

  FlatParams probe = theta;
  auto j_at = [&](Eigen::Index coord, double delta) {
    probe.values[coord] = theta.values[coord] + delta;
    const Eigen::VectorXd j = exact_expected_returns(spec, set, probe, gamma);
    probe.values[coord] = theta.values[coord];
    return j;
  };

  result.xi.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const int i = block_of(k);
    result.xi[k] = (j_at(k, fd_step)[i] - j_at(k, -fd_step)[i]) / (2.0 * fd_step);
  }

  auto j_at2 = [&](Eigen::Index p, double dp, Eigen::Index q, double dq) {
    probe.values[p] += dp;
    probe.values[q] += dq;
    const Eigen::VectorXd j = exact_expected_returns(spec, set, probe, gamma);
    probe.values[p] = theta.values[p];
    probe.values[q] = theta.values[q];
    return j;
  };

  result.hessian.resize(d, d);
  for (Eigen::Index p = 0; p < d; ++p) {
    const int i = block_of(p);
    for (Eigen::Index q = 0; q < d; ++q) {
      const double pp = j_at2(p, fd_step, q, fd_step)[i];
      const double pm = j_at2(p, fd_step, q, -fd_step)[i];
      const double mp = j_at2(p, -fd_step, q, fd_step)[i];
      const double mm = j_at2(p, -fd_step, q, -fd_step)[i];
      result.hessian(p, q) = (pp - pm - mp + mm) / (4.0 * fd_step * fd_step);
    }
  }
  return result;
}

}  // namespace polyopt
