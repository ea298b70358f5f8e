#include <cmath>
#include <random>

#include "doctest.h"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"
#include "polyopt/marl.hpp"
#include "polyopt/optimizers.hpp"

using namespace polyopt;

namespace {

PolicySet linear_tabular_policies(int num_players, int num_states, int num_actions) {
  PolicySet set;
  for (int i = 0; i < num_players; ++i) {
    MlpPolicy policy;
    policy.layers = {num_states, num_actions};
    policy.head = PolicyHead::kCategoricalLogits;
    set.policies.push_back(policy);
  }
  return set;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

bool buffers_equal(const TrajectoryBuffer& a, const TrajectoryBuffer& b) {
  if (a.episodes.size() != b.episodes.size()) return false;
  for (std::size_t e = 0; e < a.episodes.size(); ++e) {
    const EpisodeData &ea = a.episodes[e], &eb = b.episodes[e];
    if (ea.length() != eb.length()) return false;
    for (int t = 0; t < ea.length(); ++t) {
      if (ea.rewards[t] != eb.rewards[t]) return false;
      if (ea.values[t] != eb.values[t]) return false;
      for (std::size_t p = 0; p < ea.obs[t].size(); ++p) {
        if (ea.obs[t][p] != eb.obs[t][p]) return false;
        if (ea.actions[t][p].discrete != eb.actions[t][p].discrete) return false;
        if (ea.actions[t][p].continuous != eb.actions[t][p].continuous) return false;
        if (ea.log_probs[t][p] != eb.log_probs[t][p]) return false;
      }
    }
  }
  return true;
}

// Throws during the first `faults` episode attempts, then behaves normally.
class FaultyEnv : public Env {
 public:
  FaultyEnv(ScriptedMdpSpec spec, int faults)
      : inner_(std::move(spec)), faults_(std::make_shared<int>(faults)) {}
  int num_players() const override { return inner_.num_players(); }
  int obs_dim() const override { return inner_.obs_dim(); }
  int num_actions() const override { return inner_.num_actions(); }
  void reset(std::uint64_t seed) override { inner_.reset(seed); }
  Eigen::VectorXd observe(int player) const override { return inner_.observe(player); }
  StepResult step(const std::vector<Action>& actions) override {
    if (*faults_ > 0) {
      *faults_ -= 1;
      throw NumericError("injected environment fault");
    }
    return inner_.step(actions);
  }
  std::optional<int> state_key() const override { return inner_.state_key(); }
  std::unique_ptr<Env> clone() const override { return std::make_unique<FaultyEnv>(*this); }

 private:
  ScriptedMdpEnv inner_;
  std::shared_ptr<int> faults_;  // shared so clones count against one budget
};

// Forces the off-diagonal coupling estimate to zero; with it PCGD must
// reproduce plain simultaneous gradient steps.
class ZeroCoupling : public Game {
 public:
  explicit ZeroCoupling(Game& inner) : inner_(inner) {}
  const BlockPartition& partition() const override { return inner_.partition(); }
  Eigen::VectorXd losses(const FlatParams& theta) override { return inner_.losses(theta); }
  FlatParams simultaneous_gradient(const FlatParams& theta) override {
    return inner_.simultaneous_gradient(theta);
  }
  FlatParams offdiag_hvp(const FlatParams&, const FlatParams& v) override {
    return FlatParams(inner_.partition(), Eigen::VectorXd::Zero(v.size()));
  }
  bool has_offdiag_hvp_transpose() const override { return true; }
  FlatParams offdiag_hvp_transpose(const FlatParams&, const FlatParams& v) override {
    return FlatParams(inner_.partition(), Eigen::VectorXd::Zero(v.size()));
  }
  bool pure_oracles() const override { return false; }

 private:
  Game& inner_;
};

}  // namespace

TEST_CASE("policy set partition and seeded init") {
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  const BlockPartition partition = set.partition();
  CHECK(partition.players() == 2);
  CHECK(partition.dims[0] == 6);  // 2x2 weights + 2 biases
  CHECK(set.init_params(3).values == set.init_params(3).values);
  CHECK(set.init_params(3).values != set.init_params(4).values);
}

TEST_CASE("sampling is deterministic and worker-count independent") {
  const ScriptedMdpEnv env(two_state_mdp());
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  const FlatParams theta = set.init_params(1);

  const TrajectoryBuffer a = sample_trajectories(env, set, theta, nullptr, 64, 5, 1);
  const TrajectoryBuffer b = sample_trajectories(env, set, theta, nullptr, 64, 5, 1);
  const TrajectoryBuffer c = sample_trajectories(env, set, theta, nullptr, 64, 5, 4);
  CHECK(buffers_equal(a, b));
  CHECK(buffers_equal(a, c));  // fan-out merges in episode order

  const TrajectoryBuffer d = sample_trajectories(env, set, theta, nullptr, 64, 6, 1);
  CHECK_FALSE(buffers_equal(a, d));

  for (const auto& ep : a.episodes) CHECK(ep.length() == 2);
  CHECK_THROWS_AS(sample_trajectories(env, set, theta, nullptr, 0, 5), ContractViolation);
}

TEST_CASE("environment faults discard and resample episodes") {
  const FaultyEnv env(two_state_mdp(), 2);
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  const FlatParams theta = set.init_params(1);
  const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, 6, 9, 1);
  CHECK(buffer.resampled == 2);
  CHECK(buffer.episodes.size() == 6);
  for (const auto& ep : buffer.episodes) CHECK(ep.length() == 2);
}

TEST_CASE("gae identities") {
  // Hand-built two-episode buffer with known rewards and values.
  TrajectoryBuffer buffer;
  buffer.num_players = 2;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int e = 0; e < 2; ++e) {
    EpisodeData ep;
    const int t_len = 4 + e;
    for (int t = 0; t < t_len; ++t) {
      ep.obs.push_back({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)});
      ep.actions.push_back(std::vector<Action>(2));
      ep.log_probs.push_back({0.0, 0.0});
      ep.rewards.push_back(Eigen::Vector2d(gauss(rng), gauss(rng)));
      ep.values.push_back(Eigen::Vector2d(gauss(rng), gauss(rng)));
      ep.state_keys.push_back(0);
    }
    buffer.episodes.push_back(std::move(ep));
  }

  SUBCASE("lambda=1, gamma=1 equals return-to-go minus baseline, exactly") {
    const AdvantageTable table = gae_advantages(buffer, 1.0, 1.0);
    for (std::size_t e = 0; e < buffer.episodes.size(); ++e) {
      const EpisodeData& ep = buffer.episodes[e];
      for (int i = 0; i < 2; ++i) {
        Eigen::VectorXd togo = Eigen::VectorXd::Zero(2);
        for (int t = ep.length() - 1; t >= 0; --t) {
          togo = ep.rewards[t] + togo;
          CHECK(table.advantages[e](t, i) == togo[i] - ep.values[t][i]);  // bitwise
          CHECK(table.value_targets[e](t, i) == togo[i]);
        }
      }
    }
  }

  SUBCASE("lambda=0 equals the one-step TD residual, exactly") {
    const double gamma = 0.9;
    const AdvantageTable table = gae_advantages(buffer, gamma, 0.0);
    for (std::size_t e = 0; e < buffer.episodes.size(); ++e) {
      const EpisodeData& ep = buffer.episodes[e];
      for (int t = 0; t < ep.length(); ++t) {
        for (int i = 0; i < 2; ++i) {
          const double next_value = t + 1 < ep.length() ? ep.values[t + 1][i] : 0.0;
          const double delta = ep.rewards[t][i] + gamma * next_value - ep.values[t][i];
          CHECK(table.advantages[e](t, i) == delta);
        }
      }
    }
  }

  SUBCASE("single step, zero value: advantage is the reward") {
    TrajectoryBuffer one;
    one.num_players = 1;
    EpisodeData ep;
    ep.obs.push_back({Eigen::VectorXd::Zero(1)});
    ep.actions.push_back(std::vector<Action>(1));
    ep.log_probs.push_back({0.0});
    ep.rewards.push_back(Eigen::VectorXd::Constant(1, 5.0));
    ep.values.push_back(Eigen::VectorXd::Zero(1));
    ep.state_keys.push_back(0);
    one.episodes.push_back(std::move(ep));
    const AdvantageTable table = gae_advantages(one, 0.7, 0.3);
    CHECK(table.advantages[0](0, 0) == 5.0);
  }
}

TEST_CASE("score-function gradient estimate on one-step games") {
  const ScriptedMdpEnv env(matching_pennies());
  const PolicySet set = linear_tabular_policies(2, 1, 2);
  const FlatParams theta = set.init_params(2);

  const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, 50, 3, 1);
  const AdvantageTable adv = gae_advantages(buffer, 1.0, 1.0);
  const FlatParams estimate = estimate_xi(buffer, adv, set, theta, 1.0);

  // Hand recomputation: for a linear policy on a one-hot state the score is
  // (e_a - pi) stacked for the weight column and the bias.
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(theta.size());
  const Eigen::VectorXd obs = Eigen::VectorXd::Ones(1);
  for (const auto& ep : buffer.episodes) {
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd logits = set.policies[i].eval(theta.block(i), obs);
      const Eigen::VectorXd pi = softmax(logits);
      Eigen::VectorXd score = -pi;
      score[ep.actions[0][i].discrete] += 1.0;
      const double a = ep.rewards[0][i];  // zero baseline, gamma = 1
      expected.segment(theta.partition.offsets[i], 2) += a * score;
      expected.segment(theta.partition.offsets[i] + 2, 2) += a * score;
    }
  }
  expected /= static_cast<double>(buffer.episodes.size());
  CHECK((estimate.values - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));

  // All-zero advantages produce a zero gradient.
  AdvantageTable zero = adv;
  for (auto& m : zero.advantages) m.setZero();
  CHECK(estimate_xi(buffer, zero, set, theta, 1.0).values.norm() == 0.0);
}

TEST_CASE("mixed-derivative estimate on horizon-1 episodes is the score product") {
  const ScriptedMdpEnv env(matching_pennies());
  const PolicySet set = linear_tabular_policies(2, 1, 2);
  const FlatParams theta = set.init_params(4);
  const BlockPartition& partition = theta.partition;

  const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, 40, 8, 1);
  const AdvantageTable adv = gae_advantages(buffer, 1.0, 1.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FlatParams v(partition);
  for (Eigen::Index k = 0; k < v.size(); ++k) v.values[k] = gauss(rng);

  const FlatParams estimate = estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, v, false);

  // With T = 1 the history terms vanish: block i is the batch mean of
  // A_i (h_j . v^j) g_i.
  const Eigen::VectorXd obs = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(theta.size());
  for (const auto& ep : buffer.episodes) {
    Eigen::VectorXd scores[2];
    for (int p = 0; p < 2; ++p) {
      const Eigen::VectorXd pi = softmax(set.policies[p].eval(theta.block(p), obs));
      Eigen::VectorXd s = -pi;
      s[ep.actions[0][p].discrete] += 1.0;
      Eigen::VectorXd full(4);
      full << s, s;  // weight column then bias
      scores[p] = full;
    }
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const double contraction =
          scores[j].dot(v.values.segment(partition.offsets[j], 4));
      expected.segment(partition.offsets[i], 4) +=
          ep.rewards[0][i] * contraction * scores[i];
    }
  }
  expected /= static_cast<double>(buffer.episodes.size());
  CHECK((estimate.values - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));

  // v = 0 maps to zero.
  const FlatParams zero(partition);
  CHECK(estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, zero, false).values.norm() ==
        0.0);
}

TEST_CASE("forward and transpose estimates are adjoint to each other") {
  const ScriptedMdpEnv env(two_state_mdp());
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  const FlatParams theta = set.init_params(6);
  const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, 30, 11, 1);
  const AdvantageTable adv = gae_advantages(buffer, 1.0, 0.95);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    FlatParams u(theta.partition), v(theta.partition);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      u.values[k] = gauss(rng);
      v.values[k] = gauss(rng);
    }
    const double lhs =
        estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, u, false).values.dot(v.values);
    const double rhs =
        estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, v, true).values.dot(u.values);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("enumeration oracle closed forms") {
  const ScriptedMdpSpec pennies = matching_pennies();
  const PolicySet set = linear_tabular_policies(2, 1, 2);

  // Uniform policies on symmetric zero-sum rewards: zero value and zero
  // gradient by symmetry.
  const FlatParams uniform(set.partition());
  CHECK(exact_expected_returns(pennies, set, uniform, 1.0).norm() <= 1e-15);
  const EnumerationResult at_uniform =
      exact_gradients_by_enumeration(pennies, set, uniform, 1.0);
  CHECK(at_uniform.xi.norm() <= 1e-9);

  // Against the direct formula J_i = sum_{a, b} pi_1(a) pi_2(b) r_i(a, b).
  const FlatParams theta = set.init_params(12);
  const Eigen::VectorXd obs = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd p1 = softmax(set.policies[0].eval(theta.block(0), obs));
  const Eigen::VectorXd p2 = softmax(set.policies[1].eval(theta.block(1), obs));
  Eigen::Vector2d expected = Eigen::Vector2d::Zero();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      expected += p1[a] * p2[b] * pennies.rewards[0][a + 2 * b];
    }
  }
  const Eigen::VectorXd j = exact_expected_returns(pennies, set, theta, 1.0);
  CHECK((j - expected).norm() <= 1e-12);

  // Enumeration agrees with a Monte-Carlo mean within sampling error.
  const ScriptedMdpEnv env(pennies);
  const int n = 20000;
  Eigen::Vector2d mc = Eigen::Vector2d::Zero();
  const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, n, 77, 4);
  for (const auto& ep : buffer.episodes) mc += ep.rewards[0];
  mc /= n;
  CHECK((mc - expected).norm() <= 4.0 / std::sqrt(static_cast<double>(n)));

  // Budget guard.
  ScriptedMdpSpec big = two_state_mdp();
  big.horizon = 10000;
  CHECK_THROWS_AS(exact_expected_returns(big, set, uniform, 1.0), ContractViolation);
}

TEST_CASE("estimators are unbiased against the enumeration oracle (smoke scale)") {
  const ScriptedMdpSpec spec = two_state_mdp();
  const ScriptedMdpEnv env(spec);
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  const FlatParams theta = set.init_params(3);
  const Eigen::Index d = theta.size();

  const EnumerationResult exact = exact_gradients_by_enumeration(spec, set, theta, 1.0);
  Eigen::MatrixXd h_o = exact.hessian;
  for (int i = 0; i < 2; ++i) {
    h_o.block(theta.partition.offsets[i], theta.partition.offsets[i],
              theta.partition.dims[i], theta.partition.dims[i]).setZero();
  }

  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FlatParams v(theta.partition);
  for (Eigen::Index k = 0; k < d; ++k) v.values[k] = gauss(rng);

  const int batches = 40;
  const int batch_size = 1500;
  Eigen::MatrixXd xi_samples(batches, d), hv_samples(batches, d), hvt_samples(batches, d);
  for (int b = 0; b < batches; ++b) {
    const TrajectoryBuffer buffer =
        sample_trajectories(env, set, theta, nullptr, batch_size, 9000 + b, 4);
    const AdvantageTable adv = gae_advantages(buffer, 1.0, 1.0);
    xi_samples.row(b) = estimate_xi(buffer, adv, set, theta, 1.0).values;
    hv_samples.row(b) =
        estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, v, false).values;
    hvt_samples.row(b) =
        estimate_offdiag_hvp(buffer, adv, set, theta, 1.0, v, true).values;
  }

  auto check_within = [&](const Eigen::MatrixXd& samples, const Eigen::VectorXd& target,
                          double sigmas) {
    const Eigen::VectorXd mean = samples.colwise().mean();
    for (Eigen::Index k = 0; k < d; ++k) {
      const double var =
          (samples.col(k).array() - mean[k]).square().sum() / (batches - 1);
      const double se = std::sqrt(var / batches);
      CHECK(std::abs(mean[k] - target[k]) <= sigmas * se + 1e-9);
    }
  };
  check_within(xi_samples, exact.xi, 5.0);
  check_within(hv_samples, h_o * v.values, 5.0);
  check_within(hvt_samples, h_o.transpose() * v.values, 5.0);
}

TEST_CASE("baselines") {
  SUBCASE("tabular baseline averages discounted return-to-go per state") {
    TrajectoryBuffer buffer;
    buffer.num_players = 1;
    EpisodeData ep;
    // States 0, 1 with rewards 1 then 3 at gamma = 0.5:
    // togo(0) = 1 + 0.5 * 3 = 2.5, togo(1) = 3.
    for (int t = 0; t < 2; ++t) {
      ep.obs.push_back({Eigen::VectorXd::Zero(2)});
      ep.actions.push_back(std::vector<Action>(1));
      ep.log_probs.push_back({0.0});
      ep.rewards.push_back(Eigen::VectorXd::Constant(1, t == 0 ? 1.0 : 3.0));
      ep.values.push_back(Eigen::VectorXd::Zero(1));
      ep.state_keys.push_back(t);
    }
    buffer.episodes.push_back(std::move(ep));

    TabularBaseline baseline(1);
    baseline.fit(buffer, 0.5);
    CHECK(baseline.value(0, Eigen::VectorXd::Zero(2), 0) == doctest::Approx(2.5));
    CHECK(baseline.value(0, Eigen::VectorXd::Zero(2), 1) == doctest::Approx(3.0));
    CHECK(baseline.value(0, Eigen::VectorXd::Zero(2), 7) == 0.0);  // unseen state
    CHECK_THROWS_AS(baseline.value(0, Eigen::VectorXd::Zero(2), std::nullopt),
                    ContractViolation);

    // State round trip.
    TabularBaseline restored(1);
    restored.restore(baseline.state());
    CHECK(restored.value(0, Eigen::VectorXd::Zero(2), 0) == doctest::Approx(2.5));
  }

  SUBCASE("mlp baseline descends the squared error") {
    const ScriptedMdpEnv env(two_state_mdp());
    const PolicySet set = linear_tabular_policies(2, 2, 2);
    const FlatParams theta = set.init_params(5);
    const TrajectoryBuffer buffer = sample_trajectories(env, set, theta, nullptr, 64, 2, 1);

    MlpBaseline baseline(2, 2, {8}, 0.05, 40, 123);
    auto mse = [&]() {
      double total = 0;
      long count = 0;
      for (const auto& ep : buffer.episodes) {
        for (int i = 0; i < 2; ++i) {
          double togo = 0;
          std::vector<double> targets(ep.length());
          for (int t = ep.length() - 1; t >= 0; --t) {
            togo = ep.rewards[t][i] + togo;
            targets[t] = togo;
          }
          for (int t = 0; t < ep.length(); ++t) {
            const double err = baseline.value(i, ep.obs[t][i], std::nullopt) - targets[t];
            total += err * err;
            count += 1;
          }
        }
      }
      return total / count;
    };
    const double before = mse();
    baseline.fit(buffer, 1.0);
    CHECK(mse() < before);

    MlpBaseline restored(2, 2, {8}, 0.05, 40, 999);
    restored.restore(baseline.state());
    CHECK(restored.value(0, buffer.episodes[0].obs[0][0], std::nullopt) ==
          baseline.value(0, buffer.episodes[0].obs[0][0], std::nullopt));
  }
}

TEST_CASE("rl adapter caches one sampling pass per parameter vector") {
  RlAdapterConfig config;
  config.batch = 16;
  config.gamma = 1.0;
  config.lambda = 1.0;
  config.baseline = BaselineKind::kZero;
  const PolicySet set = linear_tabular_policies(2, 2, 2);
  RlGameAdapter adapter(std::make_unique<ScriptedMdpEnv>(two_state_mdp()), set, config, 42);

  FlatParams theta = set.init_params(42);
  CHECK(adapter.sample_passes() == 0);

  adapter.losses(theta);
  CHECK(adapter.sample_passes() == 1);
  const FlatParams grad = adapter.simultaneous_gradient(theta);
  CHECK(adapter.sample_passes() == 1);  // same theta, cached buffer

  FlatParams v(theta.partition, Eigen::VectorXd::Ones(theta.size()));
  adapter.offdiag_hvp(theta, v);
  v.values *= 2.0;
  adapter.offdiag_hvp(theta, v);
  adapter.offdiag_hvp_transpose(theta, v);
  CHECK(adapter.sample_passes() == 1);

  // Stale parameters trigger exactly one resample.
  FlatParams moved = theta;
  moved.values.array() += 0.01;
  adapter.simultaneous_gradient(moved);
  CHECK(adapter.sample_passes() == 2);
  adapter.losses(moved);
  CHECK(adapter.sample_passes() == 2);
  adapter.losses(theta);  // back to the old point: also a fresh pass
  CHECK(adapter.sample_passes() == 3);

  // Losses are negated mean returns.
  CHECK((adapter.losses(theta) + adapter.mean_returns(theta)).norm() == 0.0);
  CHECK_FALSE(adapter.pure_oracles());
}

TEST_CASE("pcgd with zeroed coupling reproduces simgd on the adapter") {
  RlAdapterConfig config;
  config.batch = 8;
  config.gamma = 1.0;
  config.lambda = 1.0;
  config.baseline = BaselineKind::kZero;
  const PolicySet set = linear_tabular_policies(2, 2, 2);

  RlGameAdapter pcgd_adapter(std::make_unique<ScriptedMdpEnv>(two_state_mdp()), set,
                             config, 7);
  RlGameAdapter simgd_adapter(std::make_unique<ScriptedMdpEnv>(two_state_mdp()), set,
                              config, 7);
  ZeroCoupling decoupled(pcgd_adapter);

  FlatParams a = set.init_params(7);
  FlatParams b = set.init_params(7);
  OptimizerConfig opt;
  opt.eta = 0.05;
  // Cold starts keep the identity solve exact; a warm start computes
  // x0 + (xi - x0), which can differ from xi by an ulp.
  opt.warm_start = false;
  StepState state;
  for (int k = 0; k < 3; ++k) {
    pcgd_step(decoupled, a, opt, state);
    simgd_step(simgd_adapter, b, opt.eta);
    CHECK(a.values == b.values);  // bitwise identical trajectories
  }
  CHECK(pcgd_adapter.sample_passes() == simgd_adapter.sample_passes());
}

TEST_CASE("one sampling pass per pcgd step, and deterministic training traces") {
  RlAdapterConfig config;
  config.batch = 8;
  config.gamma = 1.0;
  config.lambda = 1.0;
  config.baseline = BaselineKind::kTabular;
  const PolicySet set = linear_tabular_policies(2, 2, 2);

  auto run = [&]() {
    RlGameAdapter adapter(std::make_unique<ScriptedMdpEnv>(two_state_mdp()), set, config,
                          99);
    FlatParams theta = set.init_params(99);
    OptimizerConfig opt;
    opt.eta = 0.1;
    opt.cg_eps = 1e-8;
    StepState state;
    std::vector<double> losses;
    std::vector<int> cg_iters;
    for (int k = 0; k < 5; ++k) {
      const long passes_before = adapter.sample_passes();
      const UpdateReport report = pcgd_step(adapter, theta, opt, state);
      CHECK(adapter.sample_passes() == passes_before + 1);
      losses.push_back(report.losses[0]);
      cg_iters.push_back(report.cg_iterations);
    }
    return std::make_tuple(theta.values, losses, cg_iters);
  };
  const auto [theta1, losses1, iters1] = run();
  const auto [theta2, losses2, iters2] = run();
  CHECK(theta1 == theta2);
  CHECK(losses1 == losses2);
  CHECK(iters1 == iters2);
}
