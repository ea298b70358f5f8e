#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"
#include "polyopt/marl.hpp"

namespace polyopt {

namespace {

std::unique_ptr<Baseline> make_baseline(BaselineKind kind, const Env& env,
                                        const RlAdapterConfig& config,
                                        std::uint64_t master_seed) {
  switch (kind) {
    case BaselineKind::kZero:
      return std::make_unique<ZeroBaseline>();
    case BaselineKind::kTabular:
      return std::make_unique<TabularBaseline>(env.num_players());
    case BaselineKind::kMlp:
      return std::make_unique<MlpBaseline>(env.num_players(), env.obs_dim(),
                                           config.baseline_hidden,
                                           config.baseline_learning_rate,
                                           config.baseline_epochs,
                                           split_seed(master_seed, 0xBA5E11));
  }
  throw ContractViolation("make_baseline: unknown kind");
}

}  // namespace

RlGameAdapter::RlGameAdapter(std::unique_ptr<Env> env, PolicySet set,
                             RlAdapterConfig config, std::uint64_t master_seed)
    : env_(std::move(env)),
      set_(std::move(set)),
      partition_(set_.partition()),
      config_(std::move(config)),
      master_seed_(master_seed) {
  if (static_cast<int>(set_.policies.size()) != env_->num_players()) {
    throw ContractViolation("RlGameAdapter: one policy per player required");
  }
  baseline_ = make_baseline(config_.baseline, *env_, config_, master_seed_);
}

void RlGameAdapter::ensure_buffer(const FlatParams& theta) {
  if (!theta.conforms_to(partition_)) {
    throw ContractViolation("RlGameAdapter: theta does not conform");
  }
  if (cache_valid_ && cached_theta_.size() == theta.values.size() &&
      (cached_theta_.array() == theta.values.array()).all()) {
    return;
  }
  // Stale parameters: one fresh sampling pass shared by every oracle call at
  // this theta. Seeds are a pure function of (master seed, pass index) so a
  // resumed run replays the identical stream.
  const std::uint64_t pass_seed =
      split_seed(master_seed_, 0x5A111 + static_cast<std::uint64_t>(sample_passes_));
  sample_passes_ += 1;
  buffer_ = sample_trajectories(*env_, set_, theta, baseline_.get(), config_.batch,
                                pass_seed, config_.workers);
  adv_ = gae_advantages(buffer_, config_.gamma, config_.lambda);
  tapes_ = std::make_unique<ScoreTapes>(buffer_, set_, theta);

  cached_mean_returns_ = Eigen::VectorXd::Zero(buffer_.num_players);
  for (const auto& ep : buffer_.episodes) {
    double discount = 1.0;
    for (int t = 0; t < ep.length(); ++t) {
      cached_mean_returns_ += discount * ep.rewards[t];
      discount *= config_.gamma;
    }
  }
  cached_mean_returns_ /= static_cast<double>(buffer_.episodes.size());

  // Values recorded in this buffer predate the refit, so the advantages for
  // this step are already fixed; the refit serves the next pass.
  baseline_->fit(buffer_, config_.gamma);

  cache_valid_ = true;
  cached_theta_ = theta.values;
}

Eigen::VectorXd RlGameAdapter::losses(const FlatParams& theta) {
  ensure_buffer(theta);
  return -cached_mean_returns_;
}

Eigen::VectorXd RlGameAdapter::mean_returns(const FlatParams& theta) {
  ensure_buffer(theta);
  return cached_mean_returns_;
}

FlatParams RlGameAdapter::simultaneous_gradient(const FlatParams& theta) {
  ensure_buffer(theta);
  FlatParams xi = estimate_xi(buffer_, adv_, *tapes_, config_.gamma);
  xi.values = -xi.values;  // losses are negated returns
  return xi;
}

FlatParams RlGameAdapter::offdiag_hvp(const FlatParams& theta, const FlatParams& v) {
  ensure_buffer(theta);
  FlatParams out = estimate_offdiag_hvp(buffer_, adv_, *tapes_, config_.gamma, v, false);
  out.values = -out.values;
  return out;
}

FlatParams RlGameAdapter::offdiag_hvp_transpose(const FlatParams& theta,
                                                const FlatParams& v) {
  ensure_buffer(theta);
  FlatParams out = estimate_offdiag_hvp(buffer_, adv_, *tapes_, config_.gamma, v, true);
  out.values = -out.values;
  return out;
}

}  // namespace polyopt
