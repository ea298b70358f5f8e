#include "polyopt/policy.hpp"

#include <cmath>
#include <numbers>

#include "polyopt/errors.hpp"

namespace polyopt {

Eigen::Index MlpPolicy::param_count() const {
  if (layers.size() < 2) throw ContractViolation("MlpPolicy: need input and output sizes");
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    count += (layers[l] + 1) * layers[l + 1];
  }
  return count;
}

void MlpPolicy::init_params(Eigen::Ref<Eigen::VectorXd> out, std::mt19937_64& rng) const {
  if (out.size() != param_count()) {
    throw ContractViolation("MlpPolicy::init_params: wrong block size");
  }
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Eigen::Index in = layers[l], n_out = layers[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + n_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (Eigen::Index i = 0; i < in * n_out; ++i) out[pos++] = uniform(rng);
    for (Eigen::Index i = 0; i < n_out; ++i) out[pos++] = 0.0;  // biases
  }
}

Eigen::VectorXd MlpPolicy::eval(const Eigen::Ref<const Eigen::VectorXd>& params,
                                const Eigen::Ref<const Eigen::VectorXd>& obs) const {
  if (params.size() != param_count()) {
    throw ContractViolation("MlpPolicy::eval: wrong block size");
  }
  if (obs.size() != layers.front()) {
    throw ContractViolation("MlpPolicy::eval: observation length mismatch");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::VectorXd x = obs;
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Eigen::Index in = layers[l], n_out = layers[l + 1];
    const auto w = Eigen::Map<const RowMat>(params.data() + pos, n_out, in);
    pos += in * n_out;
    const auto b = params.segment(pos, n_out);
    pos += n_out;
    x = w * x + b;
    if (l + 2 < layers.size()) {
      if (activation == Activation::kTanh) {
        x = x.array().tanh();
      } else {
        x = x.cwiseMax(0.0);
      }
    }
  }
  return x;
}

ad::NodeId MlpPolicy::build(ad::Tape& tape, Eigen::Index param_offset,
                            const Eigen::VectorXd& obs) const {
  if (obs.size() != layers.front()) {
    throw ContractViolation("MlpPolicy::build: observation length mismatch");
  }
  ad::NodeId x = tape.constant(obs);
  Eigen::Index pos = param_offset;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Eigen::Index in = layers[l], n_out = layers[l + 1];
    const ad::NodeId w = tape.param(pos, in * n_out);
    pos += in * n_out;
    const ad::NodeId b = tape.param(pos, n_out);
    pos += n_out;
    x = tape.add(tape.matvec(w, x, n_out, in), b);
    if (l + 2 < layers.size()) {
      x = (activation == Activation::kTanh) ? tape.tanh(x) : tape.relu(x);
    }
  }
  return x;
}

ad::NodeId categorical_log_prob(ad::Tape& tape, ad::NodeId logits, Eigen::Index action) {
  return tape.sub(tape.select(logits, action), tape.logsumexp(logits));
}

double categorical_log_prob_value(const Eigen::VectorXd& logits, Eigen::Index action) {
  if (action < 0 || action >= logits.size()) {
    throw ContractViolation("categorical_log_prob: action index out of range");
  }
  const double m = logits.maxCoeff();
  return logits[action] - (m + std::log((logits.array() - m).exp().sum()));
}

ad::NodeId gaussian_log_prob(ad::Tape& tape, ad::NodeId mean_scalar, double sigma,
                             double action) {
  if (!(sigma > 0.0)) throw ContractViolation("gaussian_log_prob: sigma must be positive");
  const ad::NodeId diff = tape.sub(tape.scalar(action), mean_scalar);
  const ad::NodeId quad = tape.scale(tape.mul(diff, diff), -0.5 / (sigma * sigma));
  const double log_norm = std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
  return tape.add(quad, tape.scalar(-log_norm));
}

double gaussian_log_prob_value(double mean, double sigma, double action) {
  if (!(sigma > 0.0)) throw ContractViolation("gaussian_log_prob: sigma must be positive");
  const double z = (action - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

SampledAction sample_categorical(const Eigen::VectorXd& logits, std::mt19937_64& rng) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd probs = (logits.array() - m).exp();
  probs /= probs.sum();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double acc = 0.0;
  int action = static_cast<int>(logits.size()) - 1;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    acc += probs[i];
    if (u < acc) {
      action = static_cast<int>(i);
      break;
    }
  }
  SampledAction a;
  a.discrete = action;
  a.log_prob = categorical_log_prob_value(logits, action);
  return a;
}

SampledAction sample_gaussian(double mean, double sigma, std::mt19937_64& rng) {
  if (!(sigma > 0.0)) throw ContractViolation("sample_gaussian: sigma must be positive");
  // Box-Muller keeps the rng-to-sample mapping explicit and stateless.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u1 = 1.0 - uniform(rng);  // (0, 1]
  const double u2 = uniform(rng);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  SampledAction a;
  a.continuous = mean + sigma * z;
  a.log_prob = gaussian_log_prob_value(mean, sigma, a.continuous);
  return a;
}

}  // namespace polyopt
