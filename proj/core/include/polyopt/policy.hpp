#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

#include "polyopt/autodiff.hpp"

namespace polyopt {

enum class Activation { kTanh, kRelu };
enum class PolicyHead { kCategoricalLogits, kGaussianMean };

// Fully connected policy network with parameters packed into one flat block:
// per layer the weight matrix (out x in, row-major) followed by the bias.
// The categorical head emits logits; the gaussian head emits the action mean
// and uses a fixed standard deviation `sigma`.
struct MlpPolicy {
  std::vector<Eigen::Index> layers;  // sizes including input and output
  Activation activation = Activation::kTanh;
  PolicyHead head = PolicyHead::kCategoricalLogits;
  double sigma = 1.0;  // action units; gaussian head only

  Eigen::Index param_count() const;

  // Uniform init in +-sqrt(6/(in+out)) per layer, biases zero.
  void init_params(Eigen::Ref<Eigen::VectorXd> out, std::mt19937_64& rng) const;

  // Plain forward pass (no tape); `params` is this policy's packed block.
  Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& params,
                       const Eigen::Ref<const Eigen::VectorXd>& obs) const;

  // Builds the forward graph on a tape whose bound vector contains this
  // policy's block at `param_offset`. Returns the output node.
  ad::NodeId build(ad::Tape& tape, Eigen::Index param_offset,
                   const Eigen::VectorXd& obs) const;
};

// log pi(action | logits) = logits[action] - logsumexp(logits).
ad::NodeId categorical_log_prob(ad::Tape& tape, ad::NodeId logits, Eigen::Index action);
double categorical_log_prob_value(const Eigen::VectorXd& logits, Eigen::Index action);

// log N(action; mean, sigma^2) as a tape node, differentiable in the mean.
ad::NodeId gaussian_log_prob(ad::Tape& tape, ad::NodeId mean_scalar, double sigma,
                             double action);
double gaussian_log_prob_value(double mean, double sigma, double action);

// One sampled action with its behavior log-probability.
struct SampledAction {
  int discrete = -1;       // categorical head
  double continuous = 0.0; // gaussian head
  double log_prob = 0.0;
};

SampledAction sample_categorical(const Eigen::VectorXd& logits, std::mt19937_64& rng);
SampledAction sample_gaussian(double mean, double sigma, std::mt19937_64& rng);

}  // namespace polyopt
