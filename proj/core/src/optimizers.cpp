#include "polyopt/optimizers.hpp"

#include <algorithm>

#include "polyopt/errors.hpp"

namespace polyopt {

Method method_from_string(const std::string& name) {
  if (name == "simgd") return Method::kSimGd;
  if (name == "pcgd") return Method::kPcgd;
  if (name == "extragradient") return Method::kExtragradient;
  if (name == "sga") return Method::kSga;
  throw ConfigError("unknown optimizer method '" + name + "'");
}

std::string method_to_string(Method m) {
  switch (m) {
    case Method::kSimGd: return "simgd";
    case Method::kPcgd: return "pcgd";
    case Method::kExtragradient: return "extragradient";
    case Method::kSga: return "sga";
  }
  return "?";
}

namespace {

void require_positive_eta(double eta) {
  if (!(eta > 0.0)) throw ContractViolation("optimizer step: eta must be positive");
}

}  // namespace

UpdateReport simgd_step(Game& game, FlatParams& theta, double eta) {
  require_positive_eta(eta);
  UpdateReport report;
  report.losses = eval_losses(game, theta);
  const FlatParams grad = simultaneous_gradient(game, theta);
  report.grad_norm = grad.values.norm();
  theta.values -= eta * grad.values;
  report.step_norm = eta * report.grad_norm;
  return report;
}

UpdateReport pcgd_step(Game& game, FlatParams& theta, const OptimizerConfig& config,
                       StepState& state) {
  require_positive_eta(config.eta);
  if (!game.has_offdiag_hvp_transpose()) {
    throw UnsupportedMethod(
        "pcgd_step: the normal-equations solver needs the transposed "
        "off-diagonal HVP oracle");
  }

  UpdateReport report;
  report.losses = eval_losses(game, theta);
  const FlatParams grad = simultaneous_gradient(game, theta);
  report.grad_norm = grad.values.norm();

  const Eigen::Index d = theta.size();
  const double eta = config.eta;
  const BlockPartition& partition = game.partition();

  LinearOperator m;
  m.dim = d;
  m.apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    FlatParams vp(partition, v);
    return v + eta * offdiag_hvp(game, theta, vp).values;
  };
  m.apply_transpose = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    FlatParams vp(partition, v);
    return v + eta * offdiag_hvp_transpose(game, theta, vp).values;
  };

  const int max_iter =
      config.cg_max_iter > 0
          ? config.cg_max_iter
          : static_cast<int>(std::min<Eigen::Index>(10 * d, 500));
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  if (config.warm_start && state.prev_cg_solution.size() == d) {
    x0 = state.prev_cg_solution;
  }

  CgResult cg = conjugate_gradient_normal(m, grad.values, x0, config.cg_eps, max_iter);
  report.cg_iterations = cg.report.iterations;
  report.cg_residual = cg.report.relative_residual;
  report.cg_converged = cg.report.converged;
  report.warm_started = cg.report.warm_started;

  theta.values -= eta * cg.x;
  report.step_norm = eta * cg.x.norm();
  state.prev_cg_solution = std::move(cg.x);
  state.step_count += 1;
  return report;
}

UpdateReport extragradient_step(Game& game, FlatParams& theta, double eta) {
  require_positive_eta(eta);
  UpdateReport report;
  report.losses = eval_losses(game, theta);
  const FlatParams grad = simultaneous_gradient(game, theta);
  report.grad_norm = grad.values.norm();

  FlatParams half = theta;
  half.values -= eta * grad.values;
  const FlatParams grad_half = simultaneous_gradient(game, half);

  theta.values -= eta * grad_half.values;
  report.step_norm = eta * grad_half.values.norm();
  return report;
}

UpdateReport sga_step(Game& game, FlatParams& theta, double eta, double lambda) {
  require_positive_eta(eta);
  if (!game.has_offdiag_hvp_transpose()) {
    throw UnsupportedMethod("sga_step: game lacks the transposed HVP capability");
  }
  UpdateReport report;
  report.losses = eval_losses(game, theta);
  const FlatParams grad = simultaneous_gradient(game, theta);
  report.grad_norm = grad.values.norm();

  // A^T xi = (H^T xi - H xi)/2; the symmetric diagonal blocks cancel, so the
  // off-diagonal oracles suffice.
  const Eigen::VectorXd ho_xi = offdiag_hvp(game, theta, grad).values;
  const Eigen::VectorXd hot_xi = offdiag_hvp_transpose(game, theta, grad).values;
  const Eigen::VectorXd adjusted = grad.values + lambda * 0.5 * (hot_xi - ho_xi);

  theta.values -= eta * adjusted;
  report.step_norm = eta * adjusted.norm();
  return report;
}

UpdateReport Stepper::step(Game& game, FlatParams& theta) {
  switch (config_.method) {
    case Method::kSimGd:
      return simgd_step(game, theta, config_.eta);
    case Method::kPcgd:
      return pcgd_step(game, theta, config_, state_);
    case Method::kExtragradient:
      return extragradient_step(game, theta, config_.eta);
    case Method::kSga:
      return sga_step(game, theta, config_.eta, config_.sga_lambda);
  }
  throw ContractViolation("Stepper: unknown method");
}

}  // namespace polyopt
