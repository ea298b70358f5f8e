#pragma once

#include <Eigen/Core>
#include <string>

#include "polyopt/game.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

enum class Method { kSimGd, kPcgd, kExtragradient, kSga };

Method method_from_string(const std::string& name);
std::string method_to_string(Method m);

struct OptimizerConfig {
  Method method = Method::kPcgd;
  double eta = 0.1;          // step size
  double sga_lambda = 1.0;   // adjustment coefficient
  double cg_eps = 1e-6;      // relative normal-equation residual (pcgd)
  int cg_max_iter = 0;       // 0 -> min(10 d, 500)
  bool warm_start = true;
};

// Per-step record written to the metrics CSV by the runner.
struct UpdateReport {
  Eigen::VectorXd losses;    // at the pre-step iterate
  double grad_norm = 0.0;    // ||xi||
  double step_norm = 0.0;    // ||theta' - theta||
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool cg_converged = true;
  bool warm_started = false;
};

// Carried between PCGD steps: previous linear-system solution used as the
// warm-start initial guess, plus a step counter.
struct StepState {
  Eigen::VectorXd prev_cg_solution;
  long step_count = 0;
};

// theta' = theta - eta xi(theta).
UpdateReport simgd_step(Game& game, FlatParams& theta, double eta);

// theta' = theta - eta x where (I + eta H_o) x = xi, solved matrix-free by
// conjugate gradient on the normal equations. On CG non-convergence the best
// iterate is still applied and the report flags it; halting is runner policy.
UpdateReport pcgd_step(Game& game, FlatParams& theta, const OptimizerConfig& config,
                       StepState& state);

// theta_half = theta - eta xi(theta); theta' = theta - eta xi(theta_half).
UpdateReport extragradient_step(Game& game, FlatParams& theta, double eta);

// theta' = theta - eta (xi + lambda A^T xi) with A the antisymmetric part of
// the game Hessian. A^T xi = (H^T xi - H xi)/2 reduces to the off-diagonal
// blocks because each diagonal block of H is symmetric, so only the
// off-diagonal HVP oracles are needed. Plain fixed-lambda adjustment, no
// alignment switching.
UpdateReport sga_step(Game& game, FlatParams& theta, double eta, double lambda);

// Uniform stepping facade for the experiment runner.
class Stepper {
 public:
  explicit Stepper(OptimizerConfig config) : config_(std::move(config)) {}

  UpdateReport step(Game& game, FlatParams& theta);

  const OptimizerConfig& config() const { return config_; }
  const StepState& state() const { return state_; }
  void restore_state(StepState state) { state_ = std::move(state); }

 private:
  OptimizerConfig config_;
  StepState state_;
};

}  // namespace polyopt
