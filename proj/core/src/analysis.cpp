#include "polyopt/analysis.hpp"

#include <Eigen/Dense>
#include <limits>
#include <string>

#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

Eigen::MatrixXd DenseGameHessian::block_diagonal() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (int i = 0; i < partition.players(); ++i) {
    const Eigen::Index o = partition.offsets[i], d = partition.dims[i];
    out.block(o, o, d, d) = h.block(o, o, d, d);
  }
  return out;
}

DenseGameHessian assemble_hessian(Game& game, const FlatParams& theta,
                                  const AnalysisOptions& options) {
  const BlockPartition& partition = game.partition();
  const Eigen::Index d = partition.total;
  if (d > options.dim_cap) {
    throw ContractViolation("assemble_hessian: dimension " + std::to_string(d) +
                            " exceeds cap " + std::to_string(options.dim_cap));
  }

  DenseGameHessian out;
  out.partition = partition;
  if (game.has_dense_hessian()) {
    out.h = game.dense_hessian(theta);
    if (out.h.rows() != d || out.h.cols() != d) {
      throw ContractViolation("assemble_hessian: analytic oracle returned wrong shape");
    }
    return out;
  }

  // Column l of H = d xi / d theta_l by central differences.
  const double h_step = options.fd_step;
  out.h.resize(d, d);
  FlatParams probe = theta;
  for (Eigen::Index l = 0; l < d; ++l) {
    probe.values[l] = theta.values[l] + h_step;
    const Eigen::VectorXd plus = simultaneous_gradient(game, probe).values;
    probe.values[l] = theta.values[l] - h_step;
    const Eigen::VectorXd minus = simultaneous_gradient(game, probe).values;
    probe.values[l] = theta.values[l];
    out.h.col(l) = (plus - minus) / (2.0 * h_step);
  }
  return out;
}

HessianDecomposition decompose(const Eigen::MatrixXd& h, const BlockPartition& partition) {
  if (h.rows() != h.cols()) throw ContractViolation("decompose: matrix must be square");
  if (h.rows() != partition.total) {
    throw ContractViolation("decompose: matrix does not match partition");
  }
  HessianDecomposition out;
  out.s = 0.5 * (h + h.transpose());
  out.a = 0.5 * (h - h.transpose());
  out.h_d = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (int i = 0; i < partition.players(); ++i) {
    const Eigen::Index o = partition.offsets[i], d = partition.dims[i];
    out.h_d.block(o, o, d, d) = h.block(o, o, d, d);
  }
  out.h_o = h - out.h_d;
  return out;
}

double theorem_step_bound(const Eigen::MatrixXd& s, const AnalysisOptions& options) {
  const double norm = spectral_norm_symmetric(LinearOperator::from_dense(s),
                                              options.spectral_tol,
                                              options.spectral_max_iter);
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (4.0 * norm);
}

Eigen::MatrixXd pcgd_update_jacobian(const Eigen::MatrixXd& h,
                                     const BlockPartition& partition, double eta) {
  if (h.rows() != h.cols() || h.rows() != partition.total) {
    throw ContractViolation("pcgd_update_jacobian: shape mismatch");
  }
  Eigen::MatrixXd h_o = h;
  for (int i = 0; i < partition.players(); ++i) {
    const Eigen::Index o = partition.offsets[i], d = partition.dims[i];
    h_o.block(o, o, d, d).setZero();
  }
  const Eigen::Index d = h.rows();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) + eta * h_o;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) {
    throw NumericError("pcgd_update_jacobian: I + eta H_o is singular at eta = " +
                       std::to_string(eta));
  }
  return Eigen::MatrixXd::Identity(d, d) - eta * lu.solve(h);
}

namespace {

// Smallest eigenvalue of a symmetric block via shifted power iteration:
// lambda_min(B) = c - rho(c I - B) with c = ||B||.
double smallest_symmetric_eigenvalue(const Eigen::MatrixXd& b,
                                     const AnalysisOptions& options) {
  const double c = spectral_norm_symmetric(LinearOperator::from_dense(b),
                                           options.spectral_tol,
                                           options.spectral_max_iter);
  if (c == 0.0) return 0.0;
  const Eigen::MatrixXd shifted =
      c * Eigen::MatrixXd::Identity(b.rows(), b.cols()) - b;
  const double shifted_norm = spectral_norm_symmetric(LinearOperator::from_dense(shifted),
                                                      options.spectral_tol,
                                                      options.spectral_max_iter);
  return c - shifted_norm;
}

}  // namespace

bool check_local_nash(Game& game, const FlatParams& theta, double tol,
                      const AnalysisOptions& options) {
  const Eigen::VectorXd grad = simultaneous_gradient(game, theta).values;
  if (grad.norm() > tol) return false;
  const DenseGameHessian hess = assemble_hessian(game, theta, options);
  for (int i = 0; i < hess.partition.players(); ++i) {
    const Eigen::Index o = hess.partition.offsets[i], d = hess.partition.dims[i];
    const Eigen::MatrixXd block =
        0.5 * (hess.h.block(o, o, d, d) + hess.h.block(o, o, d, d).transpose());
    if (smallest_symmetric_eigenvalue(block, options) < -tol) return false;
  }
  return true;
}

ConvergenceVerdict classify_convergence(Game& game, const FlatParams& theta, double eta,
                                        const AnalysisOptions& options) {
  const Eigen::VectorXd grad = simultaneous_gradient(game, theta).values;
  if (grad.norm() > options.stationary_tol) {
    throw ContractViolation(
        "classify_convergence: point is not stationary (||xi|| = " +
        std::to_string(grad.norm()) + ")");
  }

  const DenseGameHessian hess = assemble_hessian(game, theta, options);
  const HessianDecomposition parts = decompose(hess.h, hess.partition);

  ConvergenceVerdict verdict;
  verdict.eta = eta;
  verdict.step_bound = theorem_step_bound(parts.s, options);
  verdict.is_local_nash = check_local_nash(game, theta, options.nash_tol, options);

  const Eigen::MatrixXd jacobian = pcgd_update_jacobian(hess.h, hess.partition, eta);
  const SpectralEstimate rho =
      spectral_radius(LinearOperator::from_dense(jacobian), options.spectral_tol,
                      options.spectral_max_iter, options.spectral_restarts);
  verdict.rho = rho.value;
  verdict.rho_converged = rho.converged;
  verdict.converges_locally = verdict.rho < 1.0 - options.rho_margin;
  return verdict;
}

}  // namespace polyopt
