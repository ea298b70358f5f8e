#pragma once

#include <Eigen/Core>

#include "polyopt/game.hpp"

namespace polyopt {

// Dense game Hessian of a small game together with its standard splittings:
// symmetric/antisymmetric parts (S, A) and block-diagonal/off-diagonal parts
// (H_d, H_o) with respect to the player partition.
struct DenseGameHessian {
  Eigen::MatrixXd h;
  BlockPartition partition;

  Eigen::MatrixXd symmetric_part() const { return 0.5 * (h + h.transpose()); }
  Eigen::MatrixXd antisymmetric_part() const { return 0.5 * (h - h.transpose()); }
  Eigen::MatrixXd block_diagonal() const;
  Eigen::MatrixXd block_offdiagonal() const { return h - block_diagonal(); }
};

struct AnalysisOptions {
  Eigen::Index dim_cap = 200;       // dense assembly refuses larger games
  double fd_step = 1e-5;            // central differences of xi when no analytic oracle
  double stationary_tol = 1e-8;     // ||xi|| threshold for "approximately stationary"
  double nash_tol = 1e-9;           // PSD slack for diagonal blocks
  double spectral_tol = 1e-9;       // power-iteration tolerance
  int spectral_max_iter = 50000;
  int spectral_restarts = 5;
  double rho_margin = 1e-8;         // converges_locally <=> rho < 1 - rho_margin
};

// Assembles H column by column, preferring the game's analytic dense oracle
// and falling back to central finite differences of the simultaneous
// gradient.
DenseGameHessian assemble_hessian(Game& game, const FlatParams& theta,
                                  const AnalysisOptions& options = {});

struct HessianDecomposition {
  Eigen::MatrixXd s, a, h_d, h_o;
};

// Exact halves: S = (H + H^T)/2, A = (H - H^T)/2, plus the block splitting.
HessianDecomposition decompose(const Eigen::MatrixXd& h, const BlockPartition& partition);

// Certified step-size bound 1/(4 ||S||); +infinity when ||S|| = 0.
double theorem_step_bound(const Eigen::MatrixXd& s, const AnalysisOptions& options = {});

// Jacobian of one update at a stationary point: I - eta (I + eta H_o)^{-1} H,
// via a direct dense solve. Throws NumericError if I + eta H_o is singular.
Eigen::MatrixXd pcgd_update_jacobian(const Eigen::MatrixXd& h,
                                     const BlockPartition& partition, double eta);

// Second-order surrogate for a local Nash equilibrium: ||xi|| <= tol and
// every diagonal block of H is PSD up to tol. Boundary (singular) blocks are
// treated as passing; the variational definition is inconclusive there.
bool check_local_nash(Game& game, const FlatParams& theta, double tol,
                      const AnalysisOptions& options = {});

struct ConvergenceVerdict {
  double rho = 0.0;            // spectral radius of the update Jacobian
  bool rho_converged = false;  // power-iteration stability flag
  double eta = 0.0;
  double step_bound = 0.0;     // 1/(4 ||S||)
  bool is_local_nash = false;
  bool converges_locally = false;  // rho < 1 - rho_margin
};

// Assembles H at an (approximately) stationary point and classifies local
// convergence of the update map through its spectral radius.
ConvergenceVerdict classify_convergence(Game& game, const FlatParams& theta, double eta,
                                        const AnalysisOptions& options = {});

}  // namespace polyopt
