#pragma once

#include <Eigen/Core>
#include <memory>

#include "polyopt/partition.hpp"

namespace polyopt {

// A differentiable n-player game seen through its oracles: per-player losses
// L^i(theta), the simultaneous gradient xi(theta) whose block i is the
// gradient of L^i with respect to player i's own parameters, and products of
// the block-off-diagonal game Hessian H_o with a vector. Implementations may
// be analytic (benchmark games) or sample-based (the RL adapter); callers do
// not distinguish.
class Game {
 public:
  virtual ~Game() = default;

  virtual const BlockPartition& partition() const = 0;

  virtual Eigen::VectorXd losses(const FlatParams& theta) = 0;

  virtual FlatParams simultaneous_gradient(const FlatParams& theta) = 0;

  // v |-> H_o(theta) v, block i = sum_{j != i} D_ij L^i(theta) v^j.
  virtual FlatParams offdiag_hvp(const FlatParams& theta, const FlatParams& v) = 0;

  // v |-> H_o(theta)^T v. Needed by the normal-equations solver and by SGA.
  virtual bool has_offdiag_hvp_transpose() const { return false; }
  virtual FlatParams offdiag_hvp_transpose(const FlatParams& theta, const FlatParams& v);

  // Full d x d game Hessian, for small analytic games only.
  virtual bool has_dense_hessian() const { return false; }
  virtual Eigen::MatrixXd dense_hessian(const FlatParams& theta);

  // Pure oracles are safe to call concurrently; stateful (sample-based)
  // oracles are not, and the runner serializes calls to them.
  virtual bool pure_oracles() const { return true; }
};

// Checked entry points used by optimizers and analysis. They validate that
// the inputs conform to the game's partition and that outputs are finite
// (reporting the offending player block when they are not).
Eigen::VectorXd eval_losses(Game& game, const FlatParams& theta);
FlatParams simultaneous_gradient(Game& game, const FlatParams& theta);
FlatParams offdiag_hvp(Game& game, const FlatParams& theta, const FlatParams& v);
FlatParams offdiag_hvp_transpose(Game& game, const FlatParams& theta, const FlatParams& v);

}  // namespace polyopt
