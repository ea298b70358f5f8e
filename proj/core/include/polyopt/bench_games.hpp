#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>

#include "polyopt/game.hpp"

namespace polyopt {

// Quadratic polymatrix game with losses
//   L^i = 1/2 theta_i^T B_ii theta_i + sum_{j != i} theta_i^T B_ij theta_j,
// stored as the assembled block matrix B, which equals the (constant) game
// Hessian. theta = 0 is a stationary point; with PSD diagonal blocks it is a
// local Nash equilibrium.
class QuadraticPolymatrixGame : public Game {
 public:
  QuadraticPolymatrixGame(BlockPartition partition, Eigen::MatrixXd blocks);

  const BlockPartition& partition() const override { return partition_; }
  Eigen::VectorXd losses(const FlatParams& theta) override;
  FlatParams simultaneous_gradient(const FlatParams& theta) override;
  FlatParams offdiag_hvp(const FlatParams& theta, const FlatParams& v) override;
  bool has_offdiag_hvp_transpose() const override { return true; }
  FlatParams offdiag_hvp_transpose(const FlatParams& theta, const FlatParams& v) override;
  bool has_dense_hessian() const override { return true; }
  Eigen::MatrixXd dense_hessian(const FlatParams& theta) override;

  const Eigen::MatrixXd& blocks() const { return blocks_; }

 private:
  BlockPartition partition_;
  Eigen::MatrixXd blocks_;       // full d x d, equals H
  Eigen::MatrixXd off_blocks_;   // H with diagonal blocks zeroed
};

// Two-player bilinear game L1 = c x y, L2 = -c x y. The classic example
// where simultaneous gradient descent cycles outward while interaction-aware
// updates contract. Coupling c must be nonzero (c = 0 makes H singular).
std::unique_ptr<Game> bilinear_game(double coupling);

// Four-player pairwise zero-sum multilinear game on scalar strategies with
// the +-1 coupling pattern: L^1 = t1 t2 + t1 t3 + t1 t4, L^2 = -t1 t2 +
// t2 t3 + t2 t4, and so on. Its Hessian is antisymmetric (S = 0), so the
// admissible PCGD step size is unbounded.
std::unique_ptr<Game> four_player_example();

// Seeded random quadratic polymatrix game. Diagonal blocks are PSD with a
// floor (s_scale * (G^T G / d_i + 0.1 I)); each off-diagonal pair splits into
// a symmetric component scaled by s_scale and an antisymmetric component
// scaled by a_scale, so a_scale strengthens only the competitive coupling and
// leaves the symmetric part S untouched. Draws depend only on (seed, dims):
// the same seed under different scales yields the same underlying matrices.
// Games are resampled (up to 10 tries) until H is invertible and S is PSD,
// the regime where the certified step-size bound applies.
QuadraticPolymatrixGame random_quadratic_polymatrix(std::uint64_t seed,
                                                    std::vector<Eigen::Index> dims,
                                                    double s_scale, double a_scale);

}  // namespace polyopt
