#include "polyopt/game.hpp"

#include <string>

#include "polyopt/errors.hpp"

namespace polyopt {

namespace {

void require_conforming(const Game& game, const FlatParams& theta, const char* what) {
  if (!theta.conforms_to(game.partition())) {
    throw ContractViolation(std::string(what) +
                            ": parameter vector does not conform to the game partition");
  }
}

// Returns -1 when all entries are finite, else the player block holding the
// first non-finite entry.
int first_bad_block(const FlatParams& x) {
  for (int i = 0; i < x.partition.players(); ++i) {
    if (!x.block(i).allFinite()) return i;
  }
  return -1;
}

}  // namespace

FlatParams Game::offdiag_hvp_transpose(const FlatParams&, const FlatParams&) {
  throw UnsupportedMethod("game does not expose a transposed off-diagonal HVP oracle");
}

Eigen::MatrixXd Game::dense_hessian(const FlatParams&) {
  throw UnsupportedMethod("game does not expose a dense Hessian oracle");
}

Eigen::VectorXd eval_losses(Game& game, const FlatParams& theta) {
  require_conforming(game, theta, "eval_losses");
  Eigen::VectorXd out = game.losses(theta);
  if (out.size() != game.partition().players()) {
    throw ContractViolation("eval_losses: game returned " + std::to_string(out.size()) +
                            " losses for " + std::to_string(game.partition().players()) +
                            " players");
  }
  return out;
}

FlatParams simultaneous_gradient(Game& game, const FlatParams& theta) {
  require_conforming(game, theta, "simultaneous_gradient");
  FlatParams grad = game.simultaneous_gradient(theta);
  if (!grad.conforms_to(game.partition())) {
    throw ContractViolation("simultaneous_gradient: oracle output does not conform");
  }
  if (int bad = first_bad_block(grad); bad >= 0) {
    throw NumericError("simultaneous_gradient: non-finite values in block " +
                       std::to_string(bad));
  }
  return grad;
}

FlatParams offdiag_hvp(Game& game, const FlatParams& theta, const FlatParams& v) {
  require_conforming(game, theta, "offdiag_hvp");
  require_conforming(game, v, "offdiag_hvp (vector argument)");
  FlatParams out = game.offdiag_hvp(theta, v);
  if (!out.conforms_to(game.partition())) {
    throw ContractViolation("offdiag_hvp: oracle output does not conform");
  }
  if (int bad = first_bad_block(out); bad >= 0) {
    throw NumericError("offdiag_hvp: non-finite values in block " + std::to_string(bad));
  }
  return out;
}

FlatParams offdiag_hvp_transpose(Game& game, const FlatParams& theta, const FlatParams& v) {
  require_conforming(game, theta, "offdiag_hvp_transpose");
  require_conforming(game, v, "offdiag_hvp_transpose (vector argument)");
  FlatParams out = game.offdiag_hvp_transpose(theta, v);
  if (!out.conforms_to(game.partition())) {
    throw ContractViolation("offdiag_hvp_transpose: oracle output does not conform");
  }
  if (int bad = first_bad_block(out); bad >= 0) {
    throw NumericError("offdiag_hvp_transpose: non-finite values in block " +
                       std::to_string(bad));
  }
  return out;
}

}  // namespace polyopt
