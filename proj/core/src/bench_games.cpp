#include "polyopt/bench_games.hpp"

#include <Eigen/Dense>
#include <random>
#include <string>

#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

namespace polyopt {

QuadraticPolymatrixGame::QuadraticPolymatrixGame(BlockPartition partition,
                                                 Eigen::MatrixXd blocks)
    : partition_(std::move(partition)), blocks_(std::move(blocks)) {
  if (blocks_.rows() != partition_.total || blocks_.cols() != partition_.total) {
    throw ContractViolation("QuadraticPolymatrixGame: block matrix size mismatch");
  }
  for (int i = 0; i < partition_.players(); ++i) {
    const auto bii = blocks_.block(partition_.offsets[i], partition_.offsets[i],
                                   partition_.dims[i], partition_.dims[i]);
    if ((bii - bii.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ContractViolation("QuadraticPolymatrixGame: diagonal block " +
                              std::to_string(i) + " must be symmetric");
    }
  }
  off_blocks_ = blocks_;
  for (int i = 0; i < partition_.players(); ++i) {
    off_blocks_.block(partition_.offsets[i], partition_.offsets[i], partition_.dims[i],
                      partition_.dims[i]).setZero();
  }
}

Eigen::VectorXd QuadraticPolymatrixGame::losses(const FlatParams& theta) {
  const int n = partition_.players();
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const auto ti = theta.block(i);
    const auto bii = blocks_.block(partition_.offsets[i], partition_.offsets[i],
                                   partition_.dims[i], partition_.dims[i]);
    double loss = 0.5 * ti.dot(bii * ti);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto bij = blocks_.block(partition_.offsets[i], partition_.offsets[j],
                                     partition_.dims[i], partition_.dims[j]);
      loss += ti.dot(bij * theta.block(j));
    }
    out[i] = loss;
  }
  return out;
}

FlatParams QuadraticPolymatrixGame::simultaneous_gradient(const FlatParams& theta) {
  // grad_i L^i = B_ii theta_i + sum_{j != i} B_ij theta_j = (B theta)_i.
  return FlatParams(partition_, blocks_ * theta.values);
}

FlatParams QuadraticPolymatrixGame::offdiag_hvp(const FlatParams&, const FlatParams& v) {
  return FlatParams(partition_, off_blocks_ * v.values);
}

FlatParams QuadraticPolymatrixGame::offdiag_hvp_transpose(const FlatParams&,
                                                          const FlatParams& v) {
  return FlatParams(partition_, off_blocks_.transpose() * v.values);
}

Eigen::MatrixXd QuadraticPolymatrixGame::dense_hessian(const FlatParams&) {
  return blocks_;
}

namespace {

// Scalar two-player game with losses (c x y, -c x y).
class BilinearGame : public Game {
 public:
  explicit BilinearGame(double coupling)
      : partition_(BlockPartition::from_dims({1, 1})), coupling_(coupling) {
    if (coupling_ == 0.0) {
      throw ContractViolation("bilinear_game: coupling must be nonzero (H singular)");
    }
  }

  const BlockPartition& partition() const override { return partition_; }

  Eigen::VectorXd losses(const FlatParams& theta) override {
    const double xy = theta.values[0] * theta.values[1];
    Eigen::VectorXd out(2);
    out << coupling_ * xy, -coupling_ * xy;
    return out;
  }

  FlatParams simultaneous_gradient(const FlatParams& theta) override {
    Eigen::VectorXd g(2);
    g << coupling_ * theta.values[1], -coupling_ * theta.values[0];
    return FlatParams(partition_, std::move(g));
  }

  FlatParams offdiag_hvp(const FlatParams&, const FlatParams& v) override {
    Eigen::VectorXd out(2);
    out << coupling_ * v.values[1], -coupling_ * v.values[0];
    return FlatParams(partition_, std::move(out));
  }

  bool has_offdiag_hvp_transpose() const override { return true; }

  FlatParams offdiag_hvp_transpose(const FlatParams&, const FlatParams& v) override {
    Eigen::VectorXd out(2);
    out << -coupling_ * v.values[1], coupling_ * v.values[0];
    return FlatParams(partition_, std::move(out));
  }

  bool has_dense_hessian() const override { return true; }

  Eigen::MatrixXd dense_hessian(const FlatParams&) override {
    Eigen::MatrixXd h(2, 2);
    h << 0, coupling_, -coupling_, 0;
    return h;
  }

 private:
  BlockPartition partition_;
  double coupling_;
};

// L^1 = t1 t2 + t1 t3 + t1 t4, L^2 = -t1 t2 + t2 t3 + t2 t4,
// L^3 = -t1 t3 - t2 t3 + t3 t4, L^4 = -t1 t4 - t2 t4 - t3 t4.
class FourPlayerExample : public Game {
 public:
  FourPlayerExample() : partition_(BlockPartition::from_dims({1, 1, 1, 1})) {
    hessian_.resize(4, 4);
    hessian_ << 0, 1, 1, 1,
               -1, 0, 1, 1,
               -1, -1, 0, 1,
               -1, -1, -1, 0;
  }

  const BlockPartition& partition() const override { return partition_; }

  Eigen::VectorXd losses(const FlatParams& theta) override {
    const auto& t = theta.values;
    Eigen::VectorXd out(4);
    out[0] = t[0] * t[1] + t[0] * t[2] + t[0] * t[3];
    out[1] = -t[0] * t[1] + t[1] * t[2] + t[1] * t[3];
    out[2] = -t[0] * t[2] - t[1] * t[2] + t[2] * t[3];
    out[3] = -t[0] * t[3] - t[1] * t[3] - t[2] * t[3];
    return out;
  }

  FlatParams simultaneous_gradient(const FlatParams& theta) override {
    return FlatParams(partition_, hessian_ * theta.values);
  }

  FlatParams offdiag_hvp(const FlatParams&, const FlatParams& v) override {
    // Diagonal blocks are zero, so H_o = H.
    return FlatParams(partition_, hessian_ * v.values);
  }

  bool has_offdiag_hvp_transpose() const override { return true; }

  FlatParams offdiag_hvp_transpose(const FlatParams&, const FlatParams& v) override {
    return FlatParams(partition_, hessian_.transpose() * v.values);
  }

  bool has_dense_hessian() const override { return true; }

  Eigen::MatrixXd dense_hessian(const FlatParams&) override { return hessian_; }

 private:
  BlockPartition partition_;
  Eigen::MatrixXd hessian_;
};

}  // namespace

std::unique_ptr<Game> bilinear_game(double coupling) {
  return std::make_unique<BilinearGame>(coupling);
}

std::unique_ptr<Game> four_player_example() {
  return std::make_unique<FourPlayerExample>();
}

QuadraticPolymatrixGame random_quadratic_polymatrix(std::uint64_t seed,
                                                    std::vector<Eigen::Index> dims,
                                                    double s_scale, double a_scale) {
  if (dims.size() < 2) {
    throw ContractViolation("random_quadratic_polymatrix: need at least two players");
  }
  if (s_scale < 0) {
    throw ContractViolation("random_quadratic_polymatrix: s_scale must be >= 0");
  }
  const BlockPartition partition = BlockPartition::from_dims(dims);
  const int n = partition.players();
  const Eigen::Index d = partition.total;

  // Relative strength of the symmetric cross coupling; small enough that the
  // PSD floor on the diagonal blocks usually keeps S itself PSD.
  constexpr double kSymCross = 0.05;
  constexpr double kAntiCross = 0.5;
  constexpr int kMaxRetries = 10;

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::mt19937_64 rng(split_seed(seed, 0xABCD0000ull + attempt));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Eigen::Index r, Eigen::Index c) {
      Eigen::MatrixXd m(r, c);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
      return m;
    };

    Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      const Eigen::Index di = partition.dims[i];
      const Eigen::MatrixXd g = draw(di, di);
      blocks.block(partition.offsets[i], partition.offsets[i], di, di) =
          s_scale * (g.transpose() * g / static_cast<double>(di) +
                     0.1 * Eigen::MatrixXd::Identity(di, di));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Eigen::Index di = partition.dims[i], dj = partition.dims[j];
        const Eigen::MatrixXd sym = kSymCross * draw(di, dj);
        const Eigen::MatrixXd anti = kAntiCross * draw(di, dj);
        blocks.block(partition.offsets[i], partition.offsets[j], di, dj) =
            s_scale * sym + a_scale * anti;
        blocks.block(partition.offsets[j], partition.offsets[i], dj, di) =
            s_scale * sym.transpose() - a_scale * anti.transpose();
      }
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(blocks);
    if (!lu.isInvertible()) continue;
    const Eigen::MatrixXd s = 0.5 * (blocks + blocks.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, s.norm())) continue;

    return QuadraticPolymatrixGame(partition, std::move(blocks));
  }
  throw NumericError("random_quadratic_polymatrix: retries exhausted (seed " +
                     std::to_string(seed) + ")");
}

}  // namespace polyopt
