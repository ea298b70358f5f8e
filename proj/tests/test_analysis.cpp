#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <random>

#include "doctest.h"
#include "polyopt/analysis.hpp"
#include "polyopt/bench_games.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/linalg.hpp"

using namespace polyopt;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

// Delegates to an inner game but hides the analytic Hessian, forcing the
// finite-difference assembly path.
class HiddenHessian : public Game {
 public:
  explicit HiddenHessian(Game& inner) : inner_(inner) {}
  const BlockPartition& partition() const override { return inner_.partition(); }
  Eigen::VectorXd losses(const FlatParams& theta) override { return inner_.losses(theta); }
  FlatParams simultaneous_gradient(const FlatParams& theta) override {
    return inner_.simultaneous_gradient(theta);
  }
  FlatParams offdiag_hvp(const FlatParams& theta, const FlatParams& v) override {
    return inner_.offdiag_hvp(theta, v);
  }
  bool has_dense_hessian() const override { return false; }

 private:
  Game& inner_;
};

double eigen_spectral_radius(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("dense helpers behave as expected") {
  Eigen::MatrixXd rot(2, 2);
  rot << 0, 1, -1, 0;
  CHECK((rot * Eigen::Vector2d(1, 1) - Eigen::Vector2d(1, -1)).norm() == 0.0);
  CHECK((rot.transpose().transpose() - rot).norm() == 0.0);
  CHECK((rot * Eigen::Vector2d::Zero()).norm() == 0.0);
}

TEST_CASE("hessian assembly on analytic games") {
  const auto bilinear = bilinear_game(1.0);
  const FlatParams at(bilinear->partition(), random_vector(2, 1));
  const DenseGameHessian h = assemble_hessian(*bilinear, at);
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 1, -1, 0;
  CHECK((h.h - expected).norm() == 0.0);

  const auto four = four_player_example();
  const FlatParams ones(four->partition(), Eigen::VectorXd::Ones(4));
  Eigen::MatrixXd printed(4, 4);
  printed << 0, 1, 1, 1, -1, 0, 1, 1, -1, -1, 0, 1, -1, -1, -1, 0;
  CHECK((assemble_hessian(*four, ones).h - printed).norm() == 0.0);

  // Decoupled unit quadratics have H = I.
  QuadraticPolymatrixGame decoupled(BlockPartition::from_dims({1, 1, 1}),
                                    Eigen::MatrixXd::Identity(3, 3));
  const FlatParams origin(decoupled.partition());
  CHECK((assemble_hessian(decoupled, origin).h - Eigen::MatrixXd::Identity(3, 3)).norm() ==
        0.0);
}

TEST_CASE("finite-difference assembly matches the analytic oracle") {
  QuadraticPolymatrixGame quad = random_quadratic_polymatrix(8, {2, 2}, 1.0, 2.0);
  HiddenHessian hidden(quad);
  const FlatParams theta(quad.partition(), random_vector(4, 9));
  const Eigen::MatrixXd fd = assemble_hessian(hidden, theta).h;
  const Eigen::MatrixXd exact = quad.dense_hessian(theta);
  CHECK((fd - exact).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("assembly refuses games over the dimension cap") {
  QuadraticPolymatrixGame quad = random_quadratic_polymatrix(8, {2, 2}, 1.0, 1.0);
  AnalysisOptions options;
  options.dim_cap = 3;
  const FlatParams theta(quad.partition());
  CHECK_THROWS_AS(assemble_hessian(quad, theta, options), ContractViolation);
}

TEST_CASE("decomposition identities and examples") {
  const BlockPartition partition = BlockPartition::from_dims({1, 1});

  Eigen::MatrixXd upper(2, 2);
  upper << 0, 2, 0, 0;
  const HessianDecomposition parts = decompose(upper, partition);
  Eigen::MatrixXd s(2, 2), a(2, 2);
  s << 0, 1, 1, 0;
  a << 0, 1, -1, 0;
  CHECK((parts.s - s).norm() == 0.0);
  CHECK((parts.a - a).norm() == 0.0);

  // Four-player example: S = 0, A = H.
  Eigen::MatrixXd printed(4, 4);
  printed << 0, 1, 1, 1, -1, 0, 1, 1, -1, -1, 0, 1, -1, -1, -1, 0;
  const HessianDecomposition four =
      decompose(printed, BlockPartition::from_dims({1, 1, 1, 1}));
  CHECK(four.s.norm() == 0.0);
  CHECK((four.a - printed).norm() == 0.0);

  // Symmetric input: A = 0.
  Eigen::MatrixXd sym(2, 2);
  sym << 2, 1, 1, 2;
  CHECK(decompose(sym, partition).a.norm() == 0.0);

  // Identities on random matrices, up to rounding of the halves.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Eigen::MatrixXd h(4, 4);
    const Eigen::VectorXd entries = random_vector(16, 100 + seed);
    for (int i = 0; i < 16; ++i) h(i / 4, i % 4) = 10.0 * entries[i];
    const auto d = decompose(h, BlockPartition::from_dims({2, 2}));
    CHECK((d.s + d.a - h).cwiseAbs().maxCoeff() <= 1e-14 * h.cwiseAbs().maxCoeff());
    CHECK((d.a + d.a.transpose()).norm() == 0.0);  // antisymmetry is exact
    CHECK((d.s - d.s.transpose()).norm() == 0.0);
    CHECK((d.h_d + d.h_o - h).norm() == 0.0);
  }
}

TEST_CASE("theorem step bound") {
  CHECK(theorem_step_bound(Eigen::MatrixXd::Zero(4, 4)) ==
        std::numeric_limits<double>::infinity());
  CHECK(theorem_step_bound(Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(0.25));
  Eigen::MatrixXd s(2, 2);
  s << 2, 1, 1, 2;  // norm 3
  CHECK(theorem_step_bound(s) == doctest::Approx(1.0 / 12.0).epsilon(1e-8));
}

TEST_CASE("update jacobian examples") {
  const BlockPartition partition = BlockPartition::from_dims({1, 1});

  // Decoupled quadratic: H_o = 0, jacobian is (1 - eta) I at H = I.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  CHECK((pcgd_update_jacobian(identity, partition, 0.1) - 0.9 * identity).norm() <= 1e-15);

  // Bilinear at eta = 1: spectral radius 1/sqrt(2).
  Eigen::MatrixXd h(2, 2);
  h << 0, 1, -1, 0;
  const Eigen::MatrixXd jac = pcgd_update_jacobian(h, partition, 1.0);
  CHECK(eigen_spectral_radius(jac) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(spectral_radius(LinearOperator::from_dense(jac)).value ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));

  // Four-player example: contraction for widely spread step sizes.
  Eigen::MatrixXd printed(4, 4);
  printed << 0, 1, 1, 1, -1, 0, 1, 1, -1, -1, 0, 1, -1, -1, -1, 0;
  const BlockPartition four = BlockPartition::from_dims({1, 1, 1, 1});
  for (double eta : {0.1, 1.0, 10.0}) {
    CHECK(eigen_spectral_radius(pcgd_update_jacobian(printed, four, eta)) < 1.0);
  }

  // Singular regularized system: I + eta H_o with symmetric off-coupling.
  Eigen::MatrixXd sym_off(2, 2);
  sym_off << 1, 1, 1, 1;  // H_o = [[0,1],[1,0]], I + H_o singular at eta = 1
  CHECK_THROWS_AS(pcgd_update_jacobian(sym_off, partition, 1.0), NumericError);
}

TEST_CASE("local nash surrogate check") {
  const auto four = four_player_example();
  const FlatParams origin(four->partition());
  CHECK(check_local_nash(*four, origin, 1e-9));

  // Strictly concave own-loss: not a local Nash despite stationarity.
  Eigen::MatrixXd concave(2, 2);
  concave << -1, 0, 0, 1;
  QuadraticPolymatrixGame bad(BlockPartition::from_dims({1, 1}), concave);
  CHECK_FALSE(check_local_nash(bad, FlatParams(bad.partition()), 1e-9));

  // Nonstationary point.
  FlatParams off(four->partition(), Eigen::VectorXd::Ones(4));
  CHECK_FALSE(check_local_nash(*four, off, 1e-9));
}

TEST_CASE("classification on the four-player example and potential games") {
  const auto four = four_player_example();
  const FlatParams origin(four->partition());
  const ConvergenceVerdict big_step = classify_convergence(*four, origin, 10.0);
  CHECK(big_step.converges_locally);
  CHECK(big_step.is_local_nash);
  CHECK(big_step.step_bound == std::numeric_limits<double>::infinity());

  // Diagonal potential game: eta beyond 2/||S|| diverges.
  QuadraticPolymatrixGame potential(BlockPartition::from_dims({1, 1}),
                                    Eigen::MatrixXd::Identity(2, 2));
  const FlatParams o2(potential.partition());
  const ConvergenceVerdict diverges = classify_convergence(potential, o2, 3.0);
  CHECK_FALSE(diverges.converges_locally);
  CHECK(diverges.rho == doctest::Approx(2.0).epsilon(1e-8));
  const ConvergenceVerdict fine = classify_convergence(potential, o2, 0.2);
  CHECK(fine.converges_locally);

  // Requires approximate stationarity.
  FlatParams off(four->partition(), Eigen::VectorXd::Ones(4));
  CHECK_THROWS_AS(classify_convergence(*four, off, 1.0), ContractViolation);
}

TEST_CASE("certified step bound yields contraction on random quadratic games") {
  // Scaled-down version of the acceptance sweep.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    for (double a_scale : {1.0, 10.0}) {
      QuadraticPolymatrixGame game =
          random_quadratic_polymatrix(seed, {2, 2, 2}, 1.0, a_scale);
      const FlatParams origin(game.partition());
      REQUIRE(check_local_nash(game, origin, 1e-9));
      const Eigen::MatrixXd h = game.dense_hessian(origin);
      const auto parts = decompose(h, game.partition());
      const double bound = theorem_step_bound(parts.s);
      const ConvergenceVerdict verdict = classify_convergence(game, origin, 0.9 * bound);
      CHECK(verdict.converges_locally);
    }
  }
}

TEST_CASE("contraction is robust to the competitive coupling strength") {
  // Fix eta from the a_scale = 1 game, then rescale only the antisymmetric
  // coupling: the update-map radius stays below 1 while the simgd radius
  // blows up.
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    QuadraticPolymatrixGame base = random_quadratic_polymatrix(seed, {2, 2, 2}, 1.0, 1.0);
    const FlatParams origin(base.partition());
    const auto parts = decompose(base.dense_hessian(origin), base.partition());
    const double eta = 0.9 * theorem_step_bound(parts.s);

    double last_simgd_rho = 0.0;
    for (double factor : {1.0, 10.0, 100.0, 1000.0}) {
      QuadraticPolymatrixGame scaled =
          random_quadratic_polymatrix(seed, {2, 2, 2}, 1.0, factor);
      const Eigen::MatrixXd h = scaled.dense_hessian(origin);
      CHECK(eigen_spectral_radius(pcgd_update_jacobian(h, scaled.partition(), eta)) < 1.0);
      last_simgd_rho =
          eigen_spectral_radius(Eigen::MatrixXd::Identity(h.rows(), h.cols()) - eta * h);
    }
    CHECK(last_simgd_rho > 1.0);
  }
}
