#include <cmath>
#include <random>

#include "doctest.h"
#include "polyopt/autodiff.hpp"
#include "polyopt/errors.hpp"
#include "polyopt/policy.hpp"

using namespace polyopt;

namespace {

Eigen::VectorXd random_vec(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

// Central finite differences of a scalar function of the parameter vector.
template <typename F>
Eigen::VectorXd fd_gradient(F f, const Eigen::VectorXd& params, double h = 1e-6) {
  Eigen::VectorXd grad(params.size());
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + h;
    const double plus = f(probe);
    probe[i] = params[i] - h;
    const double minus = f(probe);
    probe[i] = params[i];
    grad[i] = (plus - minus) / (2 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("product of two leaves") {
  Eigen::VectorXd params(2);
  params << 3, 4;
  ad::Tape tape;
  tape.bind(params);
  const auto x = tape.param(0, 1);
  const auto y = tape.param(1, 1);
  const auto f = tape.mul(x, y);
  CHECK(tape.value(f) == doctest::Approx(12.0));

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2);
  tape.backward(f, grad);
  CHECK(grad[0] == doctest::Approx(4.0));
  CHECK(grad[1] == doctest::Approx(3.0));
}

TEST_CASE("identity network reproduces its input") {
  MlpPolicy net;
  net.layers = {3, 3};
  Eigen::VectorXd params = Eigen::VectorXd::Zero(net.param_count());
  // Row-major identity weights, zero bias.
  params[0] = params[4] = params[8] = 1.0;
  const Eigen::VectorXd u = random_vec(3, 7);
  CHECK((net.eval(params, u) - u).norm() == doctest::Approx(0.0));

  ad::Tape tape;
  tape.bind(params);
  const auto out = net.build(tape, 0, u);
  CHECK((tape.values(out) - u).norm() == doctest::Approx(0.0));
}

TEST_CASE("logsumexp of zero logits") {
  Eigen::VectorXd params(3);
  params << 0, 0, 0;
  ad::Tape tape;
  tape.bind(params);
  CHECK(tape.value(tape.logsumexp(tape.param(0, 3))) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("logsumexp is overflow safe") {
  Eigen::VectorXd params(2);
  params << 1000.0, 999.0;
  ad::Tape tape;
  tape.bind(params);
  const double v = tape.value(tape.logsumexp(tape.param(0, 2)));
  CHECK(v == doctest::Approx(1000.0 + std::log1p(std::exp(-1.0))));
}

TEST_CASE("categorical log prob values") {
  Eigen::VectorXd uniform(3);
  uniform << 0, 0, 0;
  CHECK(categorical_log_prob_value(uniform, 0) == doctest::Approx(-std::log(3.0)));

  Eigen::VectorXd peaked(3);
  peaked << 10, 0, 0;
  // -log(1 + 2 e^{-10}), evaluated independently.
  CHECK(categorical_log_prob_value(peaked, 0) ==
        doctest::Approx(-std::log1p(2.0 * std::exp(-10.0))).epsilon(1e-12));

  // Probabilities exponentiate and sum to 1.
  const Eigen::VectorXd logits = random_vec(5, 11, 3.0);
  double total = 0;
  for (int a = 0; a < 5; ++a) total += std::exp(categorical_log_prob_value(logits, a));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(categorical_log_prob_value(uniform, 3), ContractViolation);
}

TEST_CASE("gaussian log prob values and gradient at the mode") {
  const double sigma = 25.0;
  const double log_norm = std::log(sigma * std::sqrt(2.0 * M_PI));
  CHECK(gaussian_log_prob_value(4.0, sigma, 4.0) == doctest::Approx(-log_norm));
  CHECK(gaussian_log_prob_value(0.0, sigma, 25.0) == doctest::Approx(-0.5 - log_norm));
  CHECK_THROWS_AS(gaussian_log_prob_value(0.0, 0.0, 0.0), ContractViolation);

  // d/d(mean) log N(action; mean, sigma) vanishes at mean == action.
  Eigen::VectorXd params(1);
  params << 4.0;
  ad::Tape tape;
  tape.bind(params);
  const auto mean = tape.select(tape.param(0, 1), 0);
  const auto lp = gaussian_log_prob(tape, mean, sigma, 4.0);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(1);
  tape.backward(lp, grad);
  CHECK(grad[0] == doctest::Approx(0.0));
}

TEST_CASE("primitive gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Eigen::VectorXd params = random_vec(10, seed);
    params = params.array().abs() + 0.5;  // keep log() arguments positive

    auto f = [](const Eigen::VectorXd& p) {
      ad::Tape tape;
      tape.bind(p);
      const auto w = tape.param(0, 6);
      const auto x = tape.param(6, 2);
      const auto b = tape.param(8, 2);
      const auto z = tape.add(tape.matvec(w, x, 3, 2), tape.constant(Eigen::Vector3d(1, 2, 3)));
      const auto t = tape.tanh(z);
      const auto r = tape.relu(tape.sub(t, tape.constant(Eigen::Vector3d(0.1, 0.2, 0.3))));
      const auto lse = tape.logsumexp(r);
      const auto quad = tape.dot(b, tape.log(tape.exp(b)));
      const auto mixed = tape.mul(tape.sum(tape.scale(x, 0.5)), lse);
      return tape.value(tape.add(tape.add(lse, quad), tape.add(mixed, tape.select(t, 1))));
    };

    auto eval_grad = [&](const Eigen::VectorXd& p) {
      ad::Tape tape;
      tape.bind(p);
      const auto w = tape.param(0, 6);
      const auto x = tape.param(6, 2);
      const auto b = tape.param(8, 2);
      const auto z = tape.add(tape.matvec(w, x, 3, 2), tape.constant(Eigen::Vector3d(1, 2, 3)));
      const auto t = tape.tanh(z);
      const auto r = tape.relu(tape.sub(t, tape.constant(Eigen::Vector3d(0.1, 0.2, 0.3))));
      const auto lse = tape.logsumexp(r);
      const auto quad = tape.dot(b, tape.log(tape.exp(b)));
      const auto mixed = tape.mul(tape.sum(tape.scale(x, 0.5)), lse);
      const auto out = tape.add(tape.add(lse, quad), tape.add(mixed, tape.select(t, 1)));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.size());
      tape.backward(out, grad);
      return grad;
    };

    const Eigen::VectorXd grad = eval_grad(params);
    const Eigen::VectorXd fd = fd_gradient(f, params);
    CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("mlp gradient matches finite differences") {
  MlpPolicy net;
  net.layers = {4, 8, 5, 3};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd params(net.param_count());
    net.init_params(params, rng);
    const Eigen::VectorXd obs = random_vec(4, seed + 100);

    auto f = [&](const Eigen::VectorXd& p) {
      ad::Tape tape;
      tape.bind(p);
      return tape.value(tape.logsumexp(net.build(tape, 0, obs)));
    };
    ad::Tape tape;
    tape.bind(params);
    const auto out = tape.logsumexp(net.build(tape, 0, obs));
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    tape.backward(out, grad);

    const Eigen::VectorXd fd = fd_gradient(f, params);
    CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("forward-mode directional derivative agrees with backward") {
  MlpPolicy net;
  net.layers = {3, 6, 2};
  std::mt19937_64 rng(5);
  Eigen::VectorXd params(net.param_count());
  net.init_params(params, rng);
  const Eigen::VectorXd obs = random_vec(3, 17);

  ad::Tape tape;
  tape.bind(params);
  const auto out = categorical_log_prob(tape, net.build(tape, 0, obs), 1);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  tape.backward(out, grad);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXd tangent = random_vec(params.size(), 200 + seed);
    CHECK(tape.directional(out, tangent) ==
          doctest::Approx(grad.dot(tangent)).epsilon(1e-12));
  }
}

TEST_CASE("constant outputs have zero gradient and additive objectives add") {
  Eigen::VectorXd params = random_vec(4, 3);
  ad::Tape tape;
  tape.bind(params);
  const auto c = tape.scalar(5.0);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(4);
  tape.backward(c, grad);
  CHECK(grad.norm() == 0.0);

  // backward accumulates: grad of f then grad of g equals grad of f+g.
  const auto a = tape.sum(tape.param(0, 4));
  const auto b = tape.dot(tape.param(0, 4), tape.param(0, 4));
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(4);
  tape.backward(a, g1);
  tape.backward(b, g1);
  Eigen::VectorXd g2 = Eigen::VectorXd::Zero(4);
  tape.backward(tape.add(a, b), g2);
  CHECK((g1 - g2).norm() <= 1e-14);
}

TEST_CASE("tape evaluation is deterministic") {
  MlpPolicy net;
  net.layers = {4, 6, 3};
  std::mt19937_64 rng(9);
  Eigen::VectorXd params(net.param_count());
  net.init_params(params, rng);
  const Eigen::VectorXd obs = random_vec(4, 5);

  auto run = [&]() {
    ad::Tape tape;
    tape.bind(params);
    const auto out = tape.logsumexp(net.build(tape, 0, obs));
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    tape.backward(out, grad);
    return std::make_pair(tape.value(out), grad);
  };
  const auto [v1, g1] = run();
  const auto [v2, g2] = run();
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("tape error paths") {
  ad::Tape tape;
  CHECK_THROWS_AS(tape.param(0, 1), ContractViolation);  // unbound leaf

  Eigen::VectorXd params(2);
  params << -1.0, 2.0;
  tape.bind(params);
  const auto p = tape.param(0, 2);
  CHECK_THROWS_AS(tape.log(p), NumericError);  // NaN from log of a negative

  // Non-scalar backward seed.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(tape.backward(p, grad), ContractViolation);
}

TEST_CASE("policy init is seeded and in range") {
  MlpPolicy net;
  net.layers = {10, 7, 4};
  std::mt19937_64 a(42), b(42), c(43);
  Eigen::VectorXd pa(net.param_count()), pb(net.param_count()), pc(net.param_count());
  net.init_params(pa, a);
  net.init_params(pb, b);
  net.init_params(pc, c);
  CHECK(pa == pb);
  CHECK(pa != pc);

  const double limit0 = std::sqrt(6.0 / (10 + 7));
  CHECK(pa.head(70).cwiseAbs().maxCoeff() <= limit0);
  CHECK(pa.segment(70, 7).cwiseAbs().maxCoeff() == 0.0);  // biases
}
