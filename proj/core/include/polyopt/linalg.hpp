#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

namespace polyopt {

// Matrix-free square operator. `apply` must be linear and re-entrant;
// `apply_transpose` (when present) must satisfy <Mu, v> == <u, M^T v>.
struct LinearOperator {
  Eigen::Index dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_transpose;

  bool has_transpose() const { return static_cast<bool>(apply_transpose); }

  // Wraps a dense matrix (copied) as an operator with transpose.
  static LinearOperator from_dense(Eigen::MatrixXd m);
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;  // ||M^T M x - M^T y|| / ||M^T y||, recomputed at exit
  bool converged = false;
  bool warm_started = false;
};

struct CgResult {
  Eigen::VectorXd x;
  CgReport report;
};

// Solves M x = y through the normal equations M^T M x = M^T y with conjugate
// gradient, terminating once ||M^T M x - M^T y|| <= eps ||M^T y||. The
// termination test is re-verified against a freshly computed residual before
// the solver reports convergence, so the reported iterate satisfies the
// criterion exactly. On breakdown (zero curvature with a nonzero residual)
// the best iterate is returned with converged=false.
CgResult conjugate_gradient_normal(const LinearOperator& m, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& x0, double eps, int max_iter);

// Largest |eigenvalue| of a symmetric operator by power iteration. The
// estimate at max_iter is compared against the estimate at half the
// iterations; `tol` bounds their relative difference at convergence.
double spectral_norm_symmetric(const LinearOperator& s, double tol = 1e-10,
                               int max_iter = 10000);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
};

// Spectral radius estimate for a general (nonsymmetric) operator: power
// iteration with `restarts` seeded random starts, taking the largest stable
// growth rate. Each restart refines the raw growth ratios with a two-step
// Krylov fit, which is exact once the iterate lies in the dominant invariant
// subspace of a simple real eigenvalue or a conjugate pair. Accuracy is
// within tol for matrices whose dominant eigenvalue is unique in modulus up
// to conjugate pairs; `converged` reports whether the estimate stabilized.
SpectralEstimate spectral_radius(const LinearOperator& f, double tol = 1e-9,
                                 int max_iter = 50000, int restarts = 5,
                                 std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Deterministic 64-bit mix used to derive sub-seeds throughout the library.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace polyopt
