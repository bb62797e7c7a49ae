#pragma once

#include <array>

#include "bmqt/partition.hpp"
#include "bmqt/qtensor.hpp"

namespace bmqt {

/// Value, gradient and Hessian of the singular potential at a spectrum.
/// The gradient in eigenvalue space is exactly the dual multiplier triple;
/// the Hessian restricted to the zero-sum subspace X is the inverse of the
/// log-partition covariance N there.
struct PotentialEval {
  double value = 0.0;        // F(lambda) >= -log(4 pi)
  MuVector mu;               // = dF/dlambda, zero-sum
  Eigen::Matrix3d hess;      // N^{-1} on X, lifted to 3x3 with zero row sums
  int newton_iters = 0;
  double residual = 0.0;     // moment mismatch max_i |<p_i^2> - lambda_i - 1/3|
  double log_z = 0.0;
};

/// Module-wide default quadrature, built lazily at orders (64, 64).
/// Accurate to ~1e-12 for |mu_i| <= 30 and usable to |mu_i| ~ 100; pass an
/// explicit rule for harder evaluations (near-boundary spectra).
const SphereQuadrature& default_quadrature();

inline constexpr double kDefaultMuTol = 1e-12;

/// Solves the dual moment system d log Z / d mu_i = lambda_i + 1/3 for the
/// zero-sum multipliers by damped Newton iteration in the 2-D basis of X
/// (halving line search on the residual norm, start mu = 0, warm start
/// optional). Falls back to parameter continuation (lambda scaled by
/// t in {1/8, 1/4, 1/2, 1}) if the plain iteration stalls.
/// Throws domain_error for non-physical spectra and convergence_error (with
/// the last residual) after 200 iterations without convergence.
MuVector solve_mu(const Spectrum& s, double tol, const SphereQuadrature& quad,
                  const MuVector* warm_start = nullptr, int* iters_out = nullptr,
                  double* residual_out = nullptr, ZMoments* moments_out = nullptr);
MuVector solve_mu(const Spectrum& s, double tol = kDefaultMuTol);

/// Full dual evaluation: value = sum_i mu_i (lambda_i + 1/3) - log Z(mu),
/// gradient mu, Hessian N^{-1} restricted to X (2x2 solve in the X basis,
/// lifted back).
PotentialEval fbm_eval(const Spectrum& s, double tol, const SphereQuadrature& quad,
                       const MuVector* warm_start = nullptr);
PotentialEval fbm_eval(const Spectrum& s, double tol = kDefaultMuTol);

/// f(Q): rotation-invariant extension of the spectral potential.
double f_of_Q(const QTensor& q, double tol, const SphereQuadrature& quad);
double f_of_Q(const QTensor& q, double tol = kDefaultMuTol);

/// L[df/dQ] = sum_i mu_i n_i (x) n_i in the eigenframe of q; symmetric
/// traceless, covariant under rotations.
QTensor df_dQ(const QTensor& q, double tol, const SphereQuadrature& quad);
QTensor df_dQ(const QTensor& q, double tol = kDefaultMuTol);

/// Second derivative form D^2 f(q)[V,V] for symmetric traceless V, via the
/// spectral second-derivative formula; divided differences
/// (mu_i - mu_j)/(lambda_i - lambda_j) collapse to the N^{-1} diagonal
/// difference when |lambda_i - lambda_j| < 1e-7. Nonnegative (f is convex).
double hess_contract(const QTensor& q, const QTensor& v, double tol, const SphereQuadrature& quad);
double hess_contract(const QTensor& q, const QTensor& v, double tol = kDefaultMuTol);

/// Evaluation of the variational (primal) definition of f: builds the
/// exponential-family density on the quadrature nodes, verifies feasibility
/// (mass 1 and second moments matching q within feas_tol = 1e-8), verifies
/// first-order optimality against 20 random feasibility-preserving
/// perturbations, and returns the discrete entropy sum. An independent check
/// of the dual route; throws constraint_violation_error if the feasibility
/// residual exceeds 1e-6.
double primal_entropy_oracle(const QTensor& q, const SphereQuadrature& quad, double tol);

/// Hessian-vector data reused by the verification module: one dual solve
/// yielding everything check routines need.
struct SpectralHessian {
  EigenFrame frame;
  PotentialEval eval;
  /// D^2 f[V,V] with V given in the lab frame.
  double contract(const QTensor& v) const;
  /// L[df/dQ] in the lab frame.
  QTensor gradient() const;
};
SpectralHessian spectral_hessian(const QTensor& q, double tol, const SphereQuadrature& quad);

}  // namespace bmqt
