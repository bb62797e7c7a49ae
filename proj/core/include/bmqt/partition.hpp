#pragma once

#include <Eigen/Dense>

#include <array>

#include "bmqt/quadrature.hpp"

namespace bmqt {

/// Dual multiplier triple constrained to the zero-sum subspace
/// X = { y in R^3 : y.(1,1,1) = 0 }. Every constructor projects, so the
/// constraint holds exactly after any arithmetic update.
struct MuVector {
  std::array<double, 3> mu{0.0, 0.0, 0.0};

  MuVector() = default;
  MuVector(double m1, double m2, double m3) : mu{m1, m2, m3} { project(); }
  explicit MuVector(const std::array<double, 3>& m) : mu(m) { project(); }

  double operator[](int i) const { return mu[i]; }

  /// Re-impose mu1 + mu2 + mu3 = 0, exactly: subtract the mean, then rebuild
  /// the last component so the floating-point sum vanishes identically.
  void project() {
    const double mean = (mu[0] + mu[1] + mu[2]) / 3.0;
    for (auto& m : mu) m -= mean;
    mu[2] = -(mu[0] + mu[1]);
  }

  double max_abs() const;
};

/// Orthonormal basis of the zero-sum subspace X used for the reduced 2-D
/// Newton solves: f1 = (-1,1,0)/sqrt(2), f2 = (1,1,-2)/sqrt(6).
inline const Eigen::Matrix<double, 3, 2>& x_basis() {
  static const Eigen::Matrix<double, 3, 2> f = [] {
    Eigen::Matrix<double, 3, 2> m;
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
    m << -1.0 / s2, 1.0 / s6, 1.0 / s2, 1.0 / s6, 0.0, -2.0 / s6;
    return m;
  }();
  return f;
}

/// One quadrature pass worth of partition-function data at a given mu:
/// log Z, the first moments <p_i^2> (the components of grad log Z), and the
/// covariance matrix N_ij = <p_i^2 p_j^2> - <p_i^2><p_j^2> (the Hessian of
/// log Z).
struct ZMoments {
  double log_z = 0.0;
  std::array<double, 3> grad{};   // each in (0,1), summing to 1
  Eigen::Matrix3d hess;           // symmetric, positive definite on X
};

/// Evaluates log Z and both logarithmic derivatives in a single pass.
/// Overflow-safe (the integrand is shifted by max_i mu_i before
/// exponentiation) and exactly equivariant under permutations of mu.
ZMoments z_moments(const MuVector& mu, const SphereQuadrature& quad);

/// Z(nu) = integral over S^2 of exp(sum_j nu_j p_j^2), defined for any finite
/// triple (the zero-sum constraint only pins the dual solve; Z itself obeys
/// Z(nu + c) = e^c Z(nu) since |p|^2 = 1). Strictly positive.
double partition_Z(const std::array<double, 3>& nu, const SphereQuadrature& quad);
double partition_Z(const MuVector& mu, const SphereQuadrature& quad);

/// (d log Z / d mu_i)_i = <p_i^2>; components lie in (0,1) and sum to 1.
std::array<double, 3> logZ_grad(const MuVector& mu, const SphereQuadrature& quad);

/// Covariance matrix N of (p1^2, p2^2, p3^2) under exp(mu.p^2)/Z; symmetric,
/// positive definite on X.
Eigen::Matrix3d logZ_hess(const MuVector& mu, const SphereQuadrature& quad);

}  // namespace bmqt
