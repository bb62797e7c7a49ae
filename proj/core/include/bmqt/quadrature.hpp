#pragma once

#include <cstddef>
#include <vector>

namespace bmqt {

/// Quadrature rule for the unit sphere with the surface measure (total weight
/// 4*pi). Product of Gauss-Legendre in cos(theta) and a uniform trapezoid in
/// phi, stored node-by-node so consumers need not know the structure.
/// Immutable after construction and safe to share between threads.
struct SphereQuadrature {
  std::vector<double> px, py, pz;  // unit nodes, structure-of-arrays
  std::vector<double> w;           // positive weights, sum = 4*pi
  int polar_order = 0;
  int azimuthal_order = 0;

  std::size_t size() const { return w.size(); }

  /// Largest total polynomial degree integrated exactly (even monomials).
  int exact_degree() const { return std::min(2 * polar_order - 1, azimuthal_order - 1); }
};

/// Builds the product rule. Requires polar_order >= 8 and azimuthal_order >= 16;
/// smaller orders cannot even resolve the quadratic moments this library feeds
/// on and are rejected (domain_error).
SphereQuadrature build_quadrature(int polar_order, int azimuthal_order);

/// Closed-form sphere moment: integral over S^2 of p1^(2a) p2^(2b) p3^(2c).
/// Odd powers integrate to zero by symmetry; this is the even case.
double sphere_moment(int a, int b, int c);

/// Gauss-Legendre nodes/weights on [lo, hi].
void gauss_legendre(int n, double lo, double hi,
                    std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Jacobi rule on [lo, hi] with weight (hi - x)^alpha * (x - lo)^beta
/// built into the weights.
void gauss_jacobi(int n, double lo, double hi, double alpha, double beta,
                  std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace bmqt
