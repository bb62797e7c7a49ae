#pragma once

#include <Eigen/Dense>

#include <array>

#include "bmqt/rng.hpp"

namespace bmqt {

/// Eigenvalue triple of a Q-tensor. Sums to zero; "physical" means every
/// eigenvalue lies in the open interval (-1/3, 2/3).
struct Spectrum {
  std::array<double, 3> lambda{0.0, 0.0, 0.0};

  Spectrum() = default;
  Spectrum(double l1, double l2, double l3) : lambda{l1, l2, l3} {}

  double operator[](int i) const { return lambda[i]; }

  double trace() const { return lambda[0] + lambda[1] + lambda[2]; }

  bool physical() const {
    for (double l : lambda)
      if (!(l > -1.0 / 3.0 && l < 2.0 / 3.0)) return false;
    return true;
  }

  /// Distance to the boundary of the physical domain (negative if outside).
  double boundary_margin() const {
    double m = 1.0;
    for (double l : lambda) m = std::min({m, l + 1.0 / 3.0, 2.0 / 3.0 - l});
    return m;
  }
};

/// Symmetric traceless 3x3 order parameter. Symmetry is exact by storage
/// (six components, lower triangle mirrored); the trace is checked on
/// construction from a general matrix.
class QTensor {
 public:
  QTensor() : m_(Eigen::Matrix3d::Zero()) {}

  /// From a symmetric matrix; throws domain_error if |trace| > 1e-12 or the
  /// matrix is not symmetric to machine precision.
  static QTensor from_matrix(const Eigen::Matrix3d& m);

  /// From a symmetric matrix, removing any trace (projection L[m]).
  static QTensor deviatoric(const Eigen::Matrix3d& m);

  static QTensor from_diag(double l1, double l2, double l3);

  /// Coordinates in the orthonormal symmetric-traceless basis (see
  /// traceless_basis()).
  static QTensor from_basis_coeffs(const std::array<double, 5>& c);
  std::array<double, 5> basis_coeffs() const;

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double norm() const { return m_.norm(); }  // Frobenius

  QTensor rotated(const Eigen::Matrix3d& r) const { return QTensor(r * m_ * r.transpose()); }

 private:
  explicit QTensor(const Eigen::Matrix3d& m) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Orthonormal (Frobenius) basis of the symmetric traceless 3x3 matrices.
const std::array<Eigen::Matrix3d, 5>& traceless_basis();

/// Spectral decomposition of a Q-tensor: eigenvalues sorted descending,
/// orthonormal eigenvector columns with a deterministic sign convention
/// (first component of magnitude > 1e-12 made positive). Exact for
/// already-diagonal input, including the zero tensor (axes = identity).
struct EigenFrame {
  Spectrum spectrum;
  Eigen::Matrix3d axes;
};

EigenFrame eigendecomp_sym3(const QTensor& q);

/// Uniform random rotation (quaternion method).
Eigen::Matrix3d random_rotation(Rng& rng);

/// Unit-Frobenius random symmetric traceless tensor.
QTensor random_unit_traceless(Rng& rng);

/// Eigenvalues sampled uniformly on the physical simplex
/// { lambda_i + 1/3 >= margin }, i.e. at distance >= margin from the boundary.
Spectrum sample_physical_spectrum(Rng& rng, double margin);

}  // namespace bmqt
