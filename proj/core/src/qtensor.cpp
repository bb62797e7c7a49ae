#include "bmqt/qtensor.hpp"

#include <algorithm>
#include <cmath>

#include "bmqt/errors.hpp"

namespace bmqt {

QTensor QTensor::from_matrix(const Eigen::Matrix3d& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw domain_error("QTensor: matrix is not symmetric");
  if (std::abs(m.trace()) > 1e-12)
    throw domain_error("QTensor: trace exceeds 1e-12");
  Eigen::Matrix3d s = 0.5 * (m + m.transpose());
  s.diagonal().array() -= s.trace() / 3.0;
  return QTensor(s);
}

QTensor QTensor::deviatoric(const Eigen::Matrix3d& m) {
  Eigen::Matrix3d s = 0.5 * (m + m.transpose());
  s.diagonal().array() -= s.trace() / 3.0;
  return QTensor(s);
}

QTensor QTensor::from_diag(double l1, double l2, double l3) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = l1;
  m(1, 1) = l2;
  m(2, 2) = l3;
  return from_matrix(m);
}

const std::array<Eigen::Matrix3d, 5>& traceless_basis() {
  static const std::array<Eigen::Matrix3d, 5> basis = [] {
    std::array<Eigen::Matrix3d, 5> b;
    const double s2 = 1.0 / std::sqrt(2.0), s6 = 1.0 / std::sqrt(6.0);
    b[0] = Eigen::Vector3d(s2, -s2, 0).asDiagonal();
    b[1] = Eigen::Vector3d(s6, s6, -2 * s6).asDiagonal();
    b[2] = Eigen::Matrix3d::Zero();
    b[2](0, 1) = b[2](1, 0) = s2;
    b[3] = Eigen::Matrix3d::Zero();
    b[3](0, 2) = b[3](2, 0) = s2;
    b[4] = Eigen::Matrix3d::Zero();
    b[4](1, 2) = b[4](2, 1) = s2;
    return b;
  }();
  return basis;
}

QTensor QTensor::from_basis_coeffs(const std::array<double, 5>& c) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  const auto& basis = traceless_basis();
  for (int k = 0; k < 5; ++k) m += c[k] * basis[k];
  return QTensor(m);
}

std::array<double, 5> QTensor::basis_coeffs() const {
  std::array<double, 5> c{};
  const auto& basis = traceless_basis();
  for (int k = 0; k < 5; ++k)
    c[k] = (m_.array() * basis[k].array()).sum();
  return c;
}

namespace {

void fix_sign(Eigen::Vector3d& v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

EigenFrame eigendecomp_sym3(const QTensor& q) {
  const Eigen::Matrix3d& m = q.matrix();
  EigenFrame frame;

  const double off = std::max({std::abs(m(0, 1)), std::abs(m(0, 2)), std::abs(m(1, 2))});
  if (off == 0.0) {
    // Diagonal input: decomposition is exact, axes are (sign-fixed, i.e.
    // positive) coordinate directions ordered by descending eigenvalue.
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return m(a, a) > m(b, b); });
    frame.axes = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) {
      frame.spectrum.lambda[k] = m(idx[k],
                                                            idx[k]);
      frame.axes(idx[k], k) = 1.0;
    }
    return frame;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  solver.compute(m);  // ascending eigenvalues
  for (int k = 0; k < 3; ++k) {
    frame.spectrum.lambda[k] = solver.eigenvalues()[2 - k];
    Eigen::Vector3d v = solver.eigenvectors().col(2 - k);
    fix_sign(v);
    frame.axes.col(k) = v;
  }
  // Descending order with a right-handed-independent sign convention can leave
  // an improper frame; that is fine, the frame is only used as an orthonormal
  // basis of eigenvectors.
  return frame;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector4d qv;
  for (int i = 0; i < 4; ++i) qv[i] = rng.normal();
  qv.normalize();
  Eigen::Quaterniond quat(qv[0], qv[1], qv[2], qv[3]);
  return quat.toRotationMatrix();
}

QTensor random_unit_traceless(Rng& rng) {
  std::array<double, 5> c{};
  double n2 = 0.0;
  for (auto& ci : c) {
    ci = rng.normal();
    n2 += ci * ci;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& ci : c) ci *= inv;
  return QTensor::from_basis_coeffs(c);
}

Spectrum sample_physical_spectrum(Rng& rng, double margin) {
  // xi = lambda + 1/3 uniform on the simplex, shrunk by the margin:
  // xi = margin + (1 - 3 margin) * Dirichlet(1,1,1).
  double e[3];
  for (auto& ei : e) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    ei = -std::log(u);
  }
  const double s = e[0] + e[1] + e[2];
  Spectrum out;
  for (int i = 0; i < 3; ++i)
    out.lambda[i] = margin + (1.0 - 3.0 * margin) * e[i] / s - 1.0 / 3.0;
  // remove the numerical mean so the zero-sum constraint is exact
  const double mean = out.trace() / 3.0;
  for (auto& l : out.lambda) l -= mean;
  return out;
}

}  // namespace bmqt
