#pragma once

#include <Eigen/Dense>

namespace bmqt {

/// Splits a velocity gradient into symmetric and antisymmetric parts;
/// eps + omega reconstructs the input exactly.
inline void strain_and_vorticity(const Eigen::Matrix3d& grad_u, Eigen::Matrix3d& eps,
                                 Eigen::Matrix3d& omega) {
  eps = 0.5 * (grad_u + grad_u.transpose());
  omega = 0.5 * (grad_u - grad_u.transpose());
}

/// Stretching/rotation coupling of the order parameter to the flow:
///   S = (xi eps + omega)(Q + I/3) + (Q + I/3)(xi eps - omega)
///       - 2 xi (Q + I/3)(Q : grad_u).
/// Trace-free whenever div u = 0 and Q is traceless.
inline Eigen::Matrix3d compute_S(const Eigen::Matrix3d& grad_u, const Eigen::Matrix3d& q,
                                 double xi) {
  Eigen::Matrix3d eps, omega;
  strain_and_vorticity(grad_u, eps, omega);
  const Eigen::Matrix3d qt = q + Eigen::Matrix3d::Identity() / 3.0;
  const double q_gu = (q.array() * grad_u.array()).sum();
  return (xi * eps + omega) * qt + qt * (xi * eps - omega) - 2.0 * xi * q_gu * qt;
}

/// Molecular field H = lap_q - theta * sing_grad + lambda * q, where
/// sing_grad is the traceless potential gradient L[df/dQ] at the node.
inline Eigen::Matrix3d compute_H(const Eigen::Matrix3d& lap_q, const Eigen::Matrix3d& sing_grad,
                                 const Eigen::Matrix3d& q, double theta, double lambda_bulk) {
  return lap_q - theta * sing_grad + lambda_bulk * q;
}

/// Stress without the pressure part:
///   sigma~ = mu(theta)(grad_u + grad_u^T)
///            + 2 xi (H:Q)(Q + I/3) - xi [H(Q + I/3) + (Q + I/3)H]
///            + (QH - HQ) - grad_q_outer,
/// with grad_q_outer_ij = sum_kl d_i Q_kl d_j Q_kl supplied by the caller.
inline Eigen::Matrix3d compute_stress_deviatoric(const Eigen::Matrix3d& grad_u,
                                                 const Eigen::Matrix3d& q,
                                                 const Eigen::Matrix3d& h,
                                                 const Eigen::Matrix3d& grad_q_outer,
                                                 double mu_theta, double xi) {
  const Eigen::Matrix3d qt = q + Eigen::Matrix3d::Identity() / 3.0;
  const double hq = (h.array() * q.array()).sum();
  return mu_theta * (grad_u + grad_u.transpose()) + 2.0 * xi * hq * qt -
         xi * (h * qt + qt * h) + (q * h - h * q) - grad_q_outer;
}

/// The transfer identity behind the kinetic/elastic energy exchange, valid
/// for traceless symmetric h:
///   -h : S(grad_u, q) = (qh - hq) : grad_u + 2 xi (h:q)(q:grad_u)
///                       - xi [h(q + I/3) + (q + I/3)h] : grad_u.
/// Returns the residual (lhs - rhs), identically zero up to roundoff.
inline double stress_transfer_residual(const Eigen::Matrix3d& grad_u, const Eigen::Matrix3d& q,
                                       const Eigen::Matrix3d& h, double xi) {
  const Eigen::Matrix3d qt = q + Eigen::Matrix3d::Identity() / 3.0;
  const Eigen::Matrix3d s = compute_S(grad_u, q, xi);
  const double lhs = -(h.array() * s.array()).sum();
  const double rhs = ((q * h - h * q).array() * grad_u.array()).sum() +
                     2.0 * xi * (h.array() * q.array()).sum() *
                         (q.array() * grad_u.array()).sum() -
                     xi * ((h * qt + qt * h).array() * grad_u.array()).sum();
  return lhs - rhs;
}

}  // namespace bmqt
