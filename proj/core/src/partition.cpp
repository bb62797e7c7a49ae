#include "bmqt/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

namespace bmqt {

double MuVector::max_abs() const {
  return std::max({std::abs(mu[0]), std::abs(mu[1]), std::abs(mu[2])});
}

namespace {

// The product rule is accurate only when the concentration direction of
// exp(mu.p^2) is aligned with the polar axis. Evaluation therefore runs in a
// canonical frame: components sorted descending, then either the largest
// (pole concentration) or the smallest (equatorial ring) component is mapped
// to the polar slot, whichever leaves the smaller azimuthal burden. Sorting
// by value keeps the whole construction exactly permutation-equivariant.
struct CanonicalMu {
  std::array<int, 3> slot_to_orig;  // canonical slot (x,y,polar) -> original index
  std::array<double, 3> mu;         // canonical values (x, y, polar)
  double shift;                     // max_i mu_i, factored out of the integrand
};

CanonicalMu canonicalize(const std::array<double, 3>& m) {
  std::array<int, 3> idx{0, 1, 2};
  // descending order by value; ties keep index order (tied values are
  // interchangeable, so the result does not depend on the tie-break)
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return m[a] > m[b]; });
  const double top = m[idx[0]], mid = m[idx[1]], bot = m[idx[2]];
  const double d_top = top - mid;
  const double d_bot = mid - bot;
  // pole: transverse anisotropy d_bot suppressed by the 1/d_top peak width;
  // ring: the two remaining components differ by d_top directly.
  const double burden_pole = d_bot / std::max(4.0 * d_top, 2.0);
  const double burden_ring = 0.5 * d_top;
  CanonicalMu c;
  if (burden_pole <= burden_ring) {
    c.slot_to_orig = {idx[1], idx[2], idx[0]};
    c.mu = {mid, bot, top};
  } else {
    c.slot_to_orig = {idx[0], idx[1], idx[2]};
    c.mu = {top, mid, bot};
  }
  c.shift = top;
  return c;
}

std::atomic<bool> warned_large_mu{false};

void warn_if_outside_reliable_domain(const std::array<double, 3>& mu,
                                     const SphereQuadrature& quad) {
  // Reliable up to |mu_i| <= 200 with the default orders; beyond that the
  // integrand concentrates on a scale the rule cannot resolve and the caller
  // should raise the orders. Soft warning, once per process.
  const double max_abs = std::max({std::abs(mu[0]), std::abs(mu[1]), std::abs(mu[2])});
  if (max_abs > 200.0 && quad.polar_order < 128 &&
      !warned_large_mu.exchange(true, std::memory_order_relaxed)) {
    std::cerr << "bmqt: warning: |mu| = " << max_abs
              << " exceeds the reliable domain (|mu_i| <= 200) of the current quadrature ("
              << quad.polar_order << ", " << quad.azimuthal_order
              << "); raise the orders for trustworthy values\n";
  }
}

}  // namespace

ZMoments z_moments(const MuVector& mu, const SphereQuadrature& quad) {
  warn_if_outside_reliable_domain(mu.mu, quad);
  const CanonicalMu c = canonicalize(mu.mu);
  const double ax = c.mu[0] - c.shift;
  const double ay = c.mu[1] - c.shift;
  const double az = c.mu[2] - c.shift;

  // Accumulate S0 = sum w e, S1_i = sum w e p_i^2, S2_ij = sum w e p_i^2 p_j^2
  // in the canonical frame. Fixed summation order keeps results deterministic.
  double s0 = 0.0;
  double s1[3] = {0, 0, 0};
  double s2[6] = {0, 0, 0, 0, 0, 0};  // xx, yy, zz, xy, xz, yz
  const std::size_t n = quad.size();
  const double* __restrict px = quad.px.data();
  const double* __restrict py = quad.py.data();
  const double* __restrict pz = quad.pz.data();
  const double* __restrict w = quad.w.data();
  for (std::size_t a = 0; a < n; ++a) {
    const double x2 = px[a] * px[a];
    const double y2 = py[a] * py[a];
    const double z2 = pz[a] * pz[a];
    const double e = w[a] * std::exp(ax * x2 + ay * y2 + az * z2);
    s0 += e;
    s1[0] += e * x2;
    s1[1] += e * y2;
    s1[2] += e * z2;
    s2[0] += e * x2 * x2;
    s2[1] += e * y2 * y2;
    s2[2] += e * z2 * z2;
    s2[3] += e * x2 * y2;
    s2[4] += e * x2 * z2;
    s2[5] += e * y2 * z2;
  }

  ZMoments out;
  out.log_z = std::log(s0) + c.shift;
  double g[3];
  for (int i = 0; i < 3; ++i) g[i] = s1[i] / s0;
  Eigen::Matrix3d nc;
  nc(0, 0) = s2[0] / s0 - g[0] * g[0];
  nc(1, 1) = s2[1] / s0 - g[1] * g[1];
  nc(2, 2) = s2[2] / s0 - g[2] * g[2];
  nc(0, 1) = nc(1, 0) = s2[3] / s0 - g[0] * g[1];
  nc(0, 2) = nc(2, 0) = s2[4] / s0 - g[0] * g[2];
  nc(1, 2) = nc(2, 1) = s2[5] / s0 - g[1] * g[2];

  // Map canonical slots back to the caller's component order.
  for (int i = 0; i < 3; ++i) out.grad[c.slot_to_orig[i]] = g[i];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.hess(c.slot_to_orig[i], c.slot_to_orig[j]) = nc(i, j);
  return out;
}

double partition_Z(const std::array<double, 3>& nu, const SphereQuadrature& quad) {
  warn_if_outside_reliable_domain(nu, quad);
  const CanonicalMu c = canonicalize(nu);
  const double ax = c.mu[0] - c.shift;
  const double ay = c.mu[1] - c.shift;
  const double az = c.mu[2] - c.shift;
  double s0 = 0.0;
  const std::size_t n = quad.size();
  for (std::size_t a = 0; a < n; ++a) {
    const double x2 = quad.px[a] * quad.px[a];
    const double y2 = quad.py[a] * quad.py[a];
    const double z2 = quad.pz[a] * quad.pz[a];
    s0 += quad.w[a] * std::exp(ax * x2 + ay * y2 + az * z2);
  }
  return std::exp(c.shift) * s0;
}

double partition_Z(const MuVector& mu, const SphereQuadrature& quad) {
  return partition_Z(mu.mu, quad);
}

std::array<double, 3> logZ_grad(const MuVector& mu, const SphereQuadrature& quad) {
  return z_moments(mu, quad).grad;
}

Eigen::Matrix3d logZ_hess(const MuVector& mu, const SphereQuadrature& quad) {
  return z_moments(mu, quad).hess;
}

}  // namespace bmqt
