#include "bmqt/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "bmqt/errors.hpp"

namespace bmqt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void gauss_legendre(int n, double lo, double hi,
                    std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw domain_error("gauss_legendre: order must be positive");
  std::unique_ptr<gsl_integration_glfixed_table, void (*)(gsl_integration_glfixed_table*)> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)),
      gsl_integration_glfixed_table_free);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(lo, hi, static_cast<std::size_t>(i), &nodes[i], &weights[i],
                                  table.get());
  }
}

void gauss_jacobi(int n, double lo, double hi, double alpha, double beta,
                  std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw domain_error("gauss_jacobi: order must be positive");
  std::unique_ptr<gsl_integration_fixed_workspace, void (*)(gsl_integration_fixed_workspace*)> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_jacobi, static_cast<std::size_t>(n), lo,
                                  hi, alpha, beta),
      gsl_integration_fixed_free);
  if (!ws) throw domain_error("gauss_jacobi: rule construction failed");
  const double* x = gsl_integration_fixed_nodes(ws.get());
  const double* w = gsl_integration_fixed_weights(ws.get());
  nodes.assign(x, x + n);
  weights.assign(w, w + n);
}

SphereQuadrature build_quadrature(int polar_order, int azimuthal_order) {
  if (polar_order < 8 || azimuthal_order < 16) {
    throw domain_error("build_quadrature: insufficient resolution, require polar_order >= 8 and "
                       "azimuthal_order >= 16 (got " + std::to_string(polar_order) + ", " +
                       std::to_string(azimuthal_order) + ")");
  }
  std::vector<double> x, wx;
  gauss_legendre(polar_order, -1.0, 1.0, x, wx);
  // GSL computes tables for non-hard-coded orders to ~1e-11 only; rescale the
  // weights so the partition of unity (sum w = 4 pi) holds to roundoff.
  double wsum = 0.0;
  for (int i = 0; i < polar_order / 2; ++i) wsum += wx[i] + wx[polar_order - 1 - i];
  if (polar_order % 2) wsum += wx[polar_order / 2];
  const double rescale = 2.0 / wsum;
  for (double& wi : wx) wi *= rescale;

  SphereQuadrature quad;
  quad.polar_order = polar_order;
  quad.azimuthal_order = azimuthal_order;
  const std::size_t n = static_cast<std::size_t>(polar_order) * azimuthal_order;
  quad.px.reserve(n);
  quad.py.reserve(n);
  quad.pz.reserve(n);
  quad.w.reserve(n);

  const double wphi = kTwoPi / azimuthal_order;
  for (int i = 0; i < polar_order; ++i) {
    const double ct = x[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < azimuthal_order; ++j) {
      const double phi = kTwoPi * j / azimuthal_order;
      quad.px.push_back(st * std::cos(phi));
      quad.py.push_back(st * std::sin(phi));
      quad.pz.push_back(ct);
      quad.w.push_back(wx[i] * wphi);
    }
  }
  return quad;
}

double sphere_moment(int a, int b, int c) {
  // 4*pi (2a-1)!!(2b-1)!!(2c-1)!! / (2a+2b+2c+1)!!
  auto dfact = [](int k) {  // (k)!! for odd k, with (-1)!! = 1
    double r = 1.0;
    for (int i = k; i >= 1; i -= 2) r *= i;
    return r;
  };
  const double num = dfact(2 * a - 1) * dfact(2 * b - 1) * dfact(2 * c - 1);
  return 4.0 * std::numbers::pi * num / dfact(2 * (a + b + c) + 1);
}

}  // namespace bmqt
