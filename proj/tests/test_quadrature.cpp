#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bmqt/errors.hpp"
#include "bmqt/parallel.hpp"
#include "bmqt/quadrature.hpp"

using namespace bmqt;

namespace {

double integrate_monomial(const SphereQuadrature& quad, int a, int b, int c) {
  std::vector<double> terms(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i)
    terms[i] = quad.w[i] * std::pow(quad.px[i], a) * std::pow(quad.py[i], b) *
               std::pow(quad.pz[i], c);
  return pairwise_sum(terms);
}

}  // namespace

TEST_CASE("minimum orders are enforced") {
  CHECK_THROWS_AS(build_quadrature(7, 16), domain_error);
  CHECK_THROWS_AS(build_quadrature(8, 15), domain_error);
  CHECK_NOTHROW(build_quadrature(8, 16));
}

TEST_CASE("node count, unit nodes, weight sum") {
  for (auto [np, na] : {std::pair{8, 16}, std::pair{32, 64}, std::pair{48, 20}}) {
    const SphereQuadrature quad = build_quadrature(np, na);
    CHECK(quad.size() == static_cast<std::size_t>(np) * na);
    double worst_norm = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const double r =
          std::sqrt(quad.px[i] * quad.px[i] + quad.py[i] * quad.py[i] + quad.pz[i] * quad.pz[i]);
      worst_norm = std::max(worst_norm, std::abs(r - 1.0));
      CHECK(quad.w[i] > 0.0);
    }
    CHECK(worst_norm < 1e-14);
    CHECK(std::abs(pairwise_sum(quad.w) - 4.0 * std::numbers::pi) < 1e-12);
  }
}

TEST_CASE("closed-form sphere moments at (8,16)") {
  const SphereQuadrature quad = build_quadrature(8, 16);
  CHECK(std::abs(integrate_monomial(quad, 2, 0, 0) - 4.0 * std::numbers::pi / 3.0) < 1e-12);
  CHECK(std::abs(integrate_monomial(quad, 4, 0, 0) - 4.0 * std::numbers::pi / 5.0) < 1e-12);
}

TEST_CASE("even-monomial exactness up to the configured degree") {
  const SphereQuadrature quad = build_quadrature(8, 16);
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 6; ++b)
      for (int c = 0; a + b + c <= 7; ++c) {
        const int degree = 2 * (a + b + c);
        if (degree > quad.exact_degree()) continue;
        const double exact = sphere_moment(a, b, c);
        const double got = integrate_monomial(quad, 2 * a, 2 * b, 2 * c);
        CHECK(std::abs(got - exact) < 1e-12 * std::max(1.0, std::abs(exact)));
      }
}

TEST_CASE("odd monomials vanish by symmetry") {
  const SphereQuadrature quad = build_quadrature(8, 16);
  CHECK(std::abs(integrate_monomial(quad, 1, 2, 0)) < 1e-13);
  CHECK(std::abs(integrate_monomial(quad, 0, 1, 1)) < 1e-13);
  CHECK(std::abs(integrate_monomial(quad, 3, 0, 2)) < 1e-13);
}

TEST_CASE("gauss-jacobi handles the inverse-square-root endpoint weight") {
  // int_0^1 (1-x)^{-1/2} dx = 2, with weight built into the rule
  std::vector<double> x, w;
  gauss_jacobi(16, 0.0, 1.0, -0.5, 0.0, x, w);
  double total = 0.0;
  for (double wi : w) total += wi;
  CHECK(std::abs(total - 2.0) < 1e-12);
  // int_0^1 x (1-x)^{-1/2} dx = 4/3
  double first = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) first += w[i] * x[i];
  CHECK(std::abs(first - 4.0 / 3.0) < 1e-12);
}
