#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmqt/quadrature.hpp"

namespace bmqt {

/// Outcome of one numerical certification run. `passed` holds exactly when
/// `worst_value` satisfies the check's inequality within `tolerance`;
/// `witness` serializes the sample achieving the worst value (JSON text).
struct VerificationReport {
  std::string check_name;
  long samples = 0;
  double worst_value = 0.0;
  std::string witness;
  bool passed = false;
  double tolerance = 0.0;

  /// One NDJSON record: {check_name, samples, worst_value, witness, passed, tolerance}.
  std::string to_ndjson() const;
};

/// Empirical Hessian bound: samples (Q, V) pairs with margin-bounded physical
/// spectra and unit-Frobenius traceless V, forms
///   r = D^2 f(Q)[V,V] / (L[df/dQ] : V)^2
/// whenever the denominator exceeds 1e-12, and reports the infimum of r as
/// the empirical constant. Passes iff the infimum is strictly positive.
/// Deterministic given (n_samples, margin, seed); sample loops parallelize
/// with per-sample streams and order-independent min-reduction.
VerificationReport check_ftest1(long n_samples, double margin, std::uint64_t seed,
                                const SphereQuadrature& quad);
VerificationReport check_ftest1(long n_samples, double margin, std::uint64_t seed);

/// Concavity surrogate: over the same sample law, assembles
/// N^{-1} - epsilon mu (x) mu restricted to X and reports the minimum
/// eigenvalue across samples. Passes iff it stays positive.
VerificationReport check_h_concavity(double epsilon, long n_samples, double margin,
                                     std::uint64_t seed, const SphereQuadrature& quad);
VerificationReport check_h_concavity(double epsilon, long n_samples, double margin,
                                     std::uint64_t seed);

/// Double-sphere matrix used by the large-|mu| boundedness study:
/// I_ij(mu) with mu = rho * gamma, evaluated by the tensor product of `quad`
/// with itself, overflow-shifted. Requires a strict maximum component of
/// gamma (isolated maxima); a coincident top pair belongs to the
/// equal-multiplier study and domain_error redirects there.
struct IijTable {
  std::vector<double> rho;
  std::vector<Eigen::Matrix3d> tables;   // I(rho), symmetric
  bool plateau_found = false;            // three consecutive values within 5%
  std::size_t plateau_index = 0;         // largest such rho index
  bool bounded = false;                  // max ||I|| <= 2 ||I(rho_plateau)||
};
IijTable asymptotic_Iij(const Eigen::Vector3d& gamma, const std::vector<double>& rho_values,
                        const SphereQuadrature& quad);

/// Raw shifted numerator/denominator integrals behind I_ij, with the
/// direction-only weight (the rho^2 prefactor divided out of the numerator):
///   den(rho) = e^{-2 rho max(gamma)} Z(rho gamma)^2,
///   num(rho) = corresponding double integral against g_ij(gamma; p, q).
struct LaplaceDecay {
  std::vector<double> rho;
  std::vector<double> num_norm;   // Frobenius norm of the numerator matrix
  std::vector<double> den;
  double slope_num = 0.0;         // fitted d log num / d log rho
  double slope_den = 0.0;
  double slope_ratio = 0.0;       // slope of rho^2 num / den (the I_ij scale)
};

/// Fits the large-rho decay exponents of the numerator and denominator and
/// returns them (expected: den ~ rho^-2, num ~ rho^-4, ratio flat). Requires
/// gamma with a strict maximum component.
LaplaceDecay check_laplace_coefficients(const Eigen::Vector3d& gamma,
                                        const std::vector<double>& rho_values,
                                        const SphereQuadrature& quad);

/// Equal-multiplier boundedness study: the moment ratio
///   f(alpha) = int_0^alpha e^{-3y^2} y^{2k+1} (1-y^2/alpha^2)^{-1/2} dy
///            / int_0^alpha e^{-3y^2} y       (1-y^2/alpha^2)^{-1/2} dy
/// for k in {1,2}, evaluated with the inverse-square-root endpoint weight
/// built into a Gauss-Jacobi rule.
std::vector<double> case2_f_alpha(const std::vector<double>& alpha_values, int k,
                                  int quad_1d_order);

/// Explicit majorant bounding f(alpha) for alpha >= 1:
///   [ (2/sqrt 3)(int_0^inf e^{-3y^2} y^{2k+1} dy) + (2/sqrt 3) e^{-3 alpha^2/4} alpha^{2k+2} ]
///   / int_0^{1/2} e^{-y^2} y dy.
double case2_majorant(double alpha, int k);

}  // namespace bmqt
