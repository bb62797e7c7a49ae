#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace bmqt {

/// Material laws and coupling constants of the coupled model. The exponent
/// pair (k, m) must satisfy the admissibility condition
/// A = (3k + 2m)/3 > 9 with 3/2 < m <= 6k/5; the viscosity is the bounded
/// family mu(theta) = mu0 + mu1 theta^2/(1+theta^2) with bounds
/// [mu0, mu0 + mu1]; conductivity kappa(theta) = A0 + Ak theta^k, plus an
/// optional singular A_minus2 / theta^2 term (A_minus2 = 0 selects the
/// regular law); rotational diffusion Gamma(theta) = Gamma0 + Gamma1 theta.
struct ModelParams {
  double xi = 0.5;           // flow-alignment (stretching) parameter
  double lambda_bulk = 1.0;  // bulk coupling, >= 0
  double a = 1.0;            // specific-heat coefficient, > 0
  double m = 2.0;            // specific-heat exponent
  double k = 8.0;            // conductivity exponent
  double A0 = 1.0;
  double Ak = 1.0;
  double A_minus2 = 0.0;     // singular-flux coefficient, >= 0
  double Gamma0 = 1.0;
  double Gamma1 = 1.0;
  double mu0 = 1.0;          // viscosity lower bound
  double mu1 = 0.5;          // viscosity range (upper bound mu0 + mu1)

  double mu(double theta) const {
    const double t2 = theta * theta;
    return mu0 + mu1 * t2 / (1.0 + t2);
  }
  double mu_lower() const { return mu0; }
  double mu_upper() const { return mu0 + mu1; }

  double kappa(double theta) const {
    double v = A0 + Ak * std::pow(theta, k);
    if (A_minus2 > 0.0) v += A_minus2 / (theta * theta);
    return v;
  }

  double gamma(double theta) const { return Gamma0 + Gamma1 * theta; }

  /// Effective heat capacity: d(theta + a(m-1) theta^m)/dtheta.
  double c_eff(double theta) const { return 1.0 + a * m * (m - 1.0) * std::pow(theta, m - 1.0); }

  /// Internal energy density contribution of theta alone.
  double caloric_energy(double theta) const { return theta + a * (m - 1.0) * std::pow(theta, m); }

  /// Entropy density contribution of theta alone (the -f(Q) part is added by
  /// the caller): 1 + log theta + m a theta^{m-1}.
  double caloric_entropy(double theta) const {
    return 1.0 + std::log(theta) + m * a * std::pow(theta, m - 1.0);
  }

  /// Primitive of kappa(theta)/theta, used by the local entropy audit:
  /// A0 log theta + (Ak/k) theta^k - (A_minus2/2) theta^{-2}.
  double flux_potential(double theta) const {
    double v = A0 * std::log(theta) + (Ak / k) * std::pow(theta, k);
    if (A_minus2 > 0.0) v -= 0.5 * A_minus2 / (theta * theta);
    return v;
  }

  bool singular_flux() const { return A_minus2 > 0.0; }

  /// Every violated admissibility condition, each naming the inequality.
  /// Empty means valid.
  std::vector<std::string> violations() const;
};

}  // namespace bmqt
