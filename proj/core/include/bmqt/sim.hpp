#pragma once

#include <memory>
#include <string>

#include "bmqt/fields.hpp"
#include "bmqt/params.hpp"
#include "bmqt/partition.hpp"
#include "bmqt/potential.hpp"
#include "bmqt/sim_ops.hpp"
#include "bmqt/transform.hpp"

namespace bmqt {

/// One diagnostics sample. The balance fields (energy_residual,
/// entropy_balance_lhs) require run history and are filled by
/// BalanceTracker; Stepper::diagnostics leaves them at zero.
struct DiagnosticsRecord {
  double time = 0.0;
  double E_total = 0.0;  // integral of 1/2|u|^2 + 1/2|grad Q|^2 - lambda/2 |Q|^2 + caloric
  double E_kin = 0.0;
  double S_total = 0.0;  // integral of 1 + log theta - f(Q) + m a theta^{m-1}
  double D_visc = 0.0;   // integral of mu(theta)/(2 theta) |grad u + grad u^T|^2
  double D_H = 0.0;      // integral of Gamma(theta)/theta |H|^2
  double D_heat = 0.0;   // integral of kappa(theta)/theta^2 |grad theta|^2
  double theta_min = 0.0;
  double theta_max = 0.0;
  double q_eig_min = 0.0;
  double q_eig_max = 0.0;
  double energy_residual = 0.0;      // |E(t) - E(0)| / |E(0)|
  double entropy_balance_lhs = 0.0;  // time-integrated dissipation - (S(t) - S(0))

  std::string to_ndjson() const;
};

/// Result of one accepted step.
struct StepResult {
  double dt_used = 0.0;
  int halvings = 0;  // 0 = accepted at the requested dt
};

/// Pseudo-spectral IMEX (first-order) time stepper for the coupled system on
/// the periodic box. Stiff diffusion is damped implicitly at frozen
/// coefficients (mu_lower for momentum, Gamma0 for Q, max kappa/c_eff for
/// conduction); advection, coupling and the singular term are explicit; the
/// velocity update is Leray-projected; every nonlinear product passes through
/// the 2/3-rule dealiasing of the transforms.
class Stepper {
 public:
  Stepper(int grid_n, const ModelParams& params, int quad_polar = 8, int quad_azimuthal = 16);
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  const Grid& grid() const { return ws_.grid(); }
  const ModelParams& params() const { return params_; }
  SpectralWorkspace& workspace() { return ws_; }
  const SphereQuadrature& quadrature() const { return quad_; }

  /// Margin from the physical-domain boundary below which a step is rejected.
  static constexpr double kSafetyMargin = 1e-3;

  /// Fills the per-node eigen/dual cache for the current Q field (throws
  /// simulation_error if a node is outside the safety region and
  /// allow_reject is false).
  void refresh_cache(FieldState& st) const;

  /// Recomputes spectral mirrors from nodal values (dealiased) and the cache.
  void prime(FieldState& st);

  /// Advances the state by dt, halving on safety-region violations (up to 10
  /// times). Throws simulation_error on theta positivity loss, NaN, or
  /// exhausted retries.
  StepResult step(FieldState& st, double dt);

  /// Pointwise-integral diagnostics of the current state.
  DiagnosticsRecord diagnostics(const FieldState& st);

  /// Pressure recovered from the divergence of the momentum equation
  /// (spectral inversion of -lap p = div div(u (x) u - sigma~)); mean zero.
  std::vector<double> recover_pressure(const FieldState& st);

  /// Molecular field as six nodal component fields (xx, yy, zz, xy, xz, yz).
  std::array<std::vector<double>, 6> compute_H_field(const FieldState& st);

  /// Full stress tensor sigma (nine nodal fields, row-major), including the
  /// -p I part when `pressure` is given.
  std::array<std::vector<double>, 9> compute_stress_field(const FieldState& st,
                                                          const std::vector<double>* pressure);

  /// d theta / dt of the strong-form heat equation at the current state.
  std::vector<double> heat_rhs(const FieldState& st);

  /// CFL suggestion: min(0.5 h / |u|_inf, 0.2 / (Gamma(theta_max) * Hscale))
  /// with Hscale the worst node's Hessian contraction along its own gradient.
  double cfl_dt(const FieldState& st) const;

  /// Max nodal residual of the stress transfer identity on the current state.
  double transfer_identity_residual(const FieldState& st);

 private:
  struct Scratch;
  void compute_terms(const FieldState& st, bool need_stress);
  bool try_step(const FieldState& st, double dt, FieldState& out);

  ModelParams params_;
  SphereQuadrature quad_;
  SpectralWorkspace ws_;
  std::unique_ptr<Scratch> scratch_;
};

/// Accumulates the history-dependent balance quantities across diagnostic
/// samples: relative energy drift and the integrated entropy inequality
/// (trapezoidal time quadrature of the dissipation integrals).
class BalanceTracker {
 public:
  /// Feeds a base record (from Stepper::diagnostics) in time order; fills
  /// energy_residual and entropy_balance_lhs.
  void observe(DiagnosticsRecord& rec);

  double initial_energy() const { return e0_; }

 private:
  bool have_first_ = false;
  double e0_ = 0.0, s0_ = 0.0;
  double last_time_ = 0.0, last_diss_ = 0.0;
  double diss_integral_ = 0.0;
};

/// Space-time test functions for the local (distributional) entropy audit:
/// phi(t, x) = g(t) psi(x) with g a Gaussian bump supported inside (0, T)
/// and psi a squared band-limited trigonometric polynomial (nonnegative).
/// Observing every accepted step builds the four time series whose
/// quadrature gives lhs - rhs of the audit inequality per test function.
class EntropyAudit {
 public:
  EntropyAudit(Stepper& stepper, double t_end, int n_bumps, std::uint64_t seed);

  /// Records the current state's contribution; call after each accepted step
  /// (including the initial state at t = 0).
  void observe(const FieldState& st);

  /// lhs - rhs per bump test function (composite Simpson in time).
  std::vector<double> audit_values() const;

  /// Constant-in-time, constant-in-space phi = 1: reduces to the integrated
  /// entropy inequality, i.e. trapezoidal dissipation integral minus the
  /// entropy increment (trapezoid matches BalanceTracker exactly).
  double constant_phi_value() const;

  int n_bumps() const { return static_cast<int>(psi_.size()); }

 private:
  Stepper& stepper_;
  double t_end_;
  std::vector<std::vector<double>> psi_, grad_psi_x_, grad_psi_y_, grad_psi_z_, lap_psi_;
  double g_center_, g_width_;
  // per observation: time, then per bump (a, b+c, d) integrals
  std::vector<double> times_;
  std::vector<std::vector<double>> a_, bc_, d_;
  std::vector<double> s_total_, diss_total_;
};

}  // namespace bmqt
