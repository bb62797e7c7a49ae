#include <doctest.h>

#include <cmath>

#include "bmqt/errors.hpp"
#include "bmqt/potential.hpp"
#include "bmqt/sim.hpp"

using namespace bmqt;

TEST_CASE("equilibrium is a machine-precision fixed point") {
  ModelParams pr;
  Stepper stepper(16, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 1.0);
  stepper.refresh_cache(st);
  for (int i = 0; i < 100; ++i) stepper.step(st, 1e-3);
  double drift = 0.0;
  for (double v : st.theta) drift = std::max(drift, std::abs(v - 1.0));
  for (int c = 0; c < 3; ++c)
    for (double v : st.u[c]) drift = std::max(drift, std::abs(v));
  for (int c = 0; c < 5; ++c)
    for (double v : st.q[c]) drift = std::max(drift, std::abs(v));
  CHECK(drift < 1e-14);
}

TEST_CASE("uniform Q relaxes along the homogeneous reduction") {
  // spatially uniform fields reduce the PDE to a coupled (Q, theta) ODE;
  // classical RK4 at a fine step provides the reference trajectory
  ModelParams pr;
  pr.Gamma0 = 0.1;
  pr.Gamma1 = 0.05;
  pr.lambda_bulk = 0.0;
  Stepper stepper(8, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 0.2);
  const Spectrum lam0(0.05, -0.02, -0.03);
  for (std::size_t i = 0; i < st.nodes(); ++i)
    st.set_q_matrix(i, Eigen::Vector3d(lam0[0], lam0[1], lam0[2]).asDiagonal());
  stepper.prime(st);

  const double t_end = 1.0, dt = 1e-3;
  const int n_steps = static_cast<int>(std::round(t_end / dt));
  for (int i = 0; i < n_steps; ++i) stepper.step(st, dt);

  const SphereQuadrature& quad = default_quadrature();
  struct Y {
    double l1, l2, th;
  };
  auto rhs = [&](const Y& y) -> Y {
    const Spectrum sp(y.l1, y.l2, -y.l1 - y.l2);
    const MuVector mu = solve_mu(sp, 1e-13, quad);
    const double g = pr.gamma(y.th);
    const double h1 = -y.th * mu[0];
    const double h2 = -y.th * mu[1];
    const double h3 = -y.th * mu[2];
    const double hsq = h1 * h1 + h2 * h2 + h3 * h3;
    const double df_dt = g * (mu[0] * h1 + mu[1] * h2 + mu[2] * h3);
    return Y{g * h1, g * h2, (y.th * df_dt + g * hsq) / pr.c_eff(y.th)};
  };
  Y y{lam0[0], lam0[1], 0.2};
  const int n_ref = 2000;
  const double h = t_end / n_ref;
  for (int i = 0; i < n_ref; ++i) {
    const Y k1 = rhs(y);
    const Y y2{y.l1 + 0.5 * h * k1.l1, y.l2 + 0.5 * h * k1.l2, y.th + 0.5 * h * k1.th};
    const Y k2 = rhs(y2);
    const Y y3{y.l1 + 0.5 * h * k2.l1, y.l2 + 0.5 * h * k2.l2, y.th + 0.5 * h * k2.th};
    const Y k3 = rhs(y3);
    const Y y4{y.l1 + h * k3.l1, y.l2 + h * k3.l2, y.th + h * k3.th};
    const Y k4 = rhs(y4);
    y.l1 += h / 6 * (k1.l1 + 2 * k2.l1 + 2 * k3.l1 + k4.l1);
    y.l2 += h / 6 * (k1.l2 + 2 * k2.l2 + 2 * k3.l2 + k4.l2);
    y.th += h / 6 * (k1.th + 2 * k2.th + 2 * k3.th + k4.th);
  }
  CHECK(std::abs(st.q[QXX][0] - y.l1) < 1e-6);
  CHECK(std::abs(st.q[QYY][0] - y.l2) < 1e-6);
  CHECK(std::abs(st.theta[0] - y.th) < 1e-6);
  // the field stays uniform
  double spread = 0.0;
  for (double v : st.q[QXX]) spread = std::max(spread, std::abs(v - st.q[QXX][0]));
  CHECK(spread < 1e-13);
}

TEST_CASE("one-step Richardson consistency: local error is second order") {
  ModelParams pr;
  Stepper stepper(16, pr);
  InitParams init;
  init.u_amplitude = 0.05;
  init.q_max_eigenvalue = 0.08;
  init.theta_amplitude = 0.05;

  auto defect = [&](double dt) {
    FieldState a = make_initial_state(stepper.workspace(), init, 13);
    stepper.prime(a);
    FieldState b = a;
    stepper.step(a, dt);           // one step of dt
    stepper.step(b, dt / 2);       // two steps of dt/2
    stepper.step(b, dt / 2);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.nodes(); ++i) diff = std::max(diff, std::abs(a.theta[i] - b.theta[i]));
    for (int c = 0; c < 5; ++c)
      for (std::size_t i = 0; i < a.nodes(); ++i)
        diff = std::max(diff, std::abs(a.q[c][i] - b.q[c][i]));
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < a.nodes(); ++i)
        diff = std::max(diff, std::abs(a.u[c][i] - b.u[c][i]));
    return diff;
  };
  const double d1 = defect(8e-3);
  const double d2 = defect(4e-3);
  const double order = std::log2(d1 / d2);
  CHECK(order >= 1.8);
}

TEST_CASE("Q = 0 decouples exactly at xi = 0") {
  ModelParams pr;
  pr.xi = 0.0;
  Stepper stepper(16, pr);
  InitParams init;
  init.u_amplitude = 0.1;
  init.q_max_eigenvalue = 0.0;  // identically zero order parameter
  init.theta_amplitude = 0.1;
  FieldState st = make_initial_state(stepper.workspace(), init, 19);
  stepper.prime(st);
  for (int i = 0; i < 100; ++i) stepper.step(st, 1e-3);
  double qmax = 0.0;
  for (int c = 0; c < 5; ++c)
    for (double v : st.q[c]) qmax = std::max(qmax, std::abs(v));
  CHECK(qmax < 1e-13);
  // and the velocity actually moved (temperature-dependent Navier-Stokes)
  double du = 0.0;
  FieldState fresh = make_initial_state(stepper.workspace(), init, 19);
  for (std::size_t i = 0; i < st.nodes(); ++i) du = std::max(du, std::abs(st.u[0][i] - fresh.u[0][i]));
  CHECK(du > 1e-8);
}

TEST_CASE("incompressibility is preserved to near machine precision") {
  ModelParams pr;
  Stepper stepper(16, pr);
  InitParams init;
  FieldState st = make_initial_state(stepper.workspace(), init, 23);
  stepper.prime(st);
  for (int i = 0; i < 20; ++i) {
    stepper.step(st, 1e-3);
    CHECK(stepper.workspace().spectral_divergence_max(st.u_hat[0], st.u_hat[1], st.u_hat[2]) <
          1e-10);
  }
}

TEST_CASE("energy drift is first order in dt with the potential decoupled") {
  // Q identically zero and lambda = 0 remove the singular coupling entirely;
  // constant viscosity makes the momentum diffusion exactly the implicit term
  ModelParams pr;
  pr.lambda_bulk = 0.0;
  pr.mu1 = 0.0;
  Stepper stepper(16, pr);
  InitParams init;
  init.u_amplitude = 0.1;
  init.q_max_eigenvalue = 0.0;
  init.theta_amplitude = 0.1;

  auto drift = [&](double dt) {
    FieldState st = make_initial_state(stepper.workspace(), init, 29);
    stepper.prime(st);
    const DiagnosticsRecord r0 = stepper.diagnostics(st);
    const int n = static_cast<int>(std::round(0.2 / dt));
    for (int i = 0; i < n; ++i) stepper.step(st, dt);
    const DiagnosticsRecord r1 = stepper.diagnostics(st);
    return std::abs(r1.E_total - r0.E_total) / std::abs(r0.E_total);
  };
  const double d1 = drift(2e-3);
  const double d2 = drift(1e-3);
  CHECK(d1 / d2 >= 1.7);
  CHECK(d1 < 1e-4);
}

TEST_CASE("theta positivity loss aborts with diagnostics") {
  ModelParams pr;
  Stepper stepper(16, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 1.0);
  stepper.refresh_cache(st);
  // hand the stepper an unphysical temperature through the nodal view
  for (auto& v : st.theta) v = -0.5;
  stepper.prime(st);
  CHECK_THROWS_AS(stepper.heat_rhs(st), simulation_error);
}

TEST_CASE("local entropy audit vanishes on an equilibrium history") {
  ModelParams pr;
  pr.A_minus2 = 0.05;
  Stepper stepper(16, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 1.0);
  stepper.refresh_cache(st);
  EntropyAudit audit(stepper, 0.02, 3, 2);
  audit.observe(st);
  for (int i = 0; i < 20; ++i) {
    stepper.step(st, 1e-3);
    audit.observe(st);
  }
  for (double v : audit.audit_values()) CHECK(std::abs(v) < 1e-12);
  CHECK(std::abs(audit.constant_phi_value()) < 1e-12);
  // regular-flux mode refuses the local audit
  ModelParams regular;
  Stepper reg_stepper(16, regular);
  CHECK_THROWS_AS(EntropyAudit(reg_stepper, 0.02, 1, 2), domain_error);
}

TEST_CASE("states outside the safety region are rejected, not crashed") {
  ModelParams pr;
  Stepper stepper(16, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 1.0);
  // outside the 1e-3 safety margin: rejected before any solve
  const QTensor qa = QTensor::from_diag(0.666, -0.333, -0.333);
  for (std::size_t i = 0; i < st.nodes(); ++i) st.set_q_matrix(i, qa.matrix());
  CHECK_THROWS_AS(stepper.refresh_cache(st), simulation_error);
  // inside the margin but beyond the nodewise quadrature's reach: the
  // unconverged solve is treated the same way
  const QTensor qb = QTensor::from_diag(0.66, -0.33, -0.33);
  for (std::size_t i = 0; i < st.nodes(); ++i) st.set_q_matrix(i, qb.matrix());
  CHECK_THROWS_AS(stepper.refresh_cache(st), simulation_error);
}
