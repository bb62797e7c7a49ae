// Acceptance suite: runs every contract criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "bmqt/config.hpp"
#include "bmqt/errors.hpp"
#include "bmqt/potential.hpp"
#include "bmqt/sim.hpp"
#include "bmqt/verify.hpp"

using namespace bmqt;

namespace {

int g_failures = 0;
double g_live_mat_residual = -1.0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

QTensor sample_q(Rng& rng, double margin) {
  const Spectrum s = sample_physical_spectrum(rng, margin);
  const Eigen::Matrix3d r = random_rotation(rng);
  return QTensor::deviatoric(r * Eigen::Vector3d(s[0], s[1], s[2]).asDiagonal() * r.transpose());
}

// ----- criteria 1-3: potential oracles ------------------------------------

void criterion_duality() {
  const SphereQuadrature quad = build_quadrature(32, 64);
  const double t0 = wall_seconds();
  double worst = 0.0;
  for (long i = 0; i < 1000; ++i) {
    Rng rng = Rng::stream(20240901, static_cast<std::uint64_t>(i));
    const QTensor q = sample_q(rng, 0.02);
    const double dual = f_of_Q(q, 1e-12, quad);
    const double primal = primal_entropy_oracle(q, quad, 1e-12);
    worst = std::max(worst, std::abs(dual - primal));
  }
  const double elapsed = wall_seconds() - t0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max |dual - primal| = %.3e, %.1f s", worst, elapsed);
  report(1, "duality oracle agrees within 1e-8 on 1000 tensors in < 60 s", worst < 1e-8 && elapsed < 60.0,
         buf);
}

void criterion_gradient() {
  const SphereQuadrature quad = build_quadrature(64, 64);
  const double h = 1e-5;
  double worst = 0.0;
  for (long i = 0; i < 500; ++i) {
    Rng rng = Rng::stream(0x6772ad, static_cast<std::uint64_t>(i));
    const QTensor q = sample_q(rng, 0.02);
    const QTensor v = random_unit_traceless(rng);
    const double fp = f_of_Q(QTensor::deviatoric(q.matrix() + h * v.matrix()), 1e-13, quad);
    const double fm = f_of_Q(QTensor::deviatoric(q.matrix() - h * v.matrix()), 1e-13, quad);
    const double fd = (fp - fm) / (2.0 * h);
    const double an = (df_dQ(q, 1e-13, quad).matrix().array() * v.matrix().array()).sum();
    worst = std::max(worst, std::abs(fd - an) / std::max(1e-10, std::abs(fd)));
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max rel err = %.3e over 500 samples", worst);
  report(2, "gradient identity vs finite differences within 1e-4", worst < 1e-4, buf);
}

void criterion_hessian() {
  const SphereQuadrature quad = build_quadrature(64, 64);
  const auto& f = x_basis();
  double worst_inv = 0.0, worst_fd = 0.0;
  const double h = 1e-4;
  for (long i = 0; i < 200; ++i) {
    Rng rng = Rng::stream(0x686573, static_cast<std::uint64_t>(i));
    const Spectrum s = sample_physical_spectrum(rng, 0.02);
    const PotentialEval ev = fbm_eval(s, 1e-12, quad);
    const Eigen::Matrix2d prod = f.transpose() * ev.hess * logZ_hess(ev.mu, quad) * f;
    worst_inv = std::max(worst_inv, (prod - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());

    const Eigen::Matrix3d rot = random_rotation(rng);
    const QTensor q = QTensor::deviatoric(
        rot * Eigen::Vector3d(s[0], s[1], s[2]).asDiagonal() * rot.transpose());
    const QTensor v = random_unit_traceless(rng);
    const double an = hess_contract(q, v, 1e-13, quad);
    const double fd = (f_of_Q(QTensor::deviatoric(q.matrix() + h * v.matrix()), 1e-13, quad) -
                       2.0 * f_of_Q(q, 1e-13, quad) +
                       f_of_Q(QTensor::deviatoric(q.matrix() - h * v.matrix()), 1e-13, quad)) /
                      (h * h);
    worst_fd = std::max(worst_fd, std::abs(fd - an) / std::max(1e-10, std::abs(fd)));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "|Hess N - Id| = %.3e, FD rel err = %.3e", worst_inv, worst_fd);
  report(3, "Hessian inverse identity (1e-8) and FD check (1e-3)",
         worst_inv < 1e-8 && worst_fd < 1e-3, buf);
}

// ----- criterion 4: Hessian lower bound -----------------------------------

void criterion_ftest1() {
  const SphereQuadrature quad = build_quadrature(96, 64);
  bool ok = true;
  std::string detail;
  for (double margin : {0.05, 0.02, 0.01, 0.005}) {
    const VerificationReport rep = check_ftest1(10000, margin, 42, quad);
    ok = ok && rep.passed && rep.worst_value > 0.0;
    const VerificationReport conc =
        check_h_concavity(rep.worst_value / 2.0, 10000, margin, 42, quad);
    ok = ok && conc.passed;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "m=%.3f: eps=%.4f/conc=%.3f ", margin, rep.worst_value,
                  conc.worst_value);
    detail += buf;
  }
  report(4, "empirical Hessian bound and linked concavity at eps/2", ok, detail);
}

// ----- criterion 5: Case I asymptotics ------------------------------------

void criterion_case1() {
  const SphereQuadrature plateau_quad = build_quadrature(128, 32);
  std::vector<double> rhos;
  for (int i = 0; i <= 10; ++i) rhos.push_back(std::ldexp(1.0, i));

  bool plateau_ok = true;
  double worst_change = 0.0;
  for (int d = 0; d < 10; ++d) {
    Rng rng = Rng::stream(0x636173, static_cast<std::uint64_t>(d));
    Eigen::Vector3d gam;
    for (;;) {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      gam = x_basis() * Eigen::Vector2d(std::cos(ang), std::sin(ang));
      Eigen::Vector3d ss = gam;
      std::sort(ss.data(), ss.data() + 3);
      if (std::min(ss[1] - ss[0], ss[2] - ss[1]) > 0.05) break;
    }
    const IijTable tab = asymptotic_Iij(gam, rhos, plateau_quad);
    for (std::size_t j = rhos.size() - 3; j < rhos.size(); ++j) {
      const double change = std::abs(tab.tables[j].norm() - tab.tables[j - 1].norm()) /
                            tab.tables[j - 1].norm();
      worst_change = std::max(worst_change, change);
      plateau_ok = plateau_ok && change <= 0.05;
    }
    plateau_ok = plateau_ok && tab.plateau_found && tab.bounded;
  }

  const SphereQuadrature slope_quad = build_quadrature(192, 32);
  std::vector<double> rho_fit;
  for (double r = 32.0; r <= 512.0 * 1.0001; r *= std::sqrt(2.0)) rho_fit.push_back(r);
  const double s6 = 1.0 / std::sqrt(6.0);
  bool slopes_ok = true;
  double worst_den = 0.0, worst_num = 0.0;
  for (const Eigen::Vector3d& gam :
       {Eigen::Vector3d(2 * s6, -s6, -s6), Eigen::Vector3d(-s6, 2 * s6, -s6),
        Eigen::Vector3d(-s6, -s6, 2 * s6)}) {
    const LaplaceDecay dec = check_laplace_coefficients(gam, rho_fit, slope_quad);
    worst_den = std::max(worst_den, std::abs(dec.slope_den + 2.0));
    worst_num = std::max(worst_num, std::abs(dec.slope_num + 4.0));
    slopes_ok = slopes_ok && std::abs(dec.slope_den + 2.0) <= 0.1 &&
                std::abs(dec.slope_num + 4.0) <= 0.15;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "worst plateau change %.3f, |den slope + 2| = %.3f, |num slope + 4| = %.3f",
                worst_change, worst_den, worst_num);
  report(5, "Case I: I_ij plateaus and Laplace decay exponents", plateau_ok && slopes_ok, buf);
}

// ----- criterion 6: Case II -----------------------------------------------

void criterion_case2() {
  std::vector<double> alphas;
  for (double a = 1.0; a <= 512.0 * 1.0001; a *= 2.0) alphas.push_back(a);
  bool ok = true;
  double worst_excess = -1e300;
  for (int k : {1, 2}) {
    const auto f = case2_f_alpha(alphas, k, 64);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      worst_excess = std::max(worst_excess, f[i] - case2_majorant(alphas[i], k));
      ok = ok && f[i] <= case2_majorant(alphas[i], k);
    }
  }
  const double small = case2_f_alpha({0.01}, 1, 64)[0];
  ok = ok && small < 1e-3;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max (f - majorant) = %.3e, f(0.01) = %.3e", worst_excess,
                small);
  report(6, "Case II moment ratios bounded by the explicit majorant", ok, buf);
}

// ----- criterion 7: logarithmic blow-up -----------------------------------

void criterion_blowup() {
  const SphereQuadrature big = build_quadrature(1536, 32);
  std::vector<double> x, y;
  for (double d : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const Spectrum s(-1.0 / 3.0 + d, 1.0 / 6.0 - d / 2.0, 1.0 / 6.0 - d / 2.0);
    x.push_back(std::log(d));
    y.push_back(fbm_eval(s, 1e-9, big).value);
  }
  // least-squares line and R^2
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r_num = (n * sxy - sx * sy);
  const double r2 = r_num * r_num / ((n * sxx - sx * sx) * (n * syy - sy * sy));
  char buf[120];
  std::snprintf(buf, sizeof(buf), "slope = %.4f per log(delta), R^2 = %.6f", slope, r2);
  report(7, "logarithmic blow-up of f along a boundary ray (R^2 > 0.999)", r2 > 0.999, buf);
}

// ----- criteria 8-12: simulator -------------------------------------------

void criterion_steady_state() {
  ModelParams pr;
  Stepper stepper(16, pr);
  FieldState st = make_equilibrium_state(stepper.workspace(), 1.0);
  stepper.refresh_cache(st);
  for (int i = 0; i < 1000; ++i) stepper.step(st, 1e-3);
  double drift = 0.0;
  for (double v : st.theta) drift = std::max(drift, std::abs(v - 1.0));
  for (int c = 0; c < 3; ++c)
    for (double v : st.u[c]) drift = std::max(drift, std::abs(v));
  for (int c = 0; c < 5; ++c)
    for (double v : st.q[c]) drift = std::max(drift, std::abs(v));
  char buf[80];
  std::snprintf(buf, sizeof(buf), "per-field drift = %.3e after 1000 steps", drift);
  report(8, "isotropic equilibrium preserved (16^3, drift < 1e-12)", drift < 1e-12, buf);
}

struct SimRunSummary {
  double final_drift = 0.0;
  double worst_drift = 0.0;
  double worst_lhs = -1e300;
  bool dissipations_nonneg = true;
  double worst_mat_residual = 0.0;
};

SimRunSummary generic_run(int grid, double dt, double t_end, int cadence, int mat_checks) {
  ModelParams pr;
  Stepper stepper(grid, pr);
  InitParams init;
  init.u_amplitude = 0.03;
  init.q_max_eigenvalue = 0.05;
  init.theta_amplitude = 0.02;
  FieldState st = make_initial_state(stepper.workspace(), init, 7);
  stepper.prime(st);

  BalanceTracker tracker;
  SimRunSummary out;
  DiagnosticsRecord rec = stepper.diagnostics(st);
  tracker.observe(rec);

  const long n_steps = std::lround(t_end / dt);
  const long mat_every = mat_checks > 0 ? std::max<long>(1, n_steps / mat_checks) : 0;
  for (long i = 1; i <= n_steps; ++i) {
    stepper.step(st, dt);
    if (i % cadence == 0 || i == n_steps) {
      rec = stepper.diagnostics(st);
      tracker.observe(rec);
      out.worst_drift = std::max(out.worst_drift, rec.energy_residual);
      out.worst_lhs = std::max(out.worst_lhs, rec.entropy_balance_lhs);
      out.dissipations_nonneg =
          out.dissipations_nonneg && rec.D_visc >= 0 && rec.D_H >= 0 && rec.D_heat >= 0;
    }
    if (mat_every > 0 && i % mat_every == 0)
      out.worst_mat_residual =
          std::max(out.worst_mat_residual, stepper.transfer_identity_residual(st));
  }
  out.final_drift = rec.energy_residual;
  return out;
}

void criteria_energy_entropy_mat() {
  const SimRunSummary full = generic_run(32, 1e-3, 0.5, 5, 5);
  const SimRunSummary half = generic_run(32, 5e-4, 0.5, 10, 0);

  const double ratio = full.final_drift / std::max(half.final_drift, 1e-300);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "drift %.3e (dt), %.3e (dt/2), ratio %.2f", full.final_drift,
                half.final_drift, ratio);
  report(9, "energy balance: drift < 1e-4 and first-order in dt (32^3, t = 0.5)",
         full.worst_drift < 1e-4 && half.worst_drift < 1e-4 && ratio >= 1.8, buf);

  std::snprintf(buf, sizeof(buf), "max entropy_balance_lhs = %.3e, dissipations nonneg = %s",
                full.worst_lhs, full.dissipations_nonneg ? "yes" : "no");
  report(10, "integrated entropy inequality (lhs <= 5e-4, dissipations >= 0)",
         full.worst_lhs <= 5e-4 && full.dissipations_nonneg, buf);

  g_live_mat_residual = full.worst_mat_residual;
}

void criterion_singular_audit() {
  ModelParams pr;
  pr.A_minus2 = 0.05;
  InitParams init;
  init.u_amplitude = 0.03;
  init.q_max_eigenvalue = 0.05;
  init.theta_amplitude = 0.02;

  auto run_once = [&](double dt, std::vector<double>& values, double& const_phi,
                      double& integrated_final) {
    Stepper stepper(24, pr);
    FieldState st = make_initial_state(stepper.workspace(), init, 11);
    stepper.prime(st);
    EntropyAudit audit(stepper, 0.25, 5, 11);
    BalanceTracker tracker;
    DiagnosticsRecord rec = stepper.diagnostics(st);
    tracker.observe(rec);
    audit.observe(st);
    const long n_steps = std::lround(0.25 / dt);
    for (long i = 1; i <= n_steps; ++i) {
      stepper.step(st, dt);
      audit.observe(st);
      rec = stepper.diagnostics(st);
      tracker.observe(rec);
    }
    values = audit.audit_values();
    const_phi = audit.constant_phi_value();
    integrated_final = rec.entropy_balance_lhs;
  };

  std::vector<double> v_full, v_half;
  double cphi_full = 0, cphi_half = 0, integ_full = 0, integ_half = 0;
  run_once(1e-3, v_full, cphi_full, integ_full);
  run_once(5e-4, v_half, cphi_half, integ_half);

  bool ok = true;
  double worst = -1e300;
  for (std::size_t b = 0; b < v_full.size(); ++b) {
    // tolerance calibrated by the dt-refinement: the audit value at dt/2 may
    // not exceed twice the measured discretization increment
    const double tol = 2.0 * std::abs(v_full[b] - v_half[b]) + 1e-8;
    ok = ok && v_half[b] <= tol;
    worst = std::max(worst, v_half[b] - tol);
  }
  const double const_match =
      std::max(std::abs(cphi_full - integ_full), std::abs(cphi_half - integ_half));
  ok = ok && const_match <= 1e-10;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max (audit - tol) = %.3e, constant-phi vs integrated = %.3e", worst, const_match);
  report(11, "singular-flux local entropy audit (5 bumps + constant phi)", ok, buf);
}

void criterion_mat() {
  ModelParams pr;
  Stepper stepper(16, pr);
  InitParams init;
  init.u_amplitude = 0.4;
  init.q_max_eigenvalue = 0.25;
  init.theta_amplitude = 0.4;
  FieldState st = make_initial_state(stepper.workspace(), init, 31);
  stepper.prime(st);
  const double standalone = stepper.transfer_identity_residual(st);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "standalone = %.3e, live run = %.3e", standalone,
                g_live_mat_residual);
  report(12, "stress transfer identity, standalone and inside a live run (< 1e-12)",
         standalone < 1e-12 && g_live_mat_residual >= 0.0 && g_live_mat_residual < 1e-12, buf);
}

// ----- criterion 13: config validation ------------------------------------

void criterion_config() {
  bool ok = true;
  std::string detail;
  try {
    parse_config("{}");
    detail += "defaults accepted; ";
  } catch (const config_error&) {
    ok = false;
    detail += "defaults REJECTED; ";
  }
  auto expect_reject = [&](const char* doc, const char* needle) {
    try {
      parse_config(doc);
      ok = false;
      detail += std::string("accepted ") + doc + "; ";
    } catch (const config_error& err) {
      if (std::string(err.what()).find(needle) == std::string::npos) {
        ok = false;
        detail += std::string("missing \"") + needle + "\" in message; ";
      }
    }
  };
  expect_reject(R"({"model": {"k": 4, "m": 2}})", "defiA");
  expect_reject(R"({"model": {"m": 1.2}})", "defiA");
  expect_reject(R"({"model": {"k": 8, "m": 10}})", "6k/5");
  if (detail.empty()) detail = "ok";
  report(13, "config validation names the violated hypothesis", ok, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite started\n");
  criterion_duality();
  criterion_gradient();
  criterion_hessian();
  criterion_ftest1();
  criterion_case1();
  criterion_case2();
  criterion_blowup();
  criterion_steady_state();
  criteria_energy_entropy_mat();
  criterion_singular_audit();
  criterion_mat();
  criterion_config();
  std::printf("acceptance suite finished: %d failure(s), %.1f s total\n", g_failures,
              wall_seconds());
  return g_failures;
}
