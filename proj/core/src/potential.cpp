#include "bmqt/potential.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "bmqt/errors.hpp"

namespace bmqt {

namespace {

constexpr int kMaxNewtonIters = 200;
constexpr int kMaxLineSearchHalvings = 40;

Eigen::Vector2d to_x_basis(const std::array<double, 3>& v) {
  Eigen::Vector3d e(v[0], v[1], v[2]);
  return x_basis().transpose() * e;
}

MuVector from_x_basis(const Eigen::Vector2d& c) {
  Eigen::Vector3d m = x_basis() * c;
  return MuVector(m[0], m[1], m[2]);
}

double moment_residual(const ZMoments& zm, const Spectrum& s, Eigen::Vector3d* r3 = nullptr) {
  Eigen::Vector3d r;
  for (int i = 0; i < 3; ++i) r[i] = zm.grad[i] - s[i] - 1.0 / 3.0;
  if (r3) *r3 = r;
  return r.cwiseAbs().maxCoeff();
}

struct NewtonResult {
  Eigen::Vector2d c;
  ZMoments zm;
  double residual = 0.0;
  int iters = 0;
  bool converged = false;
};

// Damped Newton on the reduced 2-D system; `budget` bounds the iteration count
// for this attempt. The line search halves the step until the residual norm
// strictly decreases.
NewtonResult newton_attempt(const Spectrum& s, Eigen::Vector2d c0, double tol,
                            const SphereQuadrature& quad, int budget) {
  NewtonResult res;
  res.c = c0;
  res.zm = z_moments(from_x_basis(res.c), quad);
  res.residual = moment_residual(res.zm, s);
  const auto& f = x_basis();
  while (res.iters < budget) {
    if (res.residual <= tol) {
      res.converged = true;
      return res;
    }
    ++res.iters;
    Eigen::Vector3d r3;
    moment_residual(res.zm, s, &r3);
    const Eigen::Vector2d r2 = f.transpose() * r3;
    const Eigen::Matrix2d jac = f.transpose() * res.zm.hess * f;
    const Eigen::Vector2d step = -jac.ldlt().solve(r2);
    if (!step.allFinite()) break;

    double beta = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxLineSearchHalvings; ++h) {
      const Eigen::Vector2d c_try = res.c + beta * step;
      const ZMoments zm_try = z_moments(from_x_basis(c_try), quad);
      const double r_try = moment_residual(zm_try, s);
      if (r_try < res.residual) {
        res.c = c_try;
        res.zm = zm_try;
        res.residual = r_try;
        accepted = true;
        break;
      }
      beta *= 0.5;
    }
    if (!accepted) return res;  // stalled
  }
  res.converged = res.residual <= tol;
  return res;
}

std::string spectrum_str(const Spectrum& s) {
  std::ostringstream os;
  os << "(" << s[0] << ", " << s[1] << ", " << s[2] << ")";
  return os.str();
}

}  // namespace

const SphereQuadrature& default_quadrature() {
  static const SphereQuadrature quad = build_quadrature(64, 64);
  return quad;
}

MuVector solve_mu(const Spectrum& s, double tol, const SphereQuadrature& quad,
                  const MuVector* warm_start, int* iters_out, double* residual_out,
                  ZMoments* moments_out) {
  if (tol <= 0.0) throw domain_error("solve_mu: tol must be positive");
  if (!s.physical())
    throw domain_error("solve_mu: non-physical spectrum " + spectrum_str(s) +
                       ", eigenvalues must lie in (-1/3, 2/3)");

  Eigen::Vector2d c0 = Eigen::Vector2d::Zero();
  if (warm_start) c0 = to_x_basis(warm_start->mu);

  NewtonResult res = newton_attempt(s, c0, tol, quad, kMaxNewtonIters);
  int total_iters = res.iters;

  if (!res.converged) {
    // Continuation fallback: walk lambda up a geometric schedule, warm-starting
    // each stage from the previous one. Intermediate stages are allowed to run
    // out of budget as long as the final stage converges.
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (double t : {0.125, 0.25, 0.5, 1.0}) {
      const Spectrum st(t * s[0], t * s[1], t * s[2]);
      const NewtonResult stage = newton_attempt(st, c, tol, quad, kMaxNewtonIters);
      total_iters += stage.iters;
      c = stage.c;
      if (t == 1.0) res = stage;
    }
    if (!res.converged) {
      if (iters_out) *iters_out = total_iters;
      if (residual_out) *residual_out = res.residual;
      throw convergence_error("solve_mu: no convergence for spectrum " + spectrum_str(s) +
                                  " (last residual " + std::to_string(res.residual) + ")",
                              res.residual);
    }
  }

  if (iters_out) *iters_out = total_iters;
  if (residual_out) *residual_out = res.residual;
  if (moments_out) *moments_out = res.zm;
  return from_x_basis(res.c);
}

MuVector solve_mu(const Spectrum& s, double tol) {
  return solve_mu(s, tol, default_quadrature());
}

PotentialEval fbm_eval(const Spectrum& s, double tol, const SphereQuadrature& quad,
                       const MuVector* warm_start) {
  PotentialEval out;
  ZMoments zm;
  out.mu = solve_mu(s, tol, quad, warm_start, &out.newton_iters, &out.residual, &zm);
  out.log_z = zm.log_z;
  out.value = 0.0;
  for (int i = 0; i < 3; ++i) out.value += out.mu[i] * (s[i] + 1.0 / 3.0);
  out.value -= zm.log_z;

  const auto& f = x_basis();
  const Eigen::Matrix2d jac = f.transpose() * zm.hess * f;
  const Eigen::Matrix2d jinv = jac.inverse();
  out.hess = f * jinv * f.transpose();
  return out;
}

PotentialEval fbm_eval(const Spectrum& s, double tol) {
  return fbm_eval(s, tol, default_quadrature());
}

SpectralHessian spectral_hessian(const QTensor& q, double tol, const SphereQuadrature& quad) {
  SpectralHessian sh;
  sh.frame = eigendecomp_sym3(q);
  // tolerate tiny trace drift from arithmetic upstream
  const double mean = sh.frame.spectrum.trace() / 3.0;
  for (auto& l : sh.frame.spectrum.lambda) l -= mean;
  sh.eval = fbm_eval(sh.frame.spectrum, tol, quad);
  return sh;
}

QTensor SpectralHessian::gradient() const {
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    g += eval.mu[i] * (frame.axes.col(i) * frame.axes.col(i).transpose());
  return QTensor::deviatoric(g);
}

double SpectralHessian::contract(const QTensor& v) const {
  const Eigen::Matrix3d vt = frame.axes.transpose() * v.matrix() * frame.axes;
  const auto& lam = frame.spectrum;
  const auto& h = eval.hess;

  double total = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) total += h(i, j) * vt(i, i) * vt(j, j);

  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double dl = lam[i] - lam[j];
      double dd;
      if (std::abs(dl) < 1e-7) {
        // coincident-eigenvalue limit of the divided difference
        dd = 0.5 * (h(i, i) + h(j, j)) - h(i, j);
      } else {
        dd = (eval.mu[i] - eval.mu[j]) / dl;
      }
      total += 2.0 * dd * vt(i, j) * vt(i, j);
    }
  }
  return total;
}

double f_of_Q(const QTensor& q, double tol, const SphereQuadrature& quad) {
  return spectral_hessian(q, tol, quad).eval.value;
}

double f_of_Q(const QTensor& q, double tol) { return f_of_Q(q, tol, default_quadrature()); }

QTensor df_dQ(const QTensor& q, double tol, const SphereQuadrature& quad) {
  EigenFrame frame = eigendecomp_sym3(q);
  const double mean = frame.spectrum.trace() / 3.0;
  for (auto& l : frame.spectrum.lambda) l -= mean;
  const MuVector mu = solve_mu(frame.spectrum, tol, quad);
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) g += mu[i] * (frame.axes.col(i) * frame.axes.col(i).transpose());
  return QTensor::deviatoric(g);
}

QTensor df_dQ(const QTensor& q, double tol) { return df_dQ(q, tol, default_quadrature()); }

double hess_contract(const QTensor& q, const QTensor& v, double tol,
                     const SphereQuadrature& quad) {
  return spectral_hessian(q, tol, quad).contract(v);
}

double hess_contract(const QTensor& q, const QTensor& v, double tol) {
  return hess_contract(q, v, tol, default_quadrature());
}

double primal_entropy_oracle(const QTensor& q, const SphereQuadrature& quad, double tol) {
  constexpr double kFeasAbort = 1e-6;
  constexpr int kPerturbations = 20;
  constexpr double kEps = 1e-3;

  EigenFrame frame = eigendecomp_sym3(q);
  const double mean = frame.spectrum.trace() / 3.0;
  for (auto& l : frame.spectrum.lambda) l -= mean;
  if (!frame.spectrum.physical())
    throw domain_error("primal_entropy_oracle: non-physical spectrum");

  const MuVector mu = solve_mu(frame.spectrum, tol, quad);
  const ZMoments zm = z_moments(mu, quad);

  // Optimal density at the nodes, in the eigenframe of q.
  const std::size_t n = quad.size();
  std::vector<double> rho(n), logrho(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double m = mu[0] * quad.px[a] * quad.px[a] + mu[1] * quad.py[a] * quad.py[a] +
                     mu[2] * quad.pz[a] * quad.pz[a];
    logrho[a] = m - zm.log_z;
    rho[a] = std::exp(logrho[a]);
  }

  // Feasibility: unit mass and prescribed second moments.
  double mass = 0.0;
  Eigen::Matrix3d sm = Eigen::Matrix3d::Zero();
  for (std::size_t a = 0; a < n; ++a) {
    const double wr = quad.w[a] * rho[a];
    mass += wr;
    const Eigen::Vector3d p(quad.px[a], quad.py[a], quad.pz[a]);
    sm += wr * (p * p.transpose());
  }
  sm.diagonal().array() -= 1.0 / 3.0;
  Eigen::Matrix3d target = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) target(i, i) = frame.spectrum[i];
  const double feas =
      std::max(std::abs(mass - 1.0), (sm - target).cwiseAbs().maxCoeff());
  if (feas > kFeasAbort)
    throw constraint_violation_error(
        "primal_entropy_oracle: feasibility residual " + std::to_string(feas) +
            " exceeds 1e-6 (quadrature too coarse for this tensor)",
        feas);

  // Discrete entropy of the optimal density.
  double entropy = 0.0;
  for (std::size_t a = 0; a < n; ++a) entropy += quad.w[a] * rho[a] * logrho[a];

  // First-order optimality certificate: the entropy must strictly increase
  // along feasibility-preserving perturbations rho -> rho (1 + eps eta).
  // Constraint functions: mass and the five independent second moments.
  std::array<std::vector<double>, 6> phi;
  for (auto& f : phi) f.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double x = quad.px[a], y = quad.py[a], z = quad.pz[a];
    phi[0][a] = 1.0;
    phi[1][a] = x * x - 1.0 / 3.0;
    phi[2][a] = y * y - 1.0 / 3.0;
    phi[3][a] = x * y;
    phi[4][a] = x * z;
    phi[5][a] = y * z;
  }

  // Gram matrix of the constraint functions in L^2(w rho).
  Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
  for (int k = 0; k < 6; ++k)
    for (int l = k; l < 6; ++l) {
      double g = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        g += quad.w[a] * rho[a] * phi[k][a] *
             phi[l][a];
      gram(k, l) = gram(l, k) = g;
    }
  const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> gram_ldlt(gram);

  Rng rng(0x424d5154u);  // fixed stream; the certificate is deterministic
  std::vector<double> eta(n);
  for (int trial = 0; trial < kPerturbations; ++trial) {
    for (std::size_t a = 0; a < n; ++a) eta[a] = rng.uniform(-1.0, 1.0);
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    for (int k = 0; k < 6; ++k) {
      double bk = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        bk += quad.w[a] * rho[a] * phi[k][a] * eta[a];
      b[k] = bk;
    }
    const Eigen::Matrix<double, 6, 1> coef = gram_ldlt.solve(b);
    for (std::size_t a = 0; a < n; ++a) {
      double corr = 0.0;
      for (int k = 0; k < 6; ++k) corr += coef[k] * phi[k][a];
      eta[a] -= corr;
    }
    for (double sign : {+1.0, -1.0}) {
      double s_pert = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const double factor = 1.0 + sign * kEps * eta[a];
        s_pert += quad.w[a] * rho[a] * factor * (logrho[a] + std::log1p(sign * kEps * eta[a]));
      }
      if (!(s_pert > entropy))
        throw constraint_violation_error(
            "primal_entropy_oracle: optimality certificate failed (perturbed entropy did not "
            "increase)",
            s_pert - entropy);
    }
  }

  return entropy;
}

}  // namespace bmqt
