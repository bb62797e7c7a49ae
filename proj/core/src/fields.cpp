#include "bmqt/fields.hpp"

#include <cmath>

#include "bmqt/errors.hpp"

namespace bmqt {

void FieldState::allocate(int grid_n) {
  n = grid_n;
  const Grid g{grid_n};
  for (auto& f : u) f.assign(g.real_size(), 0.0);
  for (auto& f : q) f.assign(g.real_size(), 0.0);
  theta.assign(g.real_size(), 0.0);
  for (auto& f : u_hat) f.assign(g.spec_size(), cplx(0.0));
  for (auto& f : q_hat) f.assign(g.spec_size(), cplx(0.0));
  theta_hat.assign(g.spec_size(), cplx(0.0));
  cache.resize(g.real_size());
  cache.valid = false;
}

namespace {

// Sum of random cosine modes with 0 < |k|_inf <= k_max, fixed mode order.
void random_band_limited(const Grid& g, Rng& rng, int k_max, std::vector<double>& out) {
  out.assign(g.real_size(), 0.0);
  struct Mode {
    int kx, ky, kz;
    double amp, phase;
  };
  std::vector<Mode> modes;
  for (int kx = -k_max; kx <= k_max; ++kx)
    for (int ky = -k_max; ky <= k_max; ++ky)
      for (int kz = -k_max; kz <= k_max; ++kz) {
        if (kx == 0 && ky == 0 && kz == 0) continue;
        // cos covers k and -k together; keep one representative
        if (kz < 0 || (kz == 0 && (ky < 0 || (ky == 0 && kx < 0)))) continue;
        modes.push_back({kx, ky, kz, rng.normal(), rng.uniform(0.0, 6.283185307179586)});
      }
  for (int ix = 0; ix < g.n; ++ix) {
    const double x = g.node_coord(ix);
    for (int iy = 0; iy < g.n; ++iy) {
      const double y = g.node_coord(iy);
      for (int iz = 0; iz < g.n; ++iz) {
        const double z = g.node_coord(iz);
        double v = 0.0;
        for (const Mode& md : modes)
          v += md.amp * std::cos(md.kx * x + md.ky * y + md.kz * z + md.phase);
        out[g.real_index(ix, iy, iz)] = v;
      }
    }
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

FieldState make_initial_state(SpectralWorkspace& ws, const InitParams& init, std::uint64_t seed) {
  const Grid& g = ws.grid();
  if (init.k_max < 1 || init.k_max > g.dealias_kmax())
    throw domain_error("make_initial_state: k_max outside [1, n/3]");
  if (!(init.theta_mean > 0.0) || !(init.theta_amplitude >= 0.0) || init.theta_amplitude >= 1.0)
    throw domain_error("make_initial_state: need theta_mean > 0 and theta_amplitude in [0, 1)");
  if (!(init.q_max_eigenvalue >= 0.0) || init.q_max_eigenvalue >= 1.0 / 3.0)
    throw domain_error("make_initial_state: q_max_eigenvalue must lie in [0, 1/3)");

  Rng rng(seed);
  FieldState st;
  st.allocate(g.n);

  // velocity: random field, Leray-projected, rescaled to the target peak
  for (int c = 0; c < 3; ++c) random_band_limited(g, rng, init.k_max, st.u[c]);
  for (int c = 0; c < 3; ++c) ws.forward(st.u[c], st.u_hat[c]);
  ws.leray_project(st.u_hat[0], st.u_hat[1], st.u_hat[2]);
  for (int c = 0; c < 3; ++c) ws.inverse(st.u_hat[c], st.u[c]);
  double umax = std::max({max_abs(st.u[0]), max_abs(st.u[1]), max_abs(st.u[2])});
  if (umax > 0.0 && init.u_amplitude > 0.0) {
    const double s = init.u_amplitude / umax;
    for (int c = 0; c < 3; ++c) {
      for (auto& v : st.u[c]) v *= s;
      for (auto& v : st.u_hat[c]) v *= s;
    }
  } else {
    for (int c = 0; c < 3; ++c) {
      st.u[c].assign(g.real_size(), 0.0);
      st.u_hat[c].assign(g.spec_size(), cplx(0.0));
    }
  }

  // Q: random coefficients in the traceless basis, scaled into the safety region
  std::array<std::vector<double>, 5> coeff;
  for (auto& f : coeff) random_band_limited(g, rng, init.k_max, f);
  double eig_extreme = 0.0;
  const auto& basis = traceless_basis();
  for (std::size_t node = 0; node < g.real_size(); ++node) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int c = 0; c < 5; ++c) m += coeff[c][node] * basis[c];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
    eig_extreme = std::max({eig_extreme, std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[2])});
  }
  const double qs = (eig_extreme > 0.0 && init.q_max_eigenvalue > 0.0)
                        ? init.q_max_eigenvalue / eig_extreme
                        : 0.0;
  for (std::size_t node = 0; node < g.real_size(); ++node) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int c = 0; c < 5; ++c)
      m += qs * coeff[c][node] * basis[c];
    st.set_q_matrix(node, m);
  }
  for (int c = 0; c < 5; ++c) ws.forward(st.q[c], st.q_hat[c]);

  // theta: positive by construction
  std::vector<double> pert;
  random_band_limited(g, rng, init.k_max, pert);
  const double pmax = max_abs(pert);
  for (std::size_t node = 0; node < g.real_size(); ++node) {
    const double rel = pmax > 0.0 ? pert[node] / pmax : 0.0;
    st.theta[node] = init.theta_mean * (1.0 + init.theta_amplitude * rel);
  }
  ws.forward(st.theta, st.theta_hat);

  // round-trip through the dealiased spectra so nodal and spectral views agree
  for (int c = 0; c < 3; ++c) ws.inverse(st.u_hat[c], st.u[c]);
  for (int c = 0; c < 5; ++c) ws.inverse(st.q_hat[c], st.q[c]);
  ws.inverse(st.theta_hat, st.theta);

  return st;
}

FieldState make_equilibrium_state(SpectralWorkspace& ws, double theta0) {
  if (!(theta0 > 0.0)) throw domain_error("make_equilibrium_state: theta0 must be positive");
  FieldState st;
  st.allocate(ws.grid().n);
  for (auto& v : st.theta) v = theta0;
  ws.forward(st.theta, st.theta_hat);
  return st;
}

}  // namespace bmqt
