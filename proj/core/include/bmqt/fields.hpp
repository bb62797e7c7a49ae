#pragma once

#include <array>
#include <vector>

#include "bmqt/grid.hpp"
#include "bmqt/qtensor.hpp"
#include "bmqt/rng.hpp"
#include "bmqt/transform.hpp"

namespace bmqt {

/// Stored Q-tensor components, in field order: xx, yy, xy, xz, yz
/// (zz = -xx - yy implicitly). This is also the checkpoint array order.
enum QComp { QXX = 0, QYY = 1, QXY = 2, QXZ = 3, QYZ = 4 };

/// Per-node spectral decomposition and dual solve of the current Q field,
/// refreshed whenever Q changes. Mu values double as warm starts for the
/// next step's solves.
struct NodeCache {
  std::vector<double> lambda;  // 3 per node, descending
  std::vector<double> axes;    // 9 per node, column-major eigenvectors
  std::vector<double> mu;      // 3 per node
  std::vector<double> fval;    // potential value per node
  double eig_min = 0.0;        // over all nodes
  double eig_max = 0.0;
  bool valid = false;

  void resize(std::size_t nodes) {
    lambda.resize(3 * nodes);
    axes.resize(9 * nodes);
    mu.resize(3 * nodes);
    fval.resize(nodes);
  }
};

/// Collocation state of the coupled system: velocity u, order parameter Q
/// (5 components), temperature theta, with spectral mirrors. Pressure is
/// recovered on demand, not stored. Transferable between threads, never
/// shared mutably.
struct FieldState {
  int n = 0;
  double time = 0.0;

  std::array<std::vector<double>, 3> u;
  std::array<std::vector<double>, 5> q;
  std::vector<double> theta;

  std::array<std::vector<cplx>, 3> u_hat;
  std::array<std::vector<cplx>, 5> q_hat;
  std::vector<cplx> theta_hat;

  NodeCache cache;

  void allocate(int grid_n);
  std::size_t nodes() const { return static_cast<std::size_t>(n) * n * n; }

  /// Assemble the full Q matrix at a node.
  Eigen::Matrix3d q_matrix(std::size_t node) const {
    Eigen::Matrix3d m;
    const double xx = q[QXX][node], yy = q[QYY][node];
    m << xx, q[QXY][node], q[QXZ][node], q[QXY][node], yy, q[QYZ][node], q[QXZ][node],
        q[QYZ][node], -xx - yy;
    return m;
  }

  void set_q_matrix(std::size_t node, const Eigen::Matrix3d& m) {
    q[QXX][node] = m(0, 0);
    q[QYY][node] = m(1, 1);
    q[QXY][node] = m(0, 1);
    q[QXZ][node] = m(0, 2);
    q[QYZ][node] = m(1, 2);
  }
};

/// Band-limited random initial data: u solenoidal with peak amplitude
/// `u_amplitude`, Q scaled so the largest nodal eigenvalue magnitude equals
/// `q_max_eigenvalue` (safely physical), theta positive with relative
/// perturbation `theta_amplitude` around `theta_mean`. All draws come from
/// `seed` in a fixed order.
struct InitParams {
  double u_amplitude = 0.05;
  double q_max_eigenvalue = 0.15;
  double theta_mean = 1.0;
  double theta_amplitude = 0.05;
  int k_max = 2;
};

FieldState make_initial_state(SpectralWorkspace& ws, const InitParams& init, std::uint64_t seed);

/// The uniform resting state (u = 0, Q = 0, theta = theta0).
FieldState make_equilibrium_state(SpectralWorkspace& ws, double theta0);

}  // namespace bmqt
