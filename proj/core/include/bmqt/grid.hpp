#pragma once

#include <cstddef>
#include <numbers>

namespace bmqt {

/// Cubic collocation grid on the periodic box [-pi, pi)^3, z-fastest storage.
/// Spectral arrays use the half-complex (r2c) layout (n, n, n/2+1).
struct Grid {
  int n = 0;

  std::size_t real_size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t spec_size() const { return static_cast<std::size_t>(n) * n * (n / 2 + 1); }
  int spec_nz() const { return n / 2 + 1; }

  /// Integer wavenumber of FFT index i (full dimensions).
  int kfreq(int i) const { return i <= n / 2 ? i : i - n; }

  /// 2/3-rule cutoff: modes with any |k_i| > kmax are zeroed after forward
  /// transforms, so quadratic products are alias-free.
  int dealias_kmax() const { return n / 3; }

  double node_coord(int i) const { return -std::numbers::pi + 2.0 * std::numbers::pi * i / n; }

  std::size_t real_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * n + iy) * n + iz;
  }
  std::size_t spec_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * n + iy) * (n / 2 + 1) + iz;
  }

  /// Volume of the box, (2 pi)^3.
  double volume() const {
    return 8.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi;
  }

  /// Integral of a nodal field = volume * mean.
  double cell_measure() const { return volume() / static_cast<double>(real_size()); }
};

}  // namespace bmqt
