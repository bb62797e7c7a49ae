#pragma once

#include <complex>
#include <vector>

#include "bmqt/grid.hpp"

namespace bmqt {

using cplx = std::complex<double>;

/// FFTW-backed transforms between nodal values and Fourier coefficients on a
/// cubic grid. Forward transforms normalize by 1/n^3 and apply the 2/3-rule
/// mask, so every spectral array in circulation is dealiased; coefficients
/// are the true Fourier coefficients (the k = 0 mode is the field mean).
/// Plans use FFTW_ESTIMATE (deterministic planning). One workspace per
/// owner; calls are not reentrant.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int n);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const Grid& grid() const { return grid_; }

  /// Nodal -> spectral (normalized, dealiased).
  void forward(const std::vector<double>& real, std::vector<cplx>& spec);
  /// Spectral -> nodal. The input is copied; it is not modified.
  void inverse(const std::vector<cplx>& spec, std::vector<double>& real);

  /// d/dx_axis in spectral space (multiply by i k_axis).
  void derivative(const std::vector<cplx>& spec, int axis, std::vector<cplx>& out) const;
  /// Laplacian in spectral space (multiply by -|k|^2).
  void laplacian(const std::vector<cplx>& spec, std::vector<cplx>& out) const;

  /// Convenience: nodal derivative of a spectral field.
  void derivative_to_real(const std::vector<cplx>& spec, int axis, std::vector<double>& out);
  void laplacian_to_real(const std::vector<cplx>& spec, std::vector<double>& out);

  /// Projects a spectral vector field onto its divergence-free part
  /// (u_k -= k (k . u_k)/|k|^2; the k = 0 mode is untouched). Idempotent.
  void leray_project(std::vector<cplx>& ux, std::vector<cplx>& uy, std::vector<cplx>& uz) const;

  /// Max |divergence| of a spectral vector field (diagnostic).
  double spectral_divergence_max(const std::vector<cplx>& ux, const std::vector<cplx>& uy,
                                 const std::vector<cplx>& uz) const;

 private:
  void apply_mask(std::vector<cplx>& spec) const;

  Grid grid_;
  std::vector<double> rbuf_;
  std::vector<cplx> cbuf_;
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;
  std::vector<unsigned char> mask_;  // 1 = keep
};

}  // namespace bmqt
