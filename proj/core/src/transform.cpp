#include "bmqt/transform.hpp"

#include <fftw3.h>

#include <cstring>

#include "bmqt/errors.hpp"

namespace bmqt {

SpectralWorkspace::SpectralWorkspace(int n) {
  if (n < 8 || n % 2 != 0)
    throw domain_error("SpectralWorkspace: grid size must be even and >= 8");
  grid_.n = n;
  rbuf_.resize(grid_.real_size());
  cbuf_.resize(grid_.spec_size());
  plan_r2c_ = fftw_plan_dft_r2c_3d(n, n, n, rbuf_.data(),
                                   reinterpret_cast<fftw_complex*>(cbuf_.data()), FFTW_ESTIMATE);
  plan_c2r_ = fftw_plan_dft_c2r_3d(n, n, n, reinterpret_cast<fftw_complex*>(cbuf_.data()),
                                   rbuf_.data(), FFTW_ESTIMATE);
  if (!plan_r2c_ || !plan_c2r_) throw domain_error("SpectralWorkspace: FFTW planning failed");

  mask_.assign(grid_.spec_size(), 0);
  const int kmax = grid_.dealias_kmax();
  for (int ix = 0; ix < n; ++ix) {
    const int kx = grid_.kfreq(ix);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = grid_.kfreq(iy);
      for (int iz = 0; iz < grid_.spec_nz(); ++iz) {
        const int kz = iz;
        if (std::abs(kx) <= kmax && std::abs(ky) <= kmax && kz <= kmax)
          mask_[grid_.spec_index(ix, iy, iz)] = 1;
      }
    }
  }
}

SpectralWorkspace::~SpectralWorkspace() {
  if (plan_r2c_) fftw_destroy_plan(static_cast<fftw_plan>(plan_r2c_));
  if (plan_c2r_) fftw_destroy_plan(static_cast<fftw_plan>(plan_c2r_));
}

void SpectralWorkspace::apply_mask(std::vector<cplx>& spec) const {
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (!mask_[i]) spec[i] = cplx(0.0, 0.0);
}

void SpectralWorkspace::forward(const std::vector<double>& real, std::vector<cplx>& spec) {
  std::memcpy(rbuf_.data(), real.data(), sizeof(double) * rbuf_.size());
  fftw_execute(static_cast<fftw_plan>(plan_r2c_));
  spec.resize(grid_.spec_size());
  const double scale = 1.0 / static_cast<double>(grid_.real_size());
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = mask_[i] ? cbuf_[i] * scale : cplx(0.0);
}

void SpectralWorkspace::inverse(const std::vector<cplx>& spec, std::vector<double>& real) {
  std::memcpy(cbuf_.data(), spec.data(), sizeof(cplx) * cbuf_.size());
  fftw_execute(static_cast<fftw_plan>(plan_c2r_));
  real.resize(grid_.real_size());
  std::memcpy(real.data(), rbuf_.data(), sizeof(double) * real.size());
}

void SpectralWorkspace::derivative(const std::vector<cplx>& spec, int axis,
                                   std::vector<cplx>& out) const {
  const int n = grid_.n;
  out.resize(grid_.spec_size());
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      for (int iz = 0; iz < grid_.spec_nz(); ++iz) {
        const std::size_t s = grid_.spec_index(ix, iy, iz);
        const double k =
            axis == 0 ? grid_.kfreq(ix) : (axis == 1 ? grid_.kfreq(iy) : static_cast<double>(iz));
        out[s] = cplx(0.0, k) * spec[s];
      }
    }
  }
}

void SpectralWorkspace::laplacian(const std::vector<cplx>& spec, std::vector<cplx>& out) const {
  const int n = grid_.n;
  out.resize(grid_.spec_size());
  for (int ix = 0; ix < n; ++ix) {
    const double kx = grid_.kfreq(ix);
    for (int iy = 0; iy < n; ++iy) {
      const double ky = grid_.kfreq(iy);
      for (int iz = 0; iz < grid_.spec_nz(); ++iz) {
        const double k2 = kx * kx + ky * ky + static_cast<double>(iz) * iz;
        const std::size_t s = grid_.spec_index(ix, iy, iz);
        out[s] = -k2 * spec[s];
      }
    }
  }
}

void SpectralWorkspace::derivative_to_real(const std::vector<cplx>& spec, int axis,
                                           std::vector<double>& out) {
  static thread_local std::vector<cplx> tmp;
  derivative(spec, axis, tmp);
  inverse(tmp, out);
}

void SpectralWorkspace::laplacian_to_real(const std::vector<cplx>& spec,
                                          std::vector<double>& out) {
  static thread_local std::vector<cplx> tmp;
  laplacian(spec, tmp);
  inverse(tmp, out);
}

void SpectralWorkspace::leray_project(std::vector<cplx>& ux, std::vector<cplx>& uy,
                                      std::vector<cplx>& uz) const {
  const int n = grid_.n;
  for (int ix = 0; ix < n; ++ix) {
    const double kx = grid_.kfreq(ix);
    for (int iy = 0; iy < n; ++iy) {
      const double ky = grid_.kfreq(iy);
      for (int iz = 0; iz < grid_.spec_nz(); ++iz) {
        const double kz = iz;
        const double k2 = kx * kx + ky * ky + kz * kz;
        if (k2 == 0.0) continue;
        const std::size_t s = grid_.spec_index(ix, iy, iz);
        const cplx kdotu = (kx * ux[s] + ky * uy[s] + kz * uz[s]) / k2;
        ux[s] -= kx * kdotu;
        uy[s] -= ky * kdotu;
        uz[s] -= kz * kdotu;
      }
    }
  }
}

double SpectralWorkspace::spectral_divergence_max(const std::vector<cplx>& ux,
                                                  const std::vector<cplx>& uy,
                                                  const std::vector<cplx>& uz) const {
  const int n = grid_.n;
  double worst = 0.0;
  for (int ix = 0; ix < n; ++ix) {
    const double kx = grid_.kfreq(ix);
    for (int iy = 0; iy < n; ++iy) {
      const double ky = grid_.kfreq(iy);
      for (int iz = 0; iz < grid_.spec_nz(); ++iz) {
        const double kz = iz;
        const std::size_t s = grid_.spec_index(ix, iy, iz);
        const cplx div = cplx(0.0, 1.0) * (kx * ux[s] + ky * uy[s] + kz * uz[s]);
        worst = std::max(worst, std::abs(div));
      }
    }
  }
  return worst;
}

}  // namespace bmqt
