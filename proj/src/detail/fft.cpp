#include "detail/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace sschain::detail {
namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
  if (!real_ || !spec) {
    fftw_free(real_);
    fftw_free(spec);
    throw std::bad_alloc();
  }
  spec_ = spec;
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(n, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(real_);
  fftw_free(spec_);
}

std::vector<std::complex<double>> RealFft::forward(const std::vector<double>& x) {
  for (int i = 0; i < n_; ++i) real_[i] = x[static_cast<std::size_t>(i)];
  fftw_execute(static_cast<fftw_plan>(fwd_));
  auto* spec = static_cast<fftw_complex*>(spec_);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n_));
  for (int j = 0; j <= n_ / 2; ++j) out[j] = {spec[j][0], spec[j][1]};
  for (int j = n_ / 2 + 1; j < n_; ++j) out[j] = std::conj(out[n_ - j]);
  out[0].imag(0.0);
  out[n_ / 2].imag(0.0);
  return out;
}

std::vector<double> RealFft::inverse(const std::vector<std::complex<double>>& spectrum) {
  auto* spec = static_cast<fftw_complex*>(spec_);
  for (int j = 0; j <= n_ / 2; ++j) {
    spec[j][0] = spectrum[j].real();
    spec[j][1] = spectrum[j].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inv_));
  std::vector<double> out(static_cast<std::size_t>(n_));
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = real_[i] * scale;
  return out;
}

}  // namespace sschain::detail
