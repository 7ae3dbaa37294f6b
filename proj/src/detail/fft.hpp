#pragma once

#include <complex>
#include <vector>

namespace sschain::detail {

/// Real-to-complex DFT of fixed length backed by FFTW. Plans are created
/// with FFTW_ESTIMATE, so results do not depend on timing.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }

  /// Full spectrum of length n, unnormalized, negative frequencies filled by
  /// conjugation.
  std::vector<std::complex<double>> forward(const std::vector<double>& x);

  /// Inverse of `forward` (includes the 1/n). Only bins 0..n/2 are read.
  std::vector<double> inverse(const std::vector<std::complex<double>>& spectrum);

 private:
  int n_;
  double* real_;
  void* spec_;
  void* fwd_;
  void* inv_;
};

}  // namespace sschain::detail
