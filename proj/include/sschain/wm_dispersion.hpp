#pragma once

#include <memory>
#include <vector>

#include "sschain/core.hpp"

namespace sschain {

/// Finite summation range [s_minus, s_plus] of the scale index together with
/// analytic majorants for the omitted tails.
struct TruncationWindow {
  long s_minus = 0;
  long s_plus = 0;
  double tail_bound_lower = 0.0;
  double tail_bound_upper = 0.0;

  long size() const { return s_plus - s_minus + 1; }
};

struct DispersionSample {
  double kh = 0.0;
  double omega_sq = 0.0;
  double err_bound = 0.0;
};

enum class Spacing { linear, log };

struct DispersionCurve {
  ChainParams params;
  Spacing spacing = Spacing::linear;
  std::vector<DispersionSample> samples;
};

/// Certified evaluator of
///
///   omega^2(kh) = 4 sum_s N^(-delta s) sin^2(kh N^s / 2),  s in Z.
///
/// The upper tail is bounded by 4 sum_{s>S+} N^(-delta s) and the lower tail
/// by (kh)^2 sum_{s<S-} N^((2-delta) s) (from sin^2 x <= x^2). Phases are
/// evaluated in double-double, and through MPFR once they exceed 2^60, so
/// the reported bound stays meaningful for every term in the window.
///
/// Powers N^s are cached between calls, so one instance is not safe for
/// concurrent use; give each thread its own.
class WmSeries {
 public:
  explicit WmSeries(const ChainParams& params);
  ~WmSeries();
  WmSeries(WmSeries&&) noexcept;
  WmSeries& operator=(WmSeries&&) noexcept;

  const ChainParams& params() const;

  TruncationWindow window(double kh, const ToleranceBudget& tol) const;
  DispersionSample sample(double kh, const ToleranceBudget& tol) const;

  /// omega^2 at the exact real number factor * kh, without rounding the
  /// product to double first.
  DispersionSample sample_at_product(double factor, double kh,
                                     const ToleranceBudget& tol) const;

  /// Sum over an explicit index range; err_bound covers rounding only.
  Bounded partial_sum(double kh, long s_minus, long s_plus) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TruncationWindow choose_window(const ChainParams& params, double kh,
                               const ToleranceBudget& tol);

DispersionSample omega_sq(const ChainParams& params, double kh,
                          const ToleranceBudget& tol);

/// `threads` = 0 picks the default (SSCHAIN_THREADS if set, otherwise the
/// hardware concurrency). Output does not depend on the thread count.
DispersionCurve sample_curve(const ChainParams& params, double kh_min,
                             double kh_max, int n, Spacing spacing,
                             const ToleranceBudget& tol, int threads = 0);

struct ScalingResidual {
  double residual = 0.0;
  /// (1 + N^delta) * (err(kh) + err(N kh))
  double bound = 0.0;
};

ScalingResidual scaling_check(const ChainParams& params, double kh,
                              const ToleranceBudget& tol);

/// |omega^2(N kh) - N^delta omega^2(kh)|
double scaling_residual(const ChainParams& params, double kh,
                        const ToleranceBudget& tol);

/// Thread count honoring SSCHAIN_THREADS.
int default_thread_count();

}  // namespace sschain
