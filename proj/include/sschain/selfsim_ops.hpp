#pragma once

#include <functional>
#include <optional>

#include "sschain/core.hpp"

namespace sschain {

/// A point-evaluable real function together with the growth exponents the
/// caller vouches for. `eval` must be safe to call concurrently if the field
/// is shared between threads.
struct EvaluableField {
  std::function<double(double)> eval;
  /// |f(t)| ~ t^decay_beta as t -> infinity.
  double decay_beta = -2.0;
  /// Small-argument exponent; 2 for second differences of smooth fields.
  double smooth_alpha = 2.0;
  /// Declared sup |f|. When present, the upper tail of the Laplacian is
  /// bounded rigorously instead of extrapolated from edge samples.
  std::optional<double> amplitude;
  /// Declared sup |f'|. When present, the effect of rounding the evaluation
  /// arguments x +- N^s h is included in error bounds.
  std::optional<double> lipschitz;

  double operator()(double x) const { return eval(x); }
};

namespace fields {
EvaluableField zero();
EvaluableField constant(double c);
/// exp(-((x - center) / width)^2)
EvaluableField gaussian(double center = 0.0, double width = 1.0);
/// 1 / (1 + ((x - center) / width)^2)
EvaluableField lorentzian(double center = 0.0, double width = 1.0);
/// 1 / (1 + x^4)
EvaluableField quartic_lorentzian();
/// amplitude * cos(k x + phase)
EvaluableField cosine(double k, double amplitude = 1.0, double phase = 0.0);
EvaluableField linear_ramp();
}  // namespace fields

/// f(N^s h)
double affine_apply(const EvaluableField& f, const ChainParams& params, long s,
                    double h);

/// u(x + h) + u(x - h) - 2 u(x)
double second_difference(const EvaluableField& u, double x, double h);

/// sum_s N^(-delta s) f(N^s h) over a certified window. Requires
/// beta < delta < alpha from the field's declared exponents; tails are
/// extrapolated geometrically from edge terms with a safety factor of 4.
Bounded selfsim_transform(const EvaluableField& f, const ChainParams& params,
                          double h, const ToleranceBudget& tol);

/// Plain partial sum over [s_minus, s_plus]; err_bound covers rounding only.
Bounded selfsim_partial_sum(const EvaluableField& f, const ChainParams& params,
                            double h, long s_minus, long s_plus);

/// Self-similar Laplacian
///   sum_s N^(-delta s) [u(x + N^s h) + u(x - N^s h) - 2 u(x)]
/// at a single point, with h = params.h().
///
/// Near s -> -infinity the second difference cancels catastrophically, so
/// the lower end of the window stops where rounding noise overtakes the
/// terms. In that case `tolerance_met` is false and the bound reflects the
/// attainable accuracy.
Bounded selfsim_laplacian(const EvaluableField& u, const ChainParams& params,
                          double x, const ToleranceBudget& tol);

struct LaplacianScaling {
  double residual = 0.0;
  double bound = 0.0;
};

/// |Lap_(N h) u(x) - N^delta Lap_h u(x)| with its combined certified bound.
LaplacianScaling laplacian_scaling_check(const EvaluableField& u,
                                         const ChainParams& params, double x,
                                         const ToleranceBudget& tol);

}  // namespace sschain
