#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sschain/wm_dispersion.hpp"

namespace sschain {

struct FractalEstimate {
  double dimension = 0.0;
  double r2 = 0.0;
  /// Box sizes entering the fit, strictly decreasing.
  std::vector<double> scales_used;
  std::vector<std::int64_t> counts;
  /// Set when the estimate falls outside [1, 2]; it is reported unclamped.
  bool out_of_range = false;
};

/// Box-counting dimension of the polyline through (x[i], y[i]), x strictly
/// increasing.
///
/// Boxes have side 2^-j for j = 2 .. n_scales + 1 on the unit square (after
/// normalization when `normalize` is set; otherwise the data must already
/// lie in it). Each segment is rasterized, so every box the polyline passes
/// through is counted. The two coarsest levels are dropped, as are fine
/// levels whose count reaches 98% of the segment count.
FractalEstimate box_count_dimension(std::span<const double> x,
                                    std::span<const double> y, int n_scales,
                                    bool normalize = true);

/// Uses ln(kh) as abscissa for log-spaced curves, so boxes see a uniformly
/// sampled graph.
FractalEstimate box_count_dimension(const DispersionCurve& curve, int n_scales,
                                    bool normalize = true);

}  // namespace sschain
