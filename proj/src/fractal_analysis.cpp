#include "sschain/fractal_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sschain {
namespace {

constexpr std::size_t kMinSamples = std::size_t{1} << 12;
constexpr double kSaturation = 0.98;

struct ColumnRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  void merge(const ColumnRange& o) {
    lo = std::min(lo, o.lo);
    hi = std::max(hi, o.hi);
  }
};

std::size_t column_of(double x, std::size_t cols) {
  const double c = std::floor(x * static_cast<double>(cols));
  if (c < 0.0) return 0;
  return std::min(static_cast<std::size_t>(c), cols - 1);
}

std::int64_t row_of(double y, std::int64_t rows) {
  const double r = std::floor(y * static_cast<double>(rows));
  if (r < 0.0) return 0;
  return std::min(static_cast<std::int64_t>(r), rows - 1);
}

// y-extent of the polyline inside each of `cols` equal columns. Because the
// curve is a connected graph, that extent is a single interval per column.
std::vector<ColumnRange> finest_columns(std::span<const double> x,
                                        std::span<const double> y,
                                        std::size_t cols) {
  std::vector<ColumnRange> out(cols);
  const double w = 1.0 / static_cast<double>(cols);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double x0 = x[i], x1 = x[i + 1], y0 = y[i], y1 = y[i + 1];
    const std::size_t c0 = column_of(x0, cols), c1 = column_of(x1, cols);
    out[c0].add(y0);
    out[c1].add(y1);
    const double slope = (y1 - y0) / (x1 - x0);
    for (std::size_t c = c0; c < c1; ++c) {
      // Crossing of the boundary between column c and c + 1.
      const double yb = y0 + slope * (static_cast<double>(c + 1) * w - x0);
      out[c].add(yb);
      out[c + 1].add(yb);
    }
  }
  return out;
}

}  // namespace

FractalEstimate box_count_dimension(std::span<const double> x,
                                    std::span<const double> y, int n_scales,
                                    bool normalize) {
  if (x.size() != y.size()) throw Error(Errc::invalid_grid, "x and y differ in length");
  if (x.size() < kMinSamples) {
    throw Error(Errc::too_few_samples, "box counting needs at least 4096 samples");
  }
  if (n_scales < 5 || n_scales > 28) throw Error(Errc::bad_range, "n_scales must be in [5, 28]");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw Error(Errc::invalid_grid, "abscissae must increase");
  }
  if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }) ||
      !std::isfinite(x.front()) || !std::isfinite(x.back())) {
    throw Error(Errc::degenerate_curve, "curve has non-finite values");
  }
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  if (!(ymax > ymin)) throw Error(Errc::degenerate_curve, "curve is constant");

  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  if (normalize) {
    const double x0 = xs.front(), xw = xs.back() - xs.front();
    for (double& v : xs) v = (v - x0) / xw;
    for (double& v : ys) v = (v - ymin) / (ymax - ymin);
    xs.back() = 1.0;
  }

  const int finest = n_scales + 1;
  std::vector<ColumnRange> cols = finest_columns(xs, ys, std::size_t{1} << finest);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(finest + 1), 0);
  for (int j = finest;; --j) {
    const std::int64_t rows = std::int64_t{1} << j;
    std::int64_t n = 0;
    for (const ColumnRange& c : cols) {
      if (c.lo > c.hi) continue;
      n += row_of(c.hi, rows) - row_of(c.lo, rows) + 1;
    }
    counts[static_cast<std::size_t>(j)] = n;
    if (j == 2) break;
    std::vector<ColumnRange> coarser(cols.size() / 2);
    for (std::size_t c = 0; c < coarser.size(); ++c) {
      coarser[c] = cols[2 * c];
      coarser[c].merge(cols[2 * c + 1]);
    }
    cols = std::move(coarser);
  }

  const double segments = static_cast<double>(xs.size() - 1);
  FractalEstimate est;
  std::vector<double> lx, ly;
  for (int j = 4; j <= finest; ++j) {
    const std::int64_t n = counts[static_cast<std::size_t>(j)];
    if (static_cast<double>(n) >= kSaturation * segments) break;
    const double s = std::ldexp(1.0, -j);
    est.scales_used.push_back(s);
    est.counts.push_back(n);
    lx.push_back(static_cast<double>(j) * std::log(2.0));
    ly.push_back(std::log(static_cast<double>(n)));
  }
  if (lx.size() < 3) {
    throw Error(Errc::too_few_samples, "fewer than three unsaturated scales");
  }

  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  est.dimension = sxy / sxx;
  est.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  est.out_of_range = est.dimension < 1.0 || est.dimension > 2.0;
  return est;
}

FractalEstimate box_count_dimension(const DispersionCurve& curve, int n_scales,
                                    bool normalize) {
  std::vector<double> x, y;
  x.reserve(curve.samples.size());
  y.reserve(curve.samples.size());
  for (const DispersionSample& s : curve.samples) {
    x.push_back(curve.spacing == Spacing::log ? std::log(s.kh) : s.kh);
    y.push_back(s.omega_sq);
  }
  return box_count_dimension(x, y, n_scales, normalize);
}

}  // namespace sschain
