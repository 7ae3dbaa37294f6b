#include "sschain/wm_dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <exception>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include "detail/double_double.hpp"
#include "detail/phase.hpp"
#include "detail/summation.hpp"

namespace sschain {
namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon() / 2;
// Margin on analytically computed tail majorants, covering the rounding of
// exp/expm1 in their evaluation.
constexpr double kTailMargin = 1.0 + 1e-9;

using detail::DD;

struct Term {
  double value;
  double err;
};

}  // namespace

struct WmSeries::Impl {
  explicit Impl(const ChainParams& p)
      : params(p),
        log_n(std::log(p.N())),
        delta(p.delta()),
        one_minus_up(-std::expm1(-p.delta() * std::log(p.N()))),
        one_minus_lo(-std::expm1(-(2.0 - p.delta()) * std::log(p.N()))) {}

  struct Power {
    DD value;
    double weight;  // 4 N^(-delta s)
  };

  ChainParams params;
  double log_n;
  double delta;
  double one_minus_up;
  double one_minus_lo;
  mutable std::vector<Power> nonneg;  // s = 0, 1, ...
  mutable std::vector<Power> neg;     // s = -1, -2, ...

  const Power& power(long s) const {
    auto& table = s >= 0 ? nonneg : neg;
    const std::size_t idx = s >= 0 ? static_cast<std::size_t>(s)
                                   : static_cast<std::size_t>(-s - 1);
    while (table.size() <= idx) {
      const long k = s >= 0 ? static_cast<long>(table.size())
                            : -static_cast<long>(table.size()) - 1;
      table.push_back({detail::dd_pow(params.N(), k),
                       4.0 * std::exp(-delta * static_cast<double>(k) * log_n)});
    }
    return table[idx];
  }

  Term term(DD x, long s) const {
    const Power& p = power(s);
    const double half = 0.5 * x.hi * p.value.hi;
    if (half < 1e-100 || !(p.weight < 1e250)) {
      // Far down the lower side the weight overflows while sin^2 underflows;
      // fold both into one exponent, x^2 N^((2 - delta) s).
      const double e = (2.0 - delta) * log_n * static_cast<double>(s) + 2.0 * std::log(x.hi);
      const double v = std::exp(e);
      return {v, (2.0 * std::abs(e) + 12.0) * kUnit * v};
    }
    const detail::SinSq ss = detail::sin_sq_half_phase(x, p.value, params.N(), s);
    const double v = p.weight * ss.value;
    const double weight_rel =
        (2.0 * std::abs(delta * static_cast<double>(s) * log_n) + 6.0) * kUnit;
    return {v, p.weight * ss.abs_err + v * weight_rel};
  }

  double upper_tail(long s_plus) const {
    return kTailMargin * 4.0 *
           std::exp(-delta * log_n * static_cast<double>(s_plus + 1)) /
           one_minus_up;
  }

  double lower_tail(double x_sq, long s_minus) const {
    return kTailMargin * x_sq *
           std::exp((2.0 - delta) * log_n * static_cast<double>(s_minus - 1)) /
           one_minus_lo;
  }

  struct Evaluation {
    TruncationWindow window;
    double value = 0.0;
    double err = 0.0;
  };

  Evaluation evaluate(DD x, const ToleranceBudget& tol) const {
    tol.validate();
    Evaluation out;
    if (x.hi == 0.0) return out;

    const double xmag = x.hi + std::abs(x.lo);
    const double x_sq = xmag * xmag * (1.0 + 4.0 * kUnit);

    std::deque<Term> terms;
    long lo = 0, hi = 0;
    terms.push_back(term(x, 0));
    double running = terms.front().value;
    double up = upper_tail(hi);
    double down = lower_tail(x_sq, lo);

    while (up + down > tol.target(running)) {
      if (hi - lo + 2 > tol.max_terms) {
        std::ostringstream msg;
        msg << "omega^2 window exceeds max_terms=" << tol.max_terms
            << " (N=" << params.N() << ", delta=" << delta << ", kh=" << x.hi
            << ")";
        throw Error(Errc::budget_exhausted, msg.str());
      }
      if (up >= down) {
        ++hi;
        terms.push_back(term(x, hi));
        running += terms.back().value;
        up = upper_tail(hi);
      } else {
        --lo;
        terms.push_front(term(x, lo));
        running += terms.front().value;
        down = lower_tail(x_sq, lo);
      }
    }

    detail::CompensatedSum sum;
    double err = 0.0;
    for (const Term& t : terms) {
      sum.add(t.value);
      err += t.err;
    }
    out.value = sum.value();
    const double n = static_cast<double>(terms.size());
    out.err = up + down + err + (4.0 * kUnit + n * n * kUnit * kUnit) * out.value;
    out.window = {lo, hi, down, up};
    return out;
  }

  Bounded partial(DD x, long s_minus, long s_plus) const {
    if (s_minus > s_plus) throw Error(Errc::bad_range, "empty index range");
    Bounded out;
    if (x.hi == 0.0) return out;
    detail::CompensatedSum sum;
    double err = 0.0;
    for (long s = s_minus; s <= s_plus; ++s) {
      Term t = term(x, s);
      sum.add(t.value);
      err += t.err;
    }
    out.value = sum.value();
    const double n = static_cast<double>(s_plus - s_minus + 1);
    out.err_bound = err + (4.0 * kUnit + n * n * kUnit * kUnit) * out.value;
    return out;
  }
};

namespace {

void require_physical(const ChainParams& params) {
  auto report = validate_physical(params);
  if (!report.ok()) throw Error(Errc::invalid_params, report.summary());
}

void require_finite(double kh) {
  if (!std::isfinite(kh)) throw Error(Errc::out_of_domain, "kh must be finite");
}

}  // namespace

WmSeries::WmSeries(const ChainParams& params) {
  require_physical(params);
  impl_ = std::make_unique<Impl>(params);
}

WmSeries::~WmSeries() = default;
WmSeries::WmSeries(WmSeries&&) noexcept = default;
WmSeries& WmSeries::operator=(WmSeries&&) noexcept = default;

const ChainParams& WmSeries::params() const { return impl_->params; }

TruncationWindow WmSeries::window(double kh, const ToleranceBudget& tol) const {
  require_finite(kh);
  return impl_->evaluate(DD{std::abs(kh), 0.0}, tol).window;
}

DispersionSample WmSeries::sample(double kh, const ToleranceBudget& tol) const {
  require_finite(kh);
  auto ev = impl_->evaluate(DD{std::abs(kh), 0.0}, tol);
  return {kh, ev.value, ev.err};
}

DispersionSample WmSeries::sample_at_product(double factor, double kh,
                                             const ToleranceBudget& tol) const {
  require_finite(kh);
  require_finite(factor);
  const DD x = detail::two_prod(std::abs(factor), std::abs(kh));
  auto ev = impl_->evaluate(x, tol);
  return {x.hi, ev.value, ev.err};
}

Bounded WmSeries::partial_sum(double kh, long s_minus, long s_plus) const {
  require_finite(kh);
  return impl_->partial(DD{std::abs(kh), 0.0}, s_minus, s_plus);
}

TruncationWindow choose_window(const ChainParams& params, double kh,
                               const ToleranceBudget& tol) {
  return WmSeries(params).window(kh, tol);
}

DispersionSample omega_sq(const ChainParams& params, double kh,
                          const ToleranceBudget& tol) {
  return WmSeries(params).sample(kh, tol);
}

int default_thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("SSCHAIN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

DispersionCurve sample_curve(const ChainParams& params, double kh_min,
                             double kh_max, int n, Spacing spacing,
                             const ToleranceBudget& tol, int threads) {
  require_physical(params);
  if (!(std::isfinite(kh_min) && std::isfinite(kh_max)) || !(kh_min >= 0.0) ||
      !(kh_min < kh_max) || n < 2) {
    throw Error(Errc::bad_range, "need 0 <= kh_min < kh_max and n >= 2");
  }
  if (spacing == Spacing::log && !(kh_min > 0.0)) {
    throw Error(Errc::bad_range, "log spacing requires kh_min > 0");
  }
  tol.validate();

  std::vector<double> grid(static_cast<std::size_t>(n));
  const double last = static_cast<double>(n - 1);
  if (spacing == Spacing::linear) {
    for (int i = 0; i < n; ++i) {
      grid[i] = kh_min + (kh_max - kh_min) * (static_cast<double>(i) / last);
    }
  } else {
    const double a = std::log(kh_min), b = std::log(kh_max);
    for (int i = 0; i < n; ++i) {
      grid[i] = std::exp(a + (b - a) * (static_cast<double>(i) / last));
    }
  }
  grid.front() = kh_min;
  grid.back() = kh_max;
  for (int i = 1; i < n; ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw Error(Errc::bad_range, "range too narrow for the requested samples");
    }
  }

  DispersionCurve curve{params, spacing, std::vector<DispersionSample>(grid.size())};
  const int workers =
      std::clamp(threads > 0 ? threads : default_thread_count(), 1, n);

  auto run = [&](int w) {
    WmSeries series(params);
    // Interleaved assignment keeps the expensive high-kh samples spread out.
    for (std::size_t i = static_cast<std::size_t>(w); i < grid.size();
         i += static_cast<std::size_t>(workers)) {
      curve.samples[i] = series.sample(grid[i], tol);
    }
  };

  if (workers == 1) {
    run(0);
    return curve;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return curve;
}

ScalingResidual scaling_check(const ChainParams& params, double kh,
                              const ToleranceBudget& tol) {
  WmSeries series(params);
  const DispersionSample base = series.sample(kh, tol);
  const DispersionSample scaled = series.sample_at_product(params.N(), kh, tol);
  const double lambda = params.lambda();
  return {std::abs(scaled.omega_sq - lambda * base.omega_sq),
          (1.0 + lambda) * (base.err_bound + scaled.err_bound)};
}

double scaling_residual(const ChainParams& params, double kh,
                        const ToleranceBudget& tol) {
  return scaling_check(params, kh, tol).residual;
}

}  // namespace sschain
