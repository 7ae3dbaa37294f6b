#include "sschain/selfsim_ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "detail/summation.hpp"

namespace sschain {
namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon() / 2;
// Field evaluations are assumed accurate to this many units in the last place.
constexpr double kEvalUlps = 4.0;
constexpr double kSafety = 4.0;

struct ScaleTerm {
  double value = 0.0;
  // Magnitude of the part of the term that is not an exact multiple of
  // xi^s; drives the extrapolated upper tail.
  double envelope = 0.0;
  double round = 0.0;
};

struct TailSpec {
  double xi = 0.0;
  double up_ratio = 0.0;  // N^(beta - delta)
  double lo_ratio = 0.0;  // N^-(alpha - delta)
  // Upper-tail terms contain c0 * xi^s exactly (c0 = 2|u(x)| for the
  // Laplacian).
  double const_coeff = 0.0;
  // Rigorous sup of the variable part divided by xi^s, when declared.
  std::optional<double> amplitude;
};

double geometric_tail(double ratio, long first_power) {
  return std::exp(static_cast<double>(first_power) * std::log(ratio)) /
         (1.0 - ratio);
}

template <class TermFn>
Bounded scale_sum(TermFn&& term, const TailSpec& spec, const ToleranceBudget& tol) {
  tol.validate();
  std::deque<ScaleTerm> terms;
  long lo = -2, hi = 2;
  double running = 0.0;
  for (long s = lo; s <= hi; ++s) {
    terms.push_back(term(s));
    running += terms.back().value;
  }

  auto upper_tail = [&] {
    double tail = 0.0;
    if (spec.const_coeff > 0.0) tail += spec.const_coeff * geometric_tail(spec.xi, hi + 1);
    if (spec.amplitude) {
      tail += *spec.amplitude * geometric_tail(spec.xi, hi + 1);
    } else {
      double m = 0.0;
      for (long j = hi - 2; j <= hi; ++j) {
        const ScaleTerm& t = terms[static_cast<std::size_t>(j - lo)];
        m = std::max(m, (t.envelope + t.round) *
                            std::pow(spec.up_ratio, static_cast<double>(hi + 1 - j)));
      }
      tail += kSafety * m / (1.0 - spec.up_ratio);
    }
    return tail;
  };
  auto lower_tail = [&] {
    double m = 0.0;
    for (long j = lo; j <= lo + 2; ++j) {
      const ScaleTerm& t = terms[static_cast<std::size_t>(j - lo)];
      m = std::max(m, (std::abs(t.value) + t.round) *
                          std::pow(spec.lo_ratio, static_cast<double>(j - lo + 1)));
    }
    return kSafety * m / (1.0 - spec.lo_ratio);
  };

  bool lower_limited = false;
  int noisy_run = 0;
  double up = upper_tail();
  double down = lower_tail();
  while (true) {
    if (!std::isfinite(running) || !std::isfinite(up) || !std::isfinite(down)) {
      // Only reachable when the declared exponents understate the growth.
      throw Error(Errc::overflow, "scale sum diverges; check the declared exponents");
    }
    const double target = tol.target(running);
    if (up + down <= target) break;
    if (lower_limited && (up <= 0.01 * down || up <= target * 1e-3)) break;
    if (hi - lo + 2 > tol.max_terms) {
      std::ostringstream msg;
      msg << "scale window exceeds max_terms=" << tol.max_terms;
      throw Error(Errc::budget_exhausted, msg.str());
    }
    if (up >= down || lower_limited) {
      ++hi;
      terms.push_back(term(hi));
      running += terms.back().value;
      up = upper_tail();
    } else {
      --lo;
      terms.push_front(term(lo));
      const ScaleTerm& t = terms.front();
      running += t.value;
      noisy_run = t.round >= std::abs(t.value) ? noisy_run + 1 : 0;
      down = lower_tail();
      if (noisy_run >= 2) lower_limited = true;
    }
  }

  detail::CompensatedSum sum;
  double round = 0.0, abs_sum = 0.0;
  for (const ScaleTerm& t : terms) {
    sum.add(t.value);
    round += t.round;
    abs_sum += std::abs(t.value);
  }
  Bounded out;
  out.value = sum.value();
  out.err_bound = up + down + round + 4.0 * kUnit * abs_sum;
  out.tolerance_met = up + down <= tol.target(out.value);
  return out;
}

double weight(const ChainParams& p, long s) {
  return std::exp(-p.delta() * static_cast<double>(s) * p.log_N());
}

double weight_rel_err(const ChainParams& p, long s) {
  return (2.0 * std::abs(p.delta() * static_cast<double>(s) * p.log_N()) + 4.0) * kUnit;
}

double scale(const ChainParams& p, long s, double h) {
  return std::pow(p.N(), static_cast<double>(s)) * h;
}

void require_params(const ChainParams& params, Mode mode) {
  auto report = validate(params, mode);
  if (!report.ok()) throw Error(Errc::invalid_params, report.summary());
}

void require_admissible(const AdmissibilityWindow& window, const ChainParams& params) {
  bool ok = false;
  try {
    ok = delta_window(window, params);
  } catch (const Error& e) {
    throw Error(Errc::inadmissible_exponent, e.what());
  }
  if (!ok) {
    std::ostringstream msg;
    msg << "delta=" << params.delta() << " outside (" << window.beta << ", "
        << window.alpha << ")";
    throw Error(Errc::inadmissible_exponent, msg.str());
  }
}

}  // namespace

namespace fields {

EvaluableField zero() {
  return {[](double) { return 0.0; }, -8.0, 2.0, 0.0, 0.0};
}

EvaluableField constant(double c) {
  return {[c](double) { return c; }, 0.0, 2.0, std::abs(c), 0.0};
}

EvaluableField gaussian(double center, double width) {
  return {[=](double x) {
            const double y = (x - center) / width;
            return std::exp(-y * y);
          },
          -8.0, 2.0, 1.0, std::sqrt(2.0 / std::exp(1.0)) / width};
}

EvaluableField lorentzian(double center, double width) {
  return {[=](double x) {
            const double y = (x - center) / width;
            return 1.0 / (1.0 + y * y);
          },
          -2.0, 2.0, 1.0, 3.0 * std::sqrt(3.0) / 8.0 / width};
}

EvaluableField quartic_lorentzian() {
  return {[](double x) {
            const double x2 = x * x;
            return 1.0 / (1.0 + x2 * x2);
          },
          -4.0, 2.0, 1.0, 1.07};
}

EvaluableField cosine(double k, double amplitude, double phase) {
  return {[=](double x) { return amplitude * std::cos(k * x + phase); }, 0.0, 2.0,
          std::abs(amplitude), std::abs(amplitude * k)};
}

EvaluableField linear_ramp() {
  return {[](double x) { return x; }, 1.0, 1.0, std::nullopt, 1.0};
}

}  // namespace fields

double affine_apply(const EvaluableField& f, const ChainParams& params, long s,
                    double h) {
  return f(scale(params, s, h));
}

double second_difference(const EvaluableField& u, double x, double h) {
  return u(x + h) + u(x - h) - 2.0 * u(x);
}

Bounded selfsim_transform(const EvaluableField& f, const ChainParams& params,
                          double h, const ToleranceBudget& tol) {
  require_params(params, Mode::mathematical);
  const AdmissibilityWindow window{f.smooth_alpha, f.decay_beta};
  require_admissible(window, params);
  const double N = params.N(), delta = params.delta();

  TailSpec spec;
  spec.xi = params.xi();
  spec.up_ratio = std::pow(N, f.decay_beta - delta);
  spec.lo_ratio = std::pow(N, -(f.smooth_alpha - delta));
  if (f.amplitude && f.decay_beta <= 0.0 && delta > 0.0) spec.amplitude = f.amplitude;

  auto term = [&](long s) {
    const double t = scale(params, s, h);
    const double w = weight(params, s);
    const double fv = f(t);
    ScaleTerm out;
    out.value = w * fv;
    out.envelope = std::abs(out.value);
    double arg_noise = f.lipschitz ? *f.lipschitz * 4.0 * kUnit * std::abs(t) : 0.0;
    if (f.amplitude) arg_noise = std::min(arg_noise, 2.0 * *f.amplitude);
    out.round = w * (kEvalUlps * kUnit * std::abs(fv) + arg_noise) +
                std::abs(out.value) * weight_rel_err(params, s);
    return out;
  };
  return scale_sum(term, spec, tol);
}

Bounded selfsim_partial_sum(const EvaluableField& f, const ChainParams& params,
                            double h, long s_minus, long s_plus) {
  require_params(params, Mode::mathematical);
  if (s_minus > s_plus) throw Error(Errc::bad_range, "empty index range");
  detail::CompensatedSum sum;
  double round = 0.0;
  for (long s = s_minus; s <= s_plus; ++s) {
    const double w = weight(params, s);
    const double v = w * f(scale(params, s, h));
    sum.add(v);
    round += std::abs(v) * (weight_rel_err(params, s) + (kEvalUlps + 4.0) * kUnit);
  }
  return {sum.value(), round, true};
}

Bounded selfsim_laplacian(const EvaluableField& u, const ChainParams& params,
                          double x, const ToleranceBudget& tol) {
  require_params(params, Mode::physical);
  // The -2u(x) part of the second difference makes the large-h exponent
  // max(beta, 0) whatever the field's own decay.
  const double beta_eff = std::max(u.decay_beta, 0.0);
  require_admissible({u.smooth_alpha, beta_eff}, params);
  const double N = params.N(), delta = params.delta(), h = params.h();

  const double u0 = u(x);
  TailSpec spec;
  spec.xi = params.xi();
  spec.up_ratio = std::pow(N, std::min(u.decay_beta, 0.0) - delta);
  spec.lo_ratio = std::pow(N, -(u.smooth_alpha - delta));
  spec.const_coeff = 2.0 * std::abs(u0);
  if (u.amplitude) spec.amplitude = 2.0 * *u.amplitude;

  auto term = [&](long s) {
    const double t = scale(params, s, h);
    const double w = weight(params, s);
    const double up = u(x + t), um = u(x - t);
    const double d2 = up + um - 2.0 * u0;
    ScaleTerm out;
    out.value = w * d2;
    out.envelope = w * (std::abs(up) + std::abs(um));
    double arg_noise =
        u.lipschitz ? 2.0 * *u.lipschitz * 4.0 * kUnit * (std::abs(x) + t) : 0.0;
    if (u.amplitude) arg_noise = std::min(arg_noise, 4.0 * *u.amplitude);
    out.round = w * (kEvalUlps * kUnit * (std::abs(up) + std::abs(um) + 2.0 * std::abs(u0)) +
                     arg_noise) +
                std::abs(out.value) * weight_rel_err(params, s);
    return out;
  };
  return scale_sum(term, spec, tol);
}

LaplacianScaling laplacian_scaling_check(const EvaluableField& u,
                                         const ChainParams& params, double x,
                                         const ToleranceBudget& tol) {
  const Bounded base = selfsim_laplacian(u, params, x, tol);
  const Bounded scaled =
      selfsim_laplacian(u, params.with_h(params.N() * params.h()), x, tol);
  const double lambda = params.lambda();
  const double residual = std::abs(scaled.value - lambda * base.value);
  const double rounding =
      4.0 * kUnit * (std::abs(scaled.value) + lambda * std::abs(base.value));
  return {residual, scaled.err_bound + lambda * base.err_bound + rounding};
}

}  // namespace sschain
