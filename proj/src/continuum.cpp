#include "sschain/continuum.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "detail/summation.hpp"

namespace sschain {
namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon() / 2;
constexpr double kPi = std::numbers::pi;
constexpr unsigned kMaxDepth = 15;

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 2.0)) {
    std::ostringstream msg;
    msg << "delta=" << delta << " not in (0,2)";
    throw Error(Errc::out_of_domain, msg.str());
  }
}

double quad_tol(const ToleranceBudget& tol) {
  return std::max(0.1 * tol.rel_tol, 1e-15);
}

// Counts integrand evaluations against the budget.
class Counter {
 public:
  explicit Counter(std::int64_t budget) : budget_(budget) {}
  void tick() {
    if (++used_ > budget_) {
      std::ostringstream msg;
      msg << "quadrature exceeds max_quad_evals=" << budget_;
      throw Error(Errc::budget_exhausted, msg.str());
    }
  }

 private:
  std::int64_t budget_;
  std::int64_t used_ = 0;
};

struct Piece {
  double value = 0.0;
  double err = 0.0;
};

template <class F>
Piece gk(F&& f, double a, double b, double rel, Counter& counter) {
  double err = 0.0, l1 = 0.0;
  auto counted = [&](double t) {
    counter.tick();
    return f(t);
  };
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      counted, a, b, kMaxDepth, rel, &err, &l1);
  return {v, err + 8.0 * kUnit * l1};
}

// pow(hi, p) - pow(lo, p) for 0 <= lo < hi, without cancellation.
double power_difference(double hi, double lo, double p) {
  if (lo == 0.0) return std::pow(hi, p);
  return -std::pow(hi, p) * std::expm1(p * std::log1p(-(hi - lo) / hi));
}

// 2 sin^2(t/2) / t^2, i.e. (1 - cos t) / t^2
double versine_ratio(double t) {
  if (t == 0.0) return 0.5;
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// int_T^inf cos(t) t^-p dt for T a multiple of 2 pi, by repeated
// integration by parts, with a bound on the remainder.
Piece cos_tail(double p, double T) {
  constexpr int kTerms = 8;
  double sum = 0.0, prod = 1.0;
  double q = p;
  for (int k = 0; k < kTerms; ++k) {
    const double term = prod * q * std::pow(T, -q - 1.0);
    sum += (k % 2 == 0) ? term : -term;
    prod *= q * (q + 1.0);
    q += 2.0;
  }
  const double remainder = prod * std::pow(T, 1.0 - q) / (q - 1.0);
  return {sum, remainder + 4.0 * kUnit * std::abs(sum)};
}

}  // namespace

ContinuumParams::ContinuumParams(double epsilon, double delta, double h)
    : epsilon_(epsilon), delta_(delta), h_(h) {
  std::vector<std::string> bad;
  if (!(epsilon > 0.0)) bad.emplace_back("epsilon must be positive");
  if (epsilon > 0.1) bad.emplace_back("epsilon above 0.1");
  if (!(delta > 0.0 && delta < 2.0)) bad.emplace_back("delta not in (0,2)");
  if (!(h > 0.0) || !std::isfinite(h)) bad.emplace_back("h must be positive");
  if (!bad.empty()) {
    ValidationReport report{bad};
    throw Error(Errc::invalid_params, report.summary());
  }
}

double gamma_fn(double z) {
  if (!(z > 0.0)) throw Error(Errc::out_of_domain, "gamma requires z > 0");
  const double g = std::tgamma(z);
  if (!std::isfinite(g)) throw Error(Errc::overflow, "gamma overflows double");
  return g;
}

Bounded constant_C(double delta, const ToleranceBudget& tol) {
  require_delta(delta);
  tol.validate();
  Counter counter(tol.max_quad_evals);
  const double rel = quad_tol(tol);
  const double a = 2.0 - delta;

  // (0, 1] after w = t^(2 - delta), which removes the t^(1 - delta) behavior.
  Piece near = gk([&](double w) { return versine_ratio(std::pow(w, 1.0 / a)) / a; },
                  0.0, 1.0, rel, counter);

  constexpr int kPanels = 16;
  const double T = 2.0 * kPi * kPanels;
  auto f = [&](double t) { return versine_ratio(t) * std::pow(t, 1.0 - delta); };
  detail::CompensatedSum mid;
  double mid_err = 0.0;
  for (int j = 0; j < kPanels; ++j) {
    const double lo = j == 0 ? 1.0 : 2.0 * kPi * j;
    Piece p = gk(f, lo, 2.0 * kPi * (j + 1), rel, counter);
    mid.add(p.value);
    mid_err += p.err;
  }

  const double flat = std::pow(T, -delta) / delta;
  const Piece osc = cos_tail(1.0 + delta, T);

  detail::CompensatedSum total;
  total.add(near.value);
  total.add(mid.value());
  total.add(flat);
  total.add(-osc.value);
  Bounded out;
  out.value = 2.0 * total.value();
  out.err_bound = 2.0 * (near.err + mid_err + osc.err + 8.0 * kUnit * flat) +
                  4.0 * kUnit * std::abs(out.value);
  out.tolerance_met = out.err_bound <= tol.target(out.value);
  return out;
}

ContinuumConstants continuum_constants(const ContinuumParams& cp,
                                       const ToleranceBudget& tol) {
  ContinuumConstants out;
  out.C = constant_C(cp.delta(), tol).value;
  out.power_coeff = out.C / cp.epsilon();
  out.density_coeff = 2.0 / (kPi * cp.delta() * cp.h()) *
                      std::pow(cp.epsilon() / out.C, 1.0 / cp.delta());
  return out;
}

LongwaveValue longwave_omega_sq(const ContinuumParams& cp, double kh, double C) {
  if (!(kh >= 0.0)) throw Error(Errc::out_of_domain, "kh must be non-negative");
  const double p = std::pow(kh, cp.delta());
  return {p * C / cp.epsilon(), p <= cp.epsilon()};
}

double oscillator_density(const ContinuumParams& cp, double omega, double C) {
  if (!(omega >= 0.0)) throw Error(Errc::out_of_domain, "omega must be non-negative");
  if (!(C > 0.0)) throw Error(Errc::out_of_domain, "C must be positive");
  if (omega == 0.0) return 0.0;
  const double d = cp.delta();
  return 2.0 / (kPi * d * cp.h()) * std::pow(cp.epsilon() / C, 1.0 / d) *
         std::pow(omega, 2.0 / d - 1.0);
}

double kernel_g(double x, const ContinuumParams& cp) {
  const double d = cp.delta();
  const double ax = std::abs(x);
  if (ax == 0.0 && d >= 1.0) throw Error(Errc::singular_point, "kernel singular at x=0");
  if (std::abs(d - 1.0) < 1e-12) return -(cp.h() / cp.epsilon()) * std::log(ax);
  return std::pow(cp.h(), d) / (d * (d - 1.0) * cp.epsilon()) * std::pow(ax, 1.0 - d);
}

double UniformSamples::spacing() const {
  return (b - a) / static_cast<double>(values.size() - 1);
}

double rl_fractional_integral(const UniformSamples& v, double D, double x) {
  if (v.values.size() < 2 || !(v.a < v.b)) {
    throw Error(Errc::invalid_grid, "need at least two samples on a < b");
  }
  if (!(D > 0.0)) throw Error(Errc::out_of_domain, "order D must be positive");
  if (!(x >= v.a && x <= v.b)) throw Error(Errc::out_of_domain, "x outside [a,b]");

  const std::size_t cells = v.values.size() - 1;
  const double dx = v.spacing();
  auto node = [&](std::size_t i) {
    return i == cells ? v.b : v.a + static_cast<double>(i) * dx;
  };

  detail::CompensatedSum sum;
  for (std::size_t i = 0; i < cells; ++i) {
    const double t0 = node(i);
    if (!(t0 < x)) break;
    double t1 = node(i + 1);
    double v1 = v.values[i + 1];
    if (t1 > x) {
      v1 = v.values[i] + (v.values[i + 1] - v.values[i]) * ((x - t0) / (t1 - t0));
      t1 = x;
    }
    // s = x - t runs over [s_lo, s_hi]; v is linear in s.
    const double s_hi = x - t0;
    const double s_lo = x - t1;
    const double len = t1 - t0;
    const double w0 = power_difference(s_hi, s_lo, D) / D;
    const double w1 = power_difference(s_hi, s_lo, D + 1.0) / (D + 1.0) - s_lo * w0;
    sum.add(v1 * w0 + (v.values[i] - v1) / len * w1);
  }
  return sum.value() / gamma_fn(D);
}

Bounded continuum_laplacian(const EvaluableField& u, const ContinuumParams& cp,
                            double x, const ToleranceBudget& tol) {
  const double d = cp.delta();
  require_delta(d);
  tol.validate();
  if (!(u.decay_beta < d)) {
    throw Error(Errc::inadmissible_exponent, "field must satisfy decay_beta < delta");
  }
  Counter counter(tol.max_quad_evals);
  const double rel = quad_tol(tol);
  const double u0 = u(x);
  auto q = [&](double t) {
    counter.tick();
    return (u(x + t) + u(x - t) - 2.0 * u0) / (t * t);
  };

  // (0, t0]: q(t) = q0 + q2 t^2 + O(t^4), fitted from two samples.
  constexpr double t0 = 1e-3;
  const double qa = q(t0), qb = q(0.5 * t0);
  const double q2 = (qa - qb) / (0.75 * t0 * t0);
  const double q0 = qa - q2 * t0 * t0;
  const double core_lead = q0 * std::pow(t0, 2.0 - d) / (2.0 - d);
  const double core_corr = q2 * std::pow(t0, 4.0 - d) / (4.0 - d);
  const double noise = 4.0 * 4.0 * kUnit * (std::abs(u0) + 1e-300) / (0.25 * t0 * t0);
  Piece core{core_lead + core_corr,
             std::abs(core_corr) + noise * std::pow(t0, 2.0 - d) / (2.0 - d)};

  // [t0, 1] after w = t^(2 - delta).
  const double a = 2.0 - d;
  Piece near = gk([&](double w) { return q(std::pow(w, 1.0 / a)) / a; },
                  std::pow(t0, a), 1.0, rel, counter);

  // [1, inf) by doubling panels. Past the last panel the -2 u(x) part scales
  // exactly by 2^-delta per panel; the remainder of the field is bounded
  // from how far the last panels deviate from that scaling.
  auto full = [&](double t) {
    counter.tick();
    return (u(x + t) + u(x - t) - 2.0 * u0) * std::pow(t, -1.0 - d);
  };
  const double rho = std::pow(2.0, -d);
  const double ratio = std::pow(2.0, u.decay_beta - d);
  detail::CompensatedSum far;
  double far_err = 0.0;
  double last_panel = 0.0, last_var = 0.0, dev_prev = 0.0, dev_last = 0.0;
  double T = 1.0;
  double tail = 0.0, tail_err = 0.0;
  for (int panel = 0;; ++panel) {
    const Piece p = gk(full, T, 2.0 * T, rel, counter);
    far.add(p.value);
    far_err += p.err;
    // Panel integral of the field part alone.
    const double var = p.value + 2.0 * u0 * std::pow(T, -d) * (1.0 - rho) / d;
    dev_prev = dev_last;
    dev_last = panel == 0 ? std::abs(var) : std::abs(var - rho * last_var) + p.err;
    last_var = var;
    last_panel = p.value;
    T *= 2.0;
    tail = last_panel * rho / (1.0 - rho);
    tail_err = 4.0 * std::max(dev_prev, dev_last) * ratio / (1.0 - ratio);
    if (panel < 2) continue;
    const double running = core.value + near.value + far.value() + tail;
    const double fixed_err = far_err + near.err + core.err;
    if (tail_err + fixed_err <= tol.target(running)) break;
    // Rounding in the core already exceeds the target: stop once the tail
    // no longer matters next to it.
    if (tail_err <= 0.01 * fixed_err) break;
    if (!std::isfinite(T)) throw Error(Errc::budget_exhausted, "far tail does not settle");
  }

  detail::CompensatedSum total;
  total.add(core.value);
  total.add(near.value);
  total.add(far.value());
  total.add(tail);
  const double scale = std::pow(cp.h(), d) / cp.epsilon();
  Bounded out;
  out.value = scale * total.value();
  out.err_bound = scale * (core.err + near.err + far_err + tail_err) +
                  8.0 * kUnit * std::abs(out.value);
  out.tolerance_met = out.err_bound <= tol.target(out.value);
  return out;
}

}  // namespace sschain
