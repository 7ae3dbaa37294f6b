#include "sschain/spectral_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "detail/fft.hpp"
#include "detail/summation.hpp"

namespace sschain {
namespace {

bool power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

void require_grid(double L, int M) {
  if (!(L > 0.0) || !std::isfinite(L)) throw Error(Errc::invalid_grid, "L must be positive");
  if (M < 8 || !power_of_two(M)) {
    std::ostringstream msg;
    msg << "M=" << M << " is not a power of two >= 8";
    throw Error(Errc::invalid_grid, msg.str());
  }
}

int signed_index(int j, int M) { return j <= M / 2 ? j : j - M; }

double wavenumber(double L, int M, int j) {
  return 2.0 * std::numbers::pi * signed_index(j, M) / L;
}

// Multiplier of the truncated real-space force law for every mode, computed
// once per |j|, with the certified upper bound on its magnitude.
struct ForceMultipliers {
  std::vector<double> m;
  double max_upper = 0.0;
};

ForceMultipliers force_multipliers(double L, int M, const ChainParams& params,
                                   const TruncationWindow& window) {
  WmSeries series(params);
  ForceMultipliers out;
  out.m.resize(static_cast<std::size_t>(M));
  for (int j = 0; j <= M / 2; ++j) {
    const Bounded b =
        series.partial_sum(std::abs(wavenumber(L, M, j)) * params.h(), window.s_minus,
                           window.s_plus);
    out.m[j] = -b.value;
    if (j > 0 && j < M / 2) out.m[M - j] = -b.value;
    out.max_upper = std::max(out.max_upper, b.value + b.err_bound);
  }
  return out;
}

std::vector<double> sample(const EvaluableField& f, double L, int M) {
  std::vector<double> out(static_cast<std::size_t>(M));
  for (int n = 0; n < M; ++n) out[n] = f(L * n / M);
  return out;
}

double relative_drift(double total, double initial) {
  const double diff = std::abs(total - initial);
  if (diff == 0.0) return 0.0;
  return initial != 0.0 ? diff / std::abs(initial) : diff;
}

}  // namespace

double SpectralState::wavenumber(int j) const { return sschain::wavenumber(L, M, j); }

std::vector<double> mode_frequencies(const SpectralState& state,
                                     const ToleranceBudget& tol) {
  auto report = validate_physical(state.params);
  if (!report.ok()) throw Error(Errc::invalid_params, report.summary());
  const int M = state.M;
  WmSeries series(state.params);
  std::vector<double> omega(static_cast<std::size_t>(M), 0.0);
  for (int j = 1; j <= M / 2; ++j) {
    const double kh = std::abs(state.wavenumber(j)) * state.params.h();
    omega[j] = std::sqrt(series.sample(kh, tol).omega_sq);
    omega[M - j] = omega[j];
  }
  return omega;
}

SpectralState init_state(double L, const ChainParams& params,
                         const std::vector<double>& u0,
                         const std::vector<double>& v0,
                         const ToleranceBudget& tol) {
  const int M = static_cast<int>(u0.size());
  require_grid(L, M);
  if (v0.size() != u0.size()) throw Error(Errc::invalid_grid, "u0 and v0 differ in length");
  SpectralState s;
  s.L = L;
  s.M = M;
  s.params = params;
  detail::RealFft fft(M);
  s.u_hat = fft.forward(u0);
  s.v_hat = fft.forward(v0);
  s.omega = mode_frequencies(s, tol);
  s.initial_energy = energy(s).total;
  return s;
}

SpectralState init_state(double L, int M, const ChainParams& params,
                         const EvaluableField& u0, const EvaluableField& v0,
                         const ToleranceBudget& tol) {
  require_grid(L, M);
  return init_state(L, params, sample(u0, L, M), sample(v0, L, M), tol);
}

SpectralState evolve(const SpectralState& state, double dt, long steps) {
  SpectralState out = state;
  if (steps == 0) return out;
  const double span = dt * static_cast<double>(steps);
  for (int j = 0; j < state.M; ++j) {
    const Complex u = state.u_hat[j], v = state.v_hat[j];
    const double w = state.omega[j];
    if (w == 0.0) {
      out.u_hat[j] = u + v * span;
      continue;
    }
    const double c = std::cos(w * span), s = std::sin(w * span);
    out.u_hat[j] = u * c + v * (s / w);
    out.v_hat[j] = -u * (w * s) + v * c;
  }
  out.t = state.t + span;
  return out;
}

EnergyReport energy(const SpectralState& state) {
  const std::size_t M = static_cast<std::size_t>(state.M);
  std::vector<double> kin(M), ela(M);
  for (std::size_t j = 0; j < M; ++j) {
    kin[j] = std::norm(state.v_hat[j]);
    ela[j] = state.omega[j] * state.omega[j] * std::norm(state.u_hat[j]);
  }
  const double norm = 0.5 * state.L / (static_cast<double>(M) * static_cast<double>(M));
  EnergyReport r;
  r.kinetic = norm * detail::pairwise_sum(kin);
  r.elastic = norm * detail::pairwise_sum(ela);
  r.total = r.kinetic + r.elastic;
  r.drift_rel = relative_drift(r.total, state.initial_energy);
  return r;
}

std::vector<double> displacement(const SpectralState& state) {
  detail::RealFft fft(state.M);
  return fft.inverse(state.u_hat);
}

std::vector<double> velocity(const SpectralState& state) {
  detail::RealFft fft(state.M);
  return fft.inverse(state.v_hat);
}

double dalembertian_residual(const SpectralState& state, const ToleranceBudget& tol) {
  const int M = state.M;
  WmSeries series(state.params);
  double worst = 0.0, scale = 0.0;
  for (int j = 1; j <= M / 2; ++j) {
    const double kh = std::abs(state.wavenumber(j)) * state.params.h();
    const TruncationWindow w = series.window(kh, tol);
    const double m = -series.partial_sum(kh, w.s_minus, w.s_plus).value;
    const double w2 = state.omega[j] * state.omega[j];
    const double amp = std::max(std::abs(state.u_hat[j]), std::abs(state.u_hat[M - j]));
    worst = std::max(worst, std::abs(m + w2) * amp);
    scale = std::max(scale, w2 * amp);
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

double verlet_dt_limit(double L, int M, const ChainParams& params,
                       const TruncationWindow& window) {
  require_grid(L, M);
  const ForceMultipliers f = force_multipliers(L, M, params, window);
  if (f.max_upper <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 / std::sqrt(f.max_upper);
}

Trajectory verlet_reference(double L, const ChainParams& params,
                            const std::vector<double>& u0,
                            const std::vector<double>& v0,
                            const TruncationWindow& window, double dt, long steps,
                            long snap_every) {
  const int M = static_cast<int>(u0.size());
  require_grid(L, M);
  if (v0.size() != u0.size()) throw Error(Errc::invalid_grid, "u0 and v0 differ in length");
  if (window.s_minus > window.s_plus) throw Error(Errc::bad_range, "empty window");
  if (!(dt > 0.0) || steps < 0 || snap_every < 1) {
    throw Error(Errc::bad_range, "need dt > 0, steps >= 0, snap_every >= 1");
  }
  const ForceMultipliers f = force_multipliers(L, M, params, window);
  if (f.max_upper > 0.0 && dt >= 2.0 / std::sqrt(f.max_upper)) {
    std::ostringstream msg;
    msg << "dt=" << dt << " >= 2/omega_max=" << 2.0 / std::sqrt(f.max_upper);
    throw Error(Errc::unstable_dt, msg.str());
  }

  detail::RealFft fft(M);
  const double dx = L / M;
  const double norm = 0.5 * L / (static_cast<double>(M) * static_cast<double>(M));
  std::vector<double> u = u0, v = v0;

  auto force = [&](const std::vector<double>& x) {
    std::vector<Complex> spec = fft.forward(x);
    for (int j = 0; j < M; ++j) spec[j] *= f.m[j];
    return fft.inverse(spec);
  };
  auto measure = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<Complex> spec = fft.forward(x);
    std::vector<double> ela(static_cast<std::size_t>(M)), kin(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) ela[j] = -f.m[j] * std::norm(spec[j]);
    for (int n = 0; n < M; ++n) kin[n] = y[n] * y[n];
    EnergyReport r;
    r.kinetic = 0.5 * dx * detail::pairwise_sum(kin);
    r.elastic = norm * detail::pairwise_sum(ela);
    r.total = r.kinetic + r.elastic;
    return r;
  };

  Trajectory traj;
  auto snap = [&](long step) {
    traj.times.push_back(dt * static_cast<double>(step));
    traj.u.push_back(u);
    traj.v.push_back(v);
    EnergyReport r = measure(u, v);
    r.drift_rel = traj.energy.empty() ? 0.0 : relative_drift(r.total, traj.energy.front().total);
    traj.energy.push_back(r);
  };

  snap(0);
  std::vector<double> a = force(u);
  for (long step = 1; step <= steps; ++step) {
    for (int n = 0; n < M; ++n) {
      v[n] += 0.5 * dt * a[n];
      u[n] += dt * v[n];
    }
    a = force(u);
    for (int n = 0; n < M; ++n) v[n] += 0.5 * dt * a[n];
    if (step % snap_every == 0 || step == steps) snap(step);
  }
  return traj;
}

double measure_frequency(const std::vector<double>& times,
                         const std::vector<double>& values) {
  if (times.size() != values.size()) throw Error(Errc::invalid_grid, "length mismatch");
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double a = values[i], b = values[i + 1];
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
      crossings.push_back(times[i] + (times[i + 1] - times[i]) * (a / (a - b)));
    }
  }
  if (crossings.size() < 3) throw Error(Errc::too_few_samples, "fewer than three zero crossings");
  // Crossings are half a period apart: fit t_i = t_0 + i * T / 2.
  const double n = static_cast<double>(crossings.size());
  double mi = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    mi += static_cast<double>(i);
    mt += crossings[i];
  }
  mi /= n;
  mt /= n;
  double sii = 0.0, sit = 0.0;
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    sii += (static_cast<double>(i) - mi) * (static_cast<double>(i) - mi);
    sit += (static_cast<double>(i) - mi) * (crossings[i] - mt);
  }
  const double half_period = sit / sii;
  return std::numbers::pi / half_period;
}

}  // namespace sschain
