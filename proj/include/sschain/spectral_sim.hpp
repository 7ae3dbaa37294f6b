#pragma once

#include <complex>
#include <vector>

#include "sschain/core.hpp"
#include "sschain/selfsim_ops.hpp"
#include "sschain/wm_dispersion.hpp"

namespace sschain {

using Complex = std::complex<double>;

/// Chain on a periodic domain [0, L) sampled at M points x_n = n L / M.
///
/// Mode j (0 <= j < M) is the unnormalized DFT coefficient
///   u_hat[j] = sum_n u(x_n) exp(-2 pi i j n / M)
/// with wavenumber k_j = 2 pi j' / L, where j' = j for j <= M/2 and j - M
/// otherwise. Mode frequencies are computed once at construction and kept
/// with the state.
struct SpectralState {
  double L = 0.0;
  int M = 0;
  ChainParams params = ChainParams::unchecked(2.0, 1.0, 1.0);
  std::vector<Complex> u_hat;
  std::vector<Complex> v_hat;
  double t = 0.0;
  std::vector<double> omega;
  /// Total energy when the state was initialized.
  double initial_energy = 0.0;

  double wavenumber(int j) const;
};

struct EnergyReport {
  double kinetic = 0.0;
  double elastic = 0.0;
  double total = 0.0;
  double drift_rel = 0.0;
};

/// Throws invalid_grid unless L > 0 and M is a power of two >= 8.
SpectralState init_state(double L, int M, const ChainParams& params,
                         const EvaluableField& u0, const EvaluableField& v0,
                         const ToleranceBudget& tol = {});

/// Same, from grid samples of length M.
SpectralState init_state(double L, const ChainParams& params,
                         const std::vector<double>& u0,
                         const std::vector<double>& v0,
                         const ToleranceBudget& tol = {});

/// omega_j = sqrt(omega^2(|k_j| h)), evaluated once per |j|.
std::vector<double> mode_frequencies(const SpectralState& state,
                                     const ToleranceBudget& tol = {});

/// Advances every mode by the exact rotation over dt * steps. Negative dt
/// runs backwards in time.
SpectralState evolve(const SpectralState& state, double dt, long steps);

/// kinetic = 1/2 int v^2 dx, elastic = 1/2 sum_j omega_j^2 |u_hat_j|^2 L / M^2,
/// both reduced by pairwise summation over modes.
EnergyReport energy(const SpectralState& state);

std::vector<double> displacement(const SpectralState& state);
std::vector<double> velocity(const SpectralState& state);

/// max_j |m_j + omega_j^2| |u_hat_j| / max_j omega_j^2 |u_hat_j|, where m_j
/// is the multiplier of the real-space force law summed over the certified
/// window for mode j. Zero for the zero state.
double dalembertian_residual(const SpectralState& state,
                             const ToleranceBudget& tol = {});

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> v;
  std::vector<EnergyReport> energy;
};

/// Velocity-Verlet integration of
///   u_tt = -sum_{s in window} xi^s [2 u(x) - u(x + h N^s) - u(x - h N^s)]
/// with the shifts applied exactly on the periodic grid through their
/// Fourier multipliers. Snapshots are taken every `snap_every` steps,
/// including the initial and final states. Energies use the same truncated
/// interaction. Throws unstable_dt when dt >= 2 / omega_max.
Trajectory verlet_reference(double L, const ChainParams& params,
                            const std::vector<double>& u0,
                            const std::vector<double>& v0,
                            const TruncationWindow& window, double dt, long steps,
                            long snap_every = 1);

/// Stability limit 2 / omega_max of verlet_reference for this window.
double verlet_dt_limit(double L, int M, const ChainParams& params,
                       const TruncationWindow& window);

/// Angular frequency of a sampled oscillation from a least-squares fit to
/// its interpolated zero-crossing times. Throws too_few_samples with fewer
/// than three crossings.
double measure_frequency(const std::vector<double>& times,
                         const std::vector<double>& values);

}  // namespace sschain
