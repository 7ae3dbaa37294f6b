#pragma once

#include <vector>

#include "sschain/core.hpp"
#include "sschain/selfsim_ops.hpp"

namespace sschain {

/// Continuum limit N = 1 + epsilon of the chain.
class ContinuumParams {
 public:
  /// Throws invalid_params unless 0 < epsilon <= 0.1, 0 < delta < 2 and
  /// h > 0.
  ContinuumParams(double epsilon, double delta, double h = 1.0);

  double epsilon() const noexcept { return epsilon_; }
  double delta() const noexcept { return delta_; }
  double h() const noexcept { return h_; }

  /// epsilon above 0.01: the scale sum is only roughly an integral.
  bool coarse() const noexcept { return epsilon_ > 0.01; }

 private:
  double epsilon_;
  double delta_;
  double h_;
};

struct ContinuumConstants {
  double C = 0.0;
  /// C / epsilon
  double power_coeff = 0.0;
  /// 2 / (pi delta h) * (epsilon / C)^(1/delta)
  double density_coeff = 0.0;
};

/// Gamma function on (0, 171.6]. Throws out_of_domain for z <= 0 and
/// overflow beyond.
double gamma_fn(double z);

/// C(delta) = 2 int_0^inf (1 - cos t) / t^(1 + delta) dt for 0 < delta < 2.
Bounded constant_C(double delta, const ToleranceBudget& tol = {});

ContinuumConstants continuum_constants(const ContinuumParams& cp,
                                       const ToleranceBudget& tol = {});

struct LongwaveValue {
  double value = 0.0;
  /// (kh)^delta <= epsilon
  bool in_regime = true;
};

/// (kh)^delta C / epsilon
LongwaveValue longwave_omega_sq(const ContinuumParams& cp, double kh, double C);

/// rho(omega) = 2 / (pi delta h) (epsilon / C)^(1/delta) omega^(2/delta - 1)
double oscillator_density(const ContinuumParams& cp, double omega, double C);

/// Convolution kernel h^delta / (delta (delta - 1) epsilon) |x|^(1 - delta),
/// or -(h / epsilon) ln|x| when |delta - 1| < 1e-12.
double kernel_g(double x, const ContinuumParams& cp);

/// Samples of a function on a uniform grid over [a, b].
struct UniformSamples {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> values;

  double spacing() const;
};

/// Riemann-Liouville integral (1 / Gamma(D)) int_a^x (x - t)^(D - 1) v(t) dt
/// of the piecewise-linear interpolant of `v`, with the singular weight
/// integrated exactly on every cell.
double rl_fractional_integral(const UniformSamples& v, double D, double x);

/// (h^delta / epsilon) int_0^inf [u(x + t) + u(x - t) - 2 u(x)] / t^(1 + delta) dt
///
/// The field must satisfy decay_beta < delta. The far tail beyond the last
/// doubling panel is extrapolated, so the bound there is an estimate.
Bounded continuum_laplacian(const EvaluableField& u, const ContinuumParams& cp,
                            double x, const ToleranceBudget& tol = {});

}  // namespace sschain
