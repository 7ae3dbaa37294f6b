#pragma once

#include "detail/double_double.hpp"

namespace sschain::detail {

struct SinSq {
  double value = 0.0;
  double abs_err = 0.0;
};

/// sin^2(x * N^s / 2) for x >= 0, where `n_pow_s` is N^s in double-double
/// (as produced by dd_pow). Phases up to 2^60 are reduced modulo pi in
/// double-double; larger phases go through MPFR at a precision sized to the
/// phase. The returned error bound covers phase error, reduction error and
/// the final sine rounding.
SinSq sin_sq_half_phase(DD x, DD n_pow_s, double N, long s);

/// Relative error bound of dd_pow(N, s) times one further double-double
/// multiplication.
double dd_power_rel_err(long s);

}  // namespace sschain::detail
