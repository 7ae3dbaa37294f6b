#include "detail/phase.hpp"

#include <stdint.h>  // before mpfr.h, enables mpfr_get_uj

#include <mpfr.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <unordered_map>

namespace sschain::detail {
namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon() / 2;  // 2^-53
constexpr double kDDUnit = 0x1p-104;

// pi as a sum of three doubles.
constexpr double kPi1 = 3.141592653589793116e+00;
constexpr double kPi2 = 1.224646799147353207e-16;
constexpr double kPi3 = -2.994769809718339666e-33;

constexpr double kDDPhaseLimit = 0x1p60;
constexpr long kMaxMpfrBits = 1L << 14;

struct MpfrScratch {
  mpfr_t x, p, t, pi;
  MpfrScratch() {
    mpfr_inits2(128, x, p, t, pi, static_cast<mpfr_ptr>(nullptr));
  }
  ~MpfrScratch() {
    mpfr_clears(x, p, t, pi, static_cast<mpfr_ptr>(nullptr));
  }
  MpfrScratch(const MpfrScratch&) = delete;
  MpfrScratch& operator=(const MpfrScratch&) = delete;
};

double sin_dd(DD r) { return std::sin(r.hi) + std::cos(r.hi) * r.lo; }

// Fraction of 2^e N^s / (2 pi) to 192 bits, so that for x = m 2^e with an
// integer m < 2^53 the phase x N^s / 2 modulo pi is pi frac(m G). The table
// is shared by all x with the same binary exponent.
struct FracKey {
  std::uint64_t n_bits;
  long s;
  int e;
  bool operator==(const FracKey&) const = default;
};

struct FracKeyHash {
  std::size_t operator()(const FracKey& k) const {
    std::uint64_t h = k.n_bits * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(k.s) + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.e) + 0x85ebca6b0c2b2ae3ULL + (h << 6) + (h >> 2);
    return h;
  }
};

using Frac192 = std::array<std::uint64_t, 3>;

Frac192 scaled_fraction(MpfrScratch& m, double N, long s, int e, long bits) {
  mpfr_set_prec(m.p, bits);
  mpfr_set_prec(m.t, bits);
  mpfr_set_prec(m.pi, bits);
  mpfr_set_d(m.t, N, MPFR_RNDN);
  mpfr_pow_si(m.p, m.t, s, MPFR_RNDN);
  mpfr_const_pi(m.pi, MPFR_RNDN);
  mpfr_div(m.p, m.p, m.pi, MPFR_RNDN);
  if (e - 1 >= 0) {
    mpfr_mul_2ui(m.p, m.p, static_cast<unsigned long>(e - 1), MPFR_RNDN);
  } else {
    mpfr_div_2ui(m.p, m.p, static_cast<unsigned long>(1 - e), MPFR_RNDN);
  }
  Frac192 g{};
  for (auto& word : g) {
    mpfr_frac(m.p, m.p, MPFR_RNDN);
    mpfr_mul_2ui(m.p, m.p, 64, MPFR_RNDN);
    word = static_cast<std::uint64_t>(mpfr_get_uj(m.p, MPFR_RNDZ));
  }
  return g;
}

// frac(m G) as a value in [-1/2, 1/2).
double centered_fraction(std::uint64_t m, const Frac192& g) {
  __extension__ using U128 = unsigned __int128;
  const U128 p2 = static_cast<U128>(m) * g[2];
  const U128 p1 = static_cast<U128>(m) * g[1] + static_cast<std::uint64_t>(p2 >> 64);
  const U128 p0 = static_cast<U128>(m) * g[0] + static_cast<std::uint64_t>(p1 >> 64);
  const auto w0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(p0));
  const auto w1 = static_cast<std::uint64_t>(p1);
  return std::ldexp(static_cast<double>(w0), -64) + std::ldexp(static_cast<double>(w1), -128);
}

SinSq via_mpfr(DD x, double N, long s, double phase_hi) {
  int exponent = 0;
  std::frexp(phase_hi, &exponent);
  const long bits = static_cast<long>(exponent) + 96;
  if (bits > kMaxMpfrBits) {
    // Phase beyond any representable reduction: only the range [0, 1] of
    // sin^2 is known.
    return {0.5, 0.5};
  }
  thread_local MpfrScratch scratch;
  if (x.lo == 0.0) {
    int ex = 0;
    const double f = std::frexp(x.hi, &ex);
    const auto m = static_cast<std::uint64_t>(std::ldexp(f, 53));
    const int e = ex - 53;
    thread_local std::unordered_map<FracKey, Frac192, FracKeyHash> cache;
    if (cache.size() > (1u << 20)) cache.clear();
    const FracKey key{std::bit_cast<std::uint64_t>(N), s, e};
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, scaled_fraction(scratch, N, s, e, bits + 160)).first;
    }
    const double a = kPi1 * centered_fraction(m, it->second);
    const double sn = std::sin(a);
    const double v = sn * sn;
    // 2^-192 table truncation times m < 2^53, plus the double conversions.
    return {v, 4 * kUnit * v + 2 * std::abs(sn) * (4 * kUnit * std::abs(a) + 0x1p-120)};
  }
  mpfr_set_prec(scratch.x, bits);
  mpfr_set_prec(scratch.p, bits);
  mpfr_set_prec(scratch.t, bits);
  mpfr_set_prec(scratch.pi, bits);
  mpfr_set_d(scratch.x, x.hi, MPFR_RNDN);
  mpfr_add_d(scratch.x, scratch.x, x.lo, MPFR_RNDN);
  mpfr_set_d(scratch.t, N, MPFR_RNDN);
  mpfr_pow_si(scratch.p, scratch.t, s, MPFR_RNDN);
  mpfr_mul(scratch.p, scratch.p, scratch.x, MPFR_RNDN);
  mpfr_div_2ui(scratch.p, scratch.p, 1, MPFR_RNDN);
  // Reduce modulo pi at full precision; the remainder then only needs a
  // double-precision sine.
  mpfr_const_pi(scratch.pi, MPFR_RNDN);
  mpfr_remainder(scratch.t, scratch.p, scratch.pi, MPFR_RNDN);
  const double r = mpfr_get_d(scratch.t, MPFR_RNDN);
  const double sn = std::sin(r);
  const double v = sn * sn;
  return {v, 4 * kUnit * v + 2 * kUnit * std::abs(r) + 0x1p-88};
}

}  // namespace

double dd_power_rel_err(long s) {
  const double steps = std::log2(static_cast<double>(std::labs(s)) + 2.0);
  return (4.0 * steps + 10.0) * kDDUnit;
}

SinSq sin_sq_half_phase(DD x, DD n_pow_s, double N, long s) {
  DD phase = x * n_pow_s;
  phase.hi *= 0.5;
  phase.lo *= 0.5;
  if (phase.hi == 0.0) return {0.0, 0.0};

  const double phase_err = phase.hi * dd_power_rel_err(s);
  if (phase.hi <= 0.78) {
    const double sn = sin_dd(phase);
    const double v = sn * sn;
    // |sin^2 a - sin^2 b| <= |sin(a + b)| |a - b|, which keeps the bound
    // relative for tiny phases.
    return {v, 4 * kUnit * v + std::min(1.0, 2.0 * phase.hi + phase_err) * phase_err};
  }
  if (phase.hi <= kDDPhaseLimit) {
    const double n = std::nearbyint(phase.hi / kPi1);
    DD r = phase - two_prod(n, kPi1);
    r = r - two_prod(n, kPi2);
    r = r - DD{n * kPi3, 0.0};
    const double sn = sin_dd(r);
    const double v = sn * sn;
    const double reduce_err = phase.hi * 0x1p-100;
    return {v, 4 * kUnit * v + phase_err + reduce_err + 2 * kUnit * std::abs(r.hi)};
  }
  return via_mpfr(x, N, s, phase.hi);
}

}  // namespace sschain::detail
