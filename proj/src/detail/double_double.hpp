#pragma once

// Unevaluated-sum double-double arithmetic (Dekker / Knuth error-free
// transforms). Requires strict IEEE evaluation: the library is built with
// -ffp-contract=off so no operation below is fused.

#include <cmath>

namespace sschain::detail {

struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}

inline void split(double a, double& hi, double& lo) {
  constexpr double splitter = 134217729.0;  // 2^27 + 1
  double t = splitter * a;
  hi = t - (t - a);
  lo = a - hi;
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  double ah, al, bh, bl;
  split(a, ah, al);
  split(b, bh, bl);
  double err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
  return {p, err};
}

inline DD operator+(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  DD t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD operator-(DD a) { return {-a.hi, -a.lo}; }
inline DD operator-(DD a, DD b) { return a + (-b); }

inline DD operator*(DD a, DD b) {
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline DD operator*(DD a, double b) {
  DD p = two_prod(a.hi, b);
  p.lo += a.lo * b;
  return quick_two_sum(p.hi, p.lo);
}

inline DD operator/(DD a, DD b) {
  double q1 = a.hi / b.hi;
  DD r = a - b * q1;
  double q2 = r.hi / b.hi;
  r = r - b * q2;
  double q3 = r.hi / b.hi;
  DD q = quick_two_sum(q1, q2);
  return q + DD{q3, 0.0};
}

/// base^n by binary powering; relative error grows like log2(n) ulps of
/// double-double precision rather than linearly in n.
inline DD dd_pow(double base, long n) {
  bool invert = n < 0;
  unsigned long e = invert ? static_cast<unsigned long>(-(n + 1)) + 1UL
                           : static_cast<unsigned long>(n);
  DD result{1.0, 0.0};
  DD b{base, 0.0};
  while (e) {
    if (e & 1UL) result = result * b;
    e >>= 1;
    if (e) b = b * b;
  }
  return invert ? DD{1.0, 0.0} / result : result;
}

}  // namespace sschain::detail
