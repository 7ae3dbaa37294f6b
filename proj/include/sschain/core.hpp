#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sschain {

enum class Errc {
  invalid_params,
  invalid_window,
  invalid_tolerance,
  budget_exhausted,
  bad_range,
  inadmissible_exponent,
  out_of_domain,
  overflow,
  singular_point,
  too_few_samples,
  degenerate_curve,
  invalid_grid,
  unstable_dt,
};

const char* to_string(Errc code);

/// Library-wide exception. Every failure raised by sschain carries one of
/// the codes above so callers (the CLI in particular) can map them to exit
/// statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

enum class Mode {
  /// 0 < delta < 2, the range in which the chain energy converges.
  physical,
  /// Any real delta; used by the generic self-similar transform.
  mathematical,
};

/// Parameter triple (N, delta, h) of a self-similar chain or operator.
///
/// xi = N^-delta and Lambda = N^delta are derived on demand and never
/// stored. The checked constructor rejects N <= 1 instead of folding
/// N -> 1/N; `unchecked` exists so that callers can build a value purely
/// to obtain a full validation report.
class ChainParams {
 public:
  ChainParams(double N, double delta, double h, Mode mode = Mode::physical);

  static ChainParams unchecked(double N, double delta, double h) noexcept;

  double N() const noexcept { return N_; }
  double delta() const noexcept { return delta_; }
  double h() const noexcept { return h_; }
  double xi() const;
  double lambda() const;
  double log_N() const;

  /// Same (N, delta) with a different length scale.
  ChainParams with_h(double h) const;

  friend bool operator==(const ChainParams&, const ChainParams&) = default;

 private:
  ChainParams(double N, double delta, double h, int) noexcept
      : N_(N), delta_(delta), h_(h) {}

  double N_;
  double delta_;
  double h_;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string summary() const;

  friend bool operator==(const ValidationReport&,
                         const ValidationReport&) = default;
};

ValidationReport validate(const ChainParams& params, Mode mode);
ValidationReport validate_physical(const ChainParams& params);

/// Growth exponents of an admissible function: f(t) ~ t^alpha for t -> 0
/// and f(t) ~ t^beta for t -> infinity.
struct AdmissibilityWindow {
  double alpha = 2.0;
  double beta = 0.0;
};

/// True iff beta < delta < alpha (open interval). Throws invalid_window
/// when beta >= alpha.
bool delta_window(const AdmissibilityWindow& window, const ChainParams& params);

struct ToleranceBudget {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  std::int64_t max_terms = 4'000'000;
  std::int64_t max_quad_evals = 20'000'000;

  /// Throws invalid_tolerance unless every field is positive and
  /// max_terms >= 3.
  void validate() const;
  double target(double magnitude) const;
};

/// Value together with a bound on its absolute error.
struct Bounded {
  double value = 0.0;
  double err_bound = 0.0;
  /// False when rounding noise or the term budget kept the error bound from
  /// reaching the requested tolerance; the bound itself is still honest.
  bool tolerance_met = true;
};

}  // namespace sschain
