#include "sschain/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sschain {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_params: return "invalid-params";
    case Errc::invalid_window: return "invalid-window";
    case Errc::invalid_tolerance: return "invalid-tolerance";
    case Errc::budget_exhausted: return "budget-exhausted";
    case Errc::bad_range: return "bad-range";
    case Errc::inadmissible_exponent: return "inadmissible-exponent";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::overflow: return "overflow";
    case Errc::singular_point: return "singular-point";
    case Errc::too_few_samples: return "too-few-samples";
    case Errc::degenerate_curve: return "degenerate-curve";
    case Errc::invalid_grid: return "invalid-grid";
    case Errc::unstable_dt: return "unstable-dt";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

ChainParams::ChainParams(double N, double delta, double h, Mode mode)
    : N_(N), delta_(delta), h_(h) {
  auto report = validate(*this, mode);
  if (!report.ok()) throw Error(Errc::invalid_params, report.summary());
}

ChainParams ChainParams::unchecked(double N, double delta, double h) noexcept {
  return ChainParams(N, delta, h, 0);
}

double ChainParams::xi() const { return std::pow(N_, -delta_); }
double ChainParams::lambda() const { return std::pow(N_, delta_); }
double ChainParams::log_N() const { return std::log(N_); }

ChainParams ChainParams::with_h(double h) const {
  return ChainParams(N_, delta_, h, 0);
}

std::string ValidationReport::summary() const {
  if (violations.empty()) return "admissible";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i];
  }
  return out.str();
}

ValidationReport validate(const ChainParams& params, Mode mode) {
  ValidationReport report;
  const double N = params.N(), delta = params.delta(), h = params.h();
  if (!std::isfinite(N) || !(N > 1.0)) report.violations.push_back("N must exceed 1");
  if (!std::isfinite(h) || !(h > 0.0)) report.violations.push_back("h must be positive");
  if (!std::isfinite(delta)) {
    report.violations.push_back("delta must be finite");
  } else if (mode == Mode::physical && !(delta > 0.0 && delta < 2.0)) {
    report.violations.push_back("delta not in (0,2)");
  }
  return report;
}

ValidationReport validate_physical(const ChainParams& params) {
  return validate(params, Mode::physical);
}

bool delta_window(const AdmissibilityWindow& window, const ChainParams& params) {
  if (!(window.beta < window.alpha)) {
    std::ostringstream msg;
    msg << "admissibility window requires beta < alpha (alpha=" << window.alpha
        << ", beta=" << window.beta << ")";
    throw Error(Errc::invalid_window, msg.str());
  }
  return window.beta < params.delta() && params.delta() < window.alpha;
}

void ToleranceBudget::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || max_terms < 3 || max_quad_evals <= 0) {
    throw Error(Errc::invalid_tolerance,
                "tolerances must be positive and max_terms >= 3");
  }
}

double ToleranceBudget::target(double magnitude) const {
  return std::max(abs_tol, rel_tol * std::abs(magnitude));
}

}  // namespace sschain
