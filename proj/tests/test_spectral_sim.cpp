#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sschain/spectral_sim.hpp"

using namespace sschain;

namespace {

constexpr double kPi = std::numbers::pi;

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::overflow;
}

ToleranceBudget absolute(double abs_tol) {
  ToleranceBudget t;
  t.abs_tol = abs_tol;
  t.rel_tol = 1e-300;
  return t;
}

double max_rel_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    scale = std::max(scale, std::abs(a[j]));
    diff = std::max(diff, std::abs(a[j] - b[j]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

EvaluableField packet(double L, double width) { return fields::gaussian(L / 2, width); }

TruncationWindow union_window(const ChainParams& p, double k_min, double k_max,
                              const ToleranceBudget& tol) {
  const auto a = choose_window(p, k_min * p.h(), tol);
  const auto b = choose_window(p, k_max * p.h(), tol);
  return {std::min(a.s_minus, b.s_minus), std::max(a.s_plus, b.s_plus),
          std::max(a.tail_bound_lower, b.tail_bound_lower),
          std::max(a.tail_bound_upper, b.tail_bound_upper)};
}

}  // namespace

TEST_CASE("initialization") {
  const ChainParams p(1.5, 0.7, 1.0);
  const double L = 2 * kPi;
  SUBCASE("zero data") {
    const auto s = init_state(L, 64, p, fields::zero(), fields::zero());
    for (const auto& c : s.u_hat) CHECK(c == Complex{});
    for (const auto& c : s.v_hat) CHECK(c == Complex{});
    CHECK(s.initial_energy == 0.0);
  }
  SUBCASE("single cosine mode") {
    const int M = 64;
    const auto s = init_state(L, M, p, fields::cosine(1.0), fields::zero());
    int nonzero = 0;
    for (int j = 0; j < M; ++j) {
      if (std::abs(s.u_hat[j]) > 1e-12 * M) {
        ++nonzero;
        CHECK((j == 1 || j == M - 1));
        CHECK(std::abs(s.u_hat[j] - Complex(M / 2.0, 0.0)) <= 1e-12 * M);
      }
    }
    CHECK(nonzero == 2);
    CHECK(std::abs(s.u_hat[1] - std::conj(s.u_hat[M - 1])) <= 1e-12 * M);
  }
  SUBCASE("Gaussian packet against a direct transform") {
    const int M = 256;
    const double Lp = 40.0;
    const auto g = packet(Lp, 2.0);
    std::vector<double> x(M);
    for (int n = 0; n < M; ++n) x[n] = g(Lp * n / M);
    const auto s = init_state(Lp, M, p, g, fields::zero());
    const auto ref = oracle::direct_dft(x);
    CHECK(max_rel_diff(ref, s.u_hat) <= 1e-12);
  }
  SUBCASE("grid errors") {
    CHECK(code_of([&] { init_state(L, 48, p, fields::zero(), fields::zero()); }) ==
          Errc::invalid_grid);
    CHECK(code_of([&] { init_state(L, 4, p, fields::zero(), fields::zero()); }) ==
          Errc::invalid_grid);
    CHECK(code_of([&] { init_state(0.0, 64, p, fields::zero(), fields::zero()); }) ==
          Errc::invalid_grid);
    CHECK(code_of([&] {
            init_state(L, p, std::vector<double>(16), std::vector<double>(8));
          }) == Errc::invalid_grid);
    CHECK(code_of([&] {
            init_state(L, 64, ChainParams::unchecked(1.5, 2.0, 1.0), fields::zero(),
                       fields::zero());
          }) == Errc::invalid_params);
  }
}

TEST_CASE("mode frequencies") {
  const ChainParams p(1.5, 0.7, 1.0);
  const int M = 64;
  const auto s = init_state(2 * kPi, M, p, fields::zero(), fields::zero());
  CHECK(s.omega[0] == 0.0);
  for (int j = 1; j < M; ++j) CHECK(s.omega[j] == s.omega[M - j]);
  CHECK(s.omega[1] == std::sqrt(omega_sq(p, 1.0, {}).omega_sq));
  CHECK(s.wavenumber(M - 1) == doctest::Approx(-1.0));
  CHECK(s.omega == mode_frequencies(s));
}

TEST_CASE("exact evolution") {
  const ChainParams p(1.5, 0.7, 1.0);
  const double L = 2 * kPi;
  const auto s0 = init_state(L, 64, p, fields::cosine(3.0, 0.7, 0.4), fields::cosine(2.0, 0.2));

  SUBCASE("zero steps") {
    const auto s = evolve(s0, 0.1, 0);
    CHECK(s.u_hat == s0.u_hat);
    CHECK(s.v_hat == s0.v_hat);
    CHECK(s.t == s0.t);
  }
  SUBCASE("single mode returns after one period") {
    const auto m = init_state(L, 64, p, fields::cosine(3.0), fields::zero());
    const double period = 2 * kPi / m.omega[3];
    const auto s = evolve(m, period / 1000, 1000);
    CHECK(max_rel_diff(m.u_hat, s.u_hat) <= 1e-12);
    CHECK(s.t == doctest::Approx(period));
  }
  SUBCASE("reversible") {
    const auto fwd = evolve(s0, 0.37, 250);
    const auto back = evolve(fwd, -0.37, 250);
    CHECK(max_rel_diff(s0.u_hat, back.u_hat) <= 1e-12);
    CHECK(max_rel_diff(s0.v_hat, back.v_hat) <= 1e-12);
    CHECK(std::abs(back.t) <= 1e-12);
  }
  SUBCASE("zero mode drifts linearly") {
    const auto m = init_state(L, 16, p, fields::zero(), fields::constant(2.0));
    const auto s = evolve(m, 0.5, 4);
    const auto u = displacement(s);
    for (double x : u) CHECK(x == doctest::Approx(4.0));
  }
}

TEST_CASE("energy is conserved by exact evolution") {
  const ChainParams p(1.5, 0.7, 1.0);
  const double L = 100.0;
  auto s = init_state(L, 1024, p, packet(L, 3.0), fields::zero());
  CHECK(s.initial_energy > 0.0);
  for (int chunk = 0; chunk < 100; ++chunk) s = evolve(s, 0.01, 100);
  CHECK(energy(s).drift_rel <= 1e-12);
  CHECK(s.t == doctest::Approx(100.0));
  const auto one = evolve(init_state(L, 1024, p, packet(L, 3.0), fields::zero()), 0.01, 10000);
  CHECK(energy(one).drift_rel <= 1e-12);
}

TEST_CASE("energy of simple states") {
  const ChainParams p(1.5, 0.7, 1.0);
  const double L = 2 * kPi;
  SUBCASE("zero state") {
    const auto e = energy(init_state(L, 32, p, fields::zero(), fields::zero()));
    CHECK(e.kinetic == 0.0);
    CHECK(e.elastic == 0.0);
    CHECK(e.total == 0.0);
    CHECK(e.drift_rel == 0.0);
  }
  SUBCASE("single mode") {
    const double a = 0.8;
    const auto s = init_state(L, 32, p, fields::cosine(2.0, a), fields::zero());
    const auto e = energy(s);
    const double w2 = s.omega[2] * s.omega[2];
    CHECK(e.kinetic == 0.0);
    CHECK(e.elastic == doctest::Approx(0.5 * w2 * a * a * L / 2).epsilon(1e-13));

    const auto w = choose_window(p, 2.0, absolute(1e-14));
    const double ref = oracle::realspace_elastic({L, {0.0, 0.0, a}, {0.0, 0.0, 0.0}}, 1.5, 0.7,
                                                 1.0, w.s_minus, w.s_plus, 32);
    CHECK(std::abs(e.elastic - ref) <= 1e-6 * ref);
  }
  SUBCASE("velocity only") {
    const auto s = init_state(L, 32, p, fields::zero(), fields::constant(3.0));
    CHECK(energy(s).kinetic == doctest::Approx(0.5 * 9.0 * L).epsilon(1e-14));
  }
}

TEST_CASE("spectral and real-space elastic energies agree") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), ud(0.5, 1.8), uN(1.3, 2.5);
  const int M = 64, degree = 8;
  for (int trial = 0; trial < 6; ++trial) {
    const double N = uN(rng), d = ud(rng), L = 10.0;
    oracle::TrigField f{L, std::vector<double>(degree + 1), std::vector<double>(degree + 1)};
    for (int j = 0; j <= degree; ++j) {
      f.a[j] = coef(rng) / (1 + j);
      f.b[j] = j == 0 ? 0.0 : coef(rng) / (1 + j);
    }
    const ChainParams p(N, d, 1.0);
    const EvaluableField u{[&](double x) { return f(x); }, 0.0, 2.0, {}, {}};
    const auto e = energy(init_state(L, M, p, u, fields::zero(), absolute(1e-14)));
    const auto w = union_window(p, 2 * kPi / L, 2 * kPi * degree / L, absolute(1e-14));
    const double ref = oracle::realspace_elastic(f, N, d, 1.0, w.s_minus, w.s_plus, M);
    CAPTURE(N);
    CAPTURE(d);
    CHECK(std::abs(e.elastic - ref) <= 1e-6 * ref);
  }
}

TEST_CASE("equipartition over one period") {
  const ChainParams p(1.5, 0.7, 1.0);
  const auto s0 = init_state(2 * kPi, 32, p, fields::cosine(1.0), fields::zero());
  const double period = 2 * kPi / s0.omega[1];
  const int n = 200;
  double kin = 0.0, ela = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto e = energy(evolve(s0, period / n, i));
    kin += e.kinetic;
    ela += e.elastic;
  }
  CHECK(std::abs(kin - ela) <= 0.01 * ela);
}

TEST_CASE("d'Alembertian residual") {
  const ChainParams p(1.5, 0.7, 1.0);
  const auto s0 = init_state(50.0, 256, p, packet(50.0, 2.0), fields::cosine(0.5, 0.1));
  CHECK(dalembertian_residual(evolve(s0, 0.3, 77)) <= 1e-10);
  CHECK(dalembertian_residual(init_state(50.0, 16, p, fields::zero(), fields::zero())) == 0.0);
}

TEST_CASE("velocity Verlet reference") {
  const ChainParams p(1.5, 0.7, 1.0);
  const double L = 2 * kPi;
  const int M = 32;
  const auto tol = absolute(1e-13);
  const auto window = union_window(p, 1.0, M / 2.0, tol);
  const double limit = verlet_dt_limit(L, M, p, window);
  const double w_max = 2.0 / limit;

  SUBCASE("zero data") {
    const std::vector<double> z(M, 0.0);
    const auto tr = verlet_reference(L, p, z, z, window, 0.1 * limit, 50, 10);
    CHECK(tr.times.size() == 6);
    for (const auto& u : tr.u) CHECK(std::all_of(u.begin(), u.end(), [](double x) { return x == 0.0; }));
    CHECK(tr.energy.back().total == 0.0);
  }
  SUBCASE("single-mode frequency") {
    const auto s = init_state(L, M, p, fields::cosine(2.0), fields::zero(), tol);
    const double dt = 0.05 / w_max;
    const long steps = static_cast<long>(std::ceil(10.5 * 2 * kPi / s.omega[2] / dt));
    const auto tr = verlet_reference(L, p, displacement(s), velocity(s), window, dt, steps);
    std::vector<double> probe;
    for (const auto& u : tr.u) probe.push_back(u[0]);
    const double measured = measure_frequency(tr.times, probe);
    CHECK(std::abs(measured - s.omega[2]) <= 0.005 * s.omega[2]);
  }
  SUBCASE("energy oscillates without secular growth") {
    // Verlet conserves a shadow energy; the measured one oscillates with
    // relative amplitude about (omega dt)^2 / 8 per mode.
    const double Lp = 100.0;
    const int Mp = 1024;
    const auto win = union_window(p, 2 * kPi / Lp, 2 * kPi * (Mp / 2) / Lp, tol);
    const double lim = verlet_dt_limit(Lp, Mp, p, win);
    const auto s = init_state(Lp, Mp, p, packet(Lp, 3.0), fields::zero(), tol);
    const auto tr = verlet_reference(Lp, p, displacement(s), velocity(s), win, 0.05 * lim,
                                     10000, 50);
    auto band = [&](std::size_t from, std::size_t to) {
      double lo = tr.energy[from].total, hi = lo;
      for (std::size_t i = from; i < to; ++i) {
        lo = std::min(lo, tr.energy[i].total);
        hi = std::max(hi, tr.energy[i].total);
      }
      return std::pair{lo, hi};
    };
    const std::size_t n = tr.energy.size();
    const auto [lo, hi] = band(0, n);
    const double e0 = tr.energy.front().total;
    CHECK(0.5 * (hi - lo) / e0 <= 1e-4);
    // Second half does not wander further than the first.
    const auto [lo1, hi1] = band(0, n / 2);
    const auto [lo2, hi2] = band(n / 2, n);
    CHECK(hi2 - lo2 <= 1.5 * (hi1 - lo1));
  }
  SUBCASE("unstable step") {
    const std::vector<double> z(M, 0.0);
    CHECK(code_of([&] { verlet_reference(L, p, z, z, window, limit, 10); }) == Errc::unstable_dt);
    CHECK(code_of([&] { verlet_reference(L, p, z, z, window, -0.1, 10); }) == Errc::bad_range);
  }
}

TEST_CASE("measure_frequency") {
  std::vector<double> t, v;
  for (int i = 0; i <= 4000; ++i) {
    t.push_back(i * 0.005);
    v.push_back(std::sin(3.0 * t.back() + 0.2));
  }
  CHECK(measure_frequency(t, v) == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(code_of([] { measure_frequency({0.0, 1.0}, {1.0, 2.0}); }) == Errc::too_few_samples);
  CHECK(code_of([] { measure_frequency({0.0, 1.0}, {1.0}); }) == Errc::invalid_grid);
}
