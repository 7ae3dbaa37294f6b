#include "sschain/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "sschain/continuum.hpp"
#include "sschain/core.hpp"
#include "sschain/fractal_analysis.hpp"
#include "sschain/selfsim_ops.hpp"
#include "sschain/spectral_sim.hpp"
#include "sschain/wm_dispersion.hpp"

namespace sschain {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Writes through a temporary file in the destination directory so readers
// never see a partial file.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct ValidationFailure {
  std::vector<std::string> violations;
};

void require_ok(const ValidationReport& r) {
  if (!r.ok()) throw ValidationFailure{r.violations};
}

ChainParams chain(double N, double delta, double h) {
  const ChainParams p = ChainParams::unchecked(N, delta, h);
  require_ok(validate_physical(p));
  return p;
}

ToleranceBudget budget(double tol) {
  ToleranceBudget b;
  b.rel_tol = tol;
  b.abs_tol = tol;
  b.validate();
  return b;
}

struct Options {
  std::string out;
  double N = kUnset, delta = kUnset, h = 1.0;
  double kh_min = 0.0, kh_max = kUnset;
  int samples = 4096;
  std::string spacing = "linear";
  double tol = 1e-10;
  double frac_tol = 1e-8;
  int threads = 0;

  int scales = 12;
  bool selftest = false;

  double epsilon = kUnset;
  double omega_min = 0.0, omega_max = kUnset;

  double L = kUnset;
  int M = 1024;
  double packet_center = kUnset, packet_width = 1.0, packet_amplitude = 1.0;
  int mode = 0;
  double dt = kUnset;
  long steps = 0, snap_every = 0;
  std::string integrator = "exact";
  std::string out_dir = ".";

  std::string field = "gaussian";
  double x = 0.0;
};

DispersionCurve curve_from(const Options& o, const ToleranceBudget& tol) {
  const ChainParams p = chain(o.N, o.delta, o.h);
  const Spacing spacing = o.spacing == "log" ? Spacing::log : Spacing::linear;
  return sample_curve(p, o.kh_min, o.kh_max, o.samples, spacing, tol, o.threads);
}

void cmd_dispersion(const Options& o, std::ostream& out) {
  const DispersionCurve curve = curve_from(o, budget(o.tol));
  std::string csv = "kh,omega_sq,err_bound\n";
  for (const DispersionSample& s : curve.samples) {
    csv += fmt(s.kh) + "," + fmt(s.omega_sq) + "," + fmt(s.err_bound) + "\n";
  }
  emit(o.out, csv, out);
}

void cmd_fractal_dim(const Options& o, std::ostream& out) {
  FractalEstimate est;
  double predicted = 1.0;
  if (o.selftest) {
    const std::size_t n = std::size_t{1} << 14;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    est = box_count_dimension(x, x, o.scales, true);
  } else {
    const DispersionCurve curve = curve_from(o, budget(o.frac_tol));
    est = box_count_dimension(curve, o.scales, true);
    predicted = 2.0 - o.delta;
  }
  json j;
  j["dimension"] = est.dimension;
  j["r2"] = est.r2;
  j["predicted"] = predicted;
  j["scales"] = est.scales_used;
  j["counts"] = est.counts;
  j["out_of_range"] = est.out_of_range;
  emit(o.out, dump(j), out);
}

void cmd_density(const Options& o, std::ostream& out) {
  const ContinuumParams cp(o.epsilon, o.delta, o.h);
  if (!(o.omega_min >= 0.0 && o.omega_max > o.omega_min) || o.samples < 2) {
    throw Error(Errc::bad_range, "need 0 <= omega-min < omega-max and samples >= 2");
  }
  const double C = constant_C(cp.delta(), budget(o.tol)).value;
  std::string csv = "omega,rho\n";
  for (int i = 0; i < o.samples; ++i) {
    double w = o.omega_min + (o.omega_max - o.omega_min) * (static_cast<double>(i) / (o.samples - 1));
    if (i == o.samples - 1) w = o.omega_max;
    csv += fmt(w) + "," + fmt(oscillator_density(cp, w, C)) + "\n";
  }
  emit(o.out, csv, out);
}

// Window covering every nonzero mode on the grid at the given tolerance.
TruncationWindow grid_window(const ChainParams& p, double L, int M,
                             const ToleranceBudget& tol) {
  const double k_min = 2.0 * std::numbers::pi / L;
  const TruncationWindow lo = choose_window(p, k_min * p.h(), tol);
  const TruncationWindow hi = choose_window(p, k_min * (M / 2) * p.h(), tol);
  return {std::min(lo.s_minus, hi.s_minus), std::max(lo.s_plus, hi.s_plus), 0.0, 0.0};
}

json energy_record(long step, double t, const EnergyReport& e) {
  return {{"step", step}, {"t", t}, {"kinetic", e.kinetic}, {"elastic", e.elastic},
          {"total", e.total}, {"drift_rel", e.drift_rel}};
}

std::string snapshot_csv(double L, const std::vector<double>& u, const std::vector<double>& v) {
  const int M = static_cast<int>(u.size());
  std::string csv = "x,u,v\n";
  for (int n = 0; n < M; ++n) {
    csv += fmt(L * n / M) + "," + fmt(u[n]) + "," + fmt(v[n]) + "\n";
  }
  return csv;
}

void cmd_simulate(const Options& o, std::ostream& out) {
  const ChainParams p = chain(o.N, o.delta, o.h);
  std::vector<std::string> bad;
  if (!(o.L > 0.0)) bad.emplace_back("L must be positive");
  if (o.M < 8 || (o.M & (o.M - 1)) != 0) bad.emplace_back("M must be a power of two >= 8");
  if (!(o.dt > 0.0)) bad.emplace_back("dt must be positive");
  if (o.steps < 0) bad.emplace_back("steps must be non-negative");
  if (o.integrator != "exact" && o.integrator != "verlet") bad.emplace_back("unknown integrator");
  if (!bad.empty()) throw ValidationFailure{bad};
  const long every = o.snap_every > 0 ? o.snap_every : std::max(o.steps, 1L);
  const ToleranceBudget tol = budget(o.tol);

  const double L = o.L;
  const double center = std::isnan(o.packet_center) ? 0.5 * L : o.packet_center;
  EvaluableField u0 = o.mode > 0
                          ? fields::cosine(2.0 * std::numbers::pi * o.mode / L, o.packet_amplitude)
                          : fields::gaussian(center, o.packet_width);
  if (o.mode == 0) {
    const double a = o.packet_amplitude;
    auto g = u0.eval;
    u0.eval = [g, a](double x) { return a * g(x); };
  }
  std::vector<double> us(static_cast<std::size_t>(o.M)), vs(us.size(), 0.0);
  for (int n = 0; n < o.M; ++n) us[n] = u0(L * n / o.M);

  std::vector<std::pair<std::string, std::string>> files;
  json log;
  log["integrator"] = o.integrator;
  json records = json::array();
  std::vector<double> times, probe;
  double max_drift = 0.0;

  auto add_snapshot = [&](long step, double t, const std::vector<double>& u,
                          const std::vector<double>& v, const EnergyReport& e) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%08ld.csv", step);
    files.emplace_back(name, snapshot_csv(L, u, v));
    records.push_back(energy_record(step, t, e));
    max_drift = std::max(max_drift, e.drift_rel);
    times.push_back(t);
    probe.push_back(u[0]);
  };

  if (o.integrator == "exact") {
    const SpectralState s0 = init_state(L, p, us, vs, tol);
    for (long step = 0;; step = std::min(step + every, o.steps)) {
      const SpectralState s = evolve(s0, o.dt, step);
      add_snapshot(step, s.t, displacement(s), velocity(s), energy(s));
      if (step == o.steps) break;
    }
    log["mode_frequency"] = o.mode > 0 ? s0.omega[static_cast<std::size_t>(o.mode)] : 0.0;
  } else {
    const TruncationWindow w = grid_window(p, L, o.M, tol);
    const Trajectory traj = verlet_reference(L, p, us, vs, w, o.dt, o.steps, every);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const long step = std::lround(traj.times[i] / o.dt);
      add_snapshot(step, traj.times[i], traj.u[i], traj.v[i], traj.energy[i]);
    }
    log["window"] = {w.s_minus, w.s_plus};
    if (o.mode > 0) {
      const SpectralState s0 = init_state(L, p, us, vs, tol);
      log["mode_frequency"] = s0.omega[static_cast<std::size_t>(o.mode)];
    }
  }
  if (o.mode > 0 && times.size() >= 4) {
    try {
      log["measured_frequency"] = measure_frequency(times, probe);
    } catch (const Error&) {
      log["measured_frequency"] = nullptr;
    }
  }
  log["records"] = records;
  log["max_drift_rel"] = max_drift;

  fs::create_directories(o.out_dir);
  for (const auto& [name, content] : files) write_atomic(fs::path(o.out_dir) / name, content);
  write_atomic(fs::path(o.out_dir) / "energy.json", dump(log));
  out << "wrote " << files.size() << " snapshots to " << o.out_dir << "\n";
}

void cmd_continuum(const Options& o, std::ostream& out) {
  const ContinuumParams cp(o.epsilon, o.delta, o.h);
  EvaluableField u;
  if (o.field == "gaussian") {
    u = fields::gaussian();
  } else if (o.field == "lorentzian") {
    u = fields::lorentzian();
  } else {
    u = fields::constant(1.0);
  }
  const ToleranceBudget tol = budget(o.tol);
  const ChainParams p(1.0 + cp.epsilon(), cp.delta(), cp.h());
  const double series = selfsim_laplacian(u, p, o.x, tol).value;
  const double cont = continuum_laplacian(u, cp, o.x, tol).value;
  const double C = constant_C(cp.delta(), tol).value;
  const double scale = std::max(std::abs(series), std::abs(cont));
  json j;
  j["series_value"] = series;
  j["continuum_value"] = cont;
  j["rel_diff"] = scale > 0.0 ? std::abs(series - cont) / scale : 0.0;
  j["C"] = C;
  j["longwave_coeff"] = C / cp.epsilon();
  emit(o.out, dump(j), out);
}

int exit_for(Errc code) {
  switch (code) {
    case Errc::budget_exhausted:
      return exit_budget;
    case Errc::unstable_dt:
      return exit_stability;
    case Errc::overflow:
      return exit_other;
    default:
      return exit_validation;
  }
}

void add_chain_flags(CLI::App* c, Options& o) {
  c->add_option("--N", o.N, "scale factor N > 1");
  c->add_option("--delta", o.delta, "exponent delta in (0,2)");
  c->add_option("--h", o.h, "length scale h")->capture_default_str();
}

void add_curve_flags(CLI::App* c, Options& o) {
  add_chain_flags(c, o);
  c->add_option("--kh-min", o.kh_min)->capture_default_str();
  c->add_option("--kh-max", o.kh_max);
  c->add_option("--samples", o.samples)->capture_default_str();
  c->add_option("--spacing", o.spacing)->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
  c->add_option("--threads", o.threads, "worker threads (0: default)");
}

// Expands `--config file.json` into flags for the chosen subcommand. Keys
// that the subcommand does not define are ignored; explicit flags come
// later on the command line and therefore win.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::vector<std::string> rest;
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return rest;

  std::ifstream f(*config);
  if (!f) throw ValidationFailure{{"cannot read config " + *config}};
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationFailure{{std::string("config is not valid JSON: ") + e.what()}};
  }
  if (!doc.is_object()) throw ValidationFailure{{"config must be a JSON object"}};

  auto sub_it = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) {
    return !a.empty() && a[0] != '-' && app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_it == rest.end()) return rest;
  CLI::App* sub = app.get_subcommand(*sub_it);

  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_number_float()) {
      injected.push_back(flag);
      injected.push_back(fmt(value.get<double>()));
    } else if (value.is_number()) {
      injected.push_back(flag);
      injected.push_back(value.dump());
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else {
      throw ValidationFailure{{"config key " + key + " must be a scalar"}};
    }
  }
  rest.insert(sub_it + 1, injected.begin(), injected.end());
  return rest;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Self-similar chain toolkit"};
  app.name("sschain");
  // -h is taken by the length scale.
  app.set_help_flag("--help", "print help");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_placeholder;
  app.add_option("--config", config_placeholder, "JSON file with default flag values");
  app.add_option("--out", o.out, "output file (default: stdout)");

  auto* disp = app.add_subcommand("dispersion", "sample omega^2(kh) to CSV");
  disp->set_help_flag("--help", "print help");
  add_curve_flags(disp, o);
  disp->add_option("--tol", o.tol)->capture_default_str();
  disp->add_option("--out", o.out);

  auto* frac = app.add_subcommand("fractal-dim", "box-counting dimension of a dispersion curve");
  frac->set_help_flag("--help", "print help");
  add_curve_flags(frac, o);
  frac->add_option("--tol", o.frac_tol)->capture_default_str();
  frac->add_option("--scales", o.scales)->capture_default_str();
  frac->add_flag("--selftest", o.selftest, "measure a straight line instead");
  frac->add_option("--out", o.out);

  auto* dens = app.add_subcommand("density", "oscillator density of the continuum limit");
  dens->set_help_flag("--help", "print help");
  dens->add_option("--delta", o.delta);
  dens->add_option("--h", o.h)->capture_default_str();
  dens->add_option("--epsilon", o.epsilon);
  dens->add_option("--omega-min", o.omega_min)->capture_default_str();
  dens->add_option("--omega-max", o.omega_max);
  dens->add_option("--samples", o.samples)->capture_default_str();
  dens->add_option("--tol", o.tol)->capture_default_str();
  dens->add_option("--out", o.out);

  auto* sim = app.add_subcommand("simulate", "wave dynamics on a periodic grid");
  sim->set_help_flag("--help", "print help");
  add_chain_flags(sim, o);
  sim->add_option("--L", o.L);
  sim->add_option("--M", o.M)->capture_default_str();
  sim->add_option("--packet-center", o.packet_center, "default: L/2");
  sim->add_option("--packet-width", o.packet_width)->capture_default_str();
  sim->add_option("--packet-amplitude", o.packet_amplitude)->capture_default_str();
  sim->add_option("--mode", o.mode, "start from cos(2 pi mode x / L) instead of a packet");
  sim->add_option("--dt", o.dt);
  sim->add_option("--steps", o.steps)->capture_default_str();
  sim->add_option("--snap-every", o.snap_every, "default: only first and last");
  sim->add_option("--integrator", o.integrator)
      ->check(CLI::IsMember({"exact", "verlet"}))
      ->capture_default_str();
  sim->add_option("--tol", o.tol)->capture_default_str();
  sim->add_option("--out-dir", o.out_dir)->capture_default_str();

  auto* cont = app.add_subcommand("continuum", "compare the series and continuum Laplacians");
  cont->set_help_flag("--help", "print help");
  cont->add_option("--delta", o.delta);
  cont->add_option("--h", o.h)->capture_default_str();
  cont->add_option("--epsilon", o.epsilon);
  cont->add_option("--field", o.field)
      ->check(CLI::IsMember({"gaussian", "lorentzian", "constant"}))
      ->capture_default_str();
  cont->add_option("--x", o.x)->capture_default_str();
  cont->add_option("--tol", o.tol)->capture_default_str();
  cont->add_option("--out", o.out);

  try {
    std::vector<std::string> full = expand_config(args, app);
    std::vector<const char*> argv{"sschain"};
    for (const auto& a : full) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? exit_ok : exit_validation;
    }
    if (disp->parsed()) cmd_dispersion(o, out);
    if (frac->parsed()) cmd_fractal_dim(o, out);
    if (dens->parsed()) cmd_density(o, out);
    if (sim->parsed()) cmd_simulate(o, out);
    if (cont->parsed()) cmd_continuum(o, out);
    return exit_ok;
  } catch (const ValidationFailure& v) {
    err << "invalid parameters:\n";
    for (const auto& m : v.violations) err << "  " << m << "\n";
    return exit_validation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_other;
  }
}

}  // namespace sschain
