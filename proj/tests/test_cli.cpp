#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "sschain/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = sschain::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sschain_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("dispersion") {
  SUBCASE("two samples") {
    const auto r = run({"dispersion", "--N", "1.5", "--delta", "0.7", "--samples", "2",
                        "--kh-min", "0", "--kh-max", "1"});
    REQUIRE(r.code == 0);
    std::string header;
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "kh,omega_sq,err_bound");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == 0.0);
    CHECK(rows[1][0] == 1.0);
    CHECK(r.out.find("\r") == std::string::npos);
  }
  SUBCASE("figure curve") {
    const auto r = run({"dispersion", "--N", "1.5", "--delta", "0.7", "--kh-min", "0",
                        "--kh-max", "30", "--samples", "4096"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    CHECK(rows.size() == 4096);
    // --tol defaults to 1e-10 in both the absolute and the relative sense.
    for (const auto& row : rows) CHECK(row[2] <= 1.1e-10 * std::max(1.0, row[1]));
  }
  SUBCASE("out of range delta lists the admissible interval") {
    const auto r = run({"dispersion", "--N", "1.5", "--delta", "2.5", "--kh-max", "1"});
    CHECK(r.code == sschain::exit_validation);
    CHECK(r.err.find("(0,2)") != std::string::npos);
    CHECK(r.out.empty());
  }
  SUBCASE("every violation is listed") {
    const auto r = run({"dispersion", "--N", "0.5", "--delta", "2.5", "--h", "-1", "--kh-max", "1"});
    CHECK(r.code == sschain::exit_validation);
    CHECK(r.err.find("N must exceed 1") != std::string::npos);
    CHECK(r.err.find("(0,2)") != std::string::npos);
    CHECK(r.err.find("h") != std::string::npos);
  }
  SUBCASE("budget exhaustion") {
    const auto r = run({"dispersion", "--N", "1.0001", "--delta", "1.9999", "--kh-min", "1",
                        "--kh-max", "2", "--samples", "2"});
    CHECK(r.code == sschain::exit_budget);
  }
  SUBCASE("log spacing needs a positive lower end") {
    const auto r = run({"dispersion", "--N", "1.5", "--delta", "0.7", "--kh-max", "1",
                        "--spacing", "log"});
    CHECK(r.code == sschain::exit_validation);
  }
}

TEST_CASE("output files are byte-identical across runs and thread counts") {
  TempDir dir;
  const auto a = dir.path / "a.csv", b = dir.path / "b.csv";
  std::vector<std::string> base{"dispersion", "--N", "1.5", "--delta", "0.5", "--kh-min",
                                "0.01", "--kh-max", "100", "--spacing", "log", "--samples", "999"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--threads", "1", "--out", a.string()});
  args_b.insert(args_b.end(), {"--threads", "3", "--out", b.string()});
  REQUIRE(run(args_a).code == 0);
  REQUIRE(run(args_b).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(fs::exists(dir.path / "a.csv.tmp"));
}

TEST_CASE("config file supplies defaults and flags override it") {
  TempDir dir;
  const auto cfg = dir.path / "cfg.json";
  std::ofstream(cfg) << R"({"N": 1.5, "delta": 0.7, "kh-max": 1, "samples": 3, "omega-max": 9})";
  const auto a = run({"--config", cfg.string(), "dispersion"});
  REQUIRE(a.code == 0);
  CHECK(parse_csv(a.out).size() == 3);
  const auto b = run({"--config", cfg.string(), "dispersion", "--samples", "5"});
  REQUIRE(b.code == 0);
  CHECK(parse_csv(b.out).size() == 5);
  const auto c = run({"dispersion", "--N", "1.5", "--delta", "0.7", "--kh-max", "1", "--samples", "3"});
  CHECK(c.out == a.out);

  std::ofstream(dir.path / "bad.json") << "{not json";
  CHECK(run({"--config", (dir.path / "bad.json").string(), "dispersion"}).code ==
        sschain::exit_validation);
  CHECK(run({"--config", (dir.path / "missing.json").string(), "dispersion"}).code ==
        sschain::exit_validation);
}

TEST_CASE("fractal-dim") {
  SUBCASE("self test") {
    const auto r = run({"fractal-dim", "--selftest"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(std::abs(j["dimension"].get<double>() - 1.0) <= 0.05);
  }
  SUBCASE("fractal and smooth curves") {
    for (auto [delta, tol] : {std::pair{"0.5", 0.15}, std::pair{"1.2", 0.1}}) {
      const auto r = run({"fractal-dim", "--N", "1.5", "--delta", delta, "--kh-min", "0.01",
                          "--kh-max", "100", "--spacing", "log", "--samples", "65536", "--tol",
                          "1e-6"});
      REQUIRE(r.code == 0);
      const auto j = json::parse(r.out);
      const double predicted = std::max(1.0, 2.0 - std::stod(delta));
      CAPTURE(delta);
      CHECK(j["predicted"].get<double>() == doctest::Approx(2.0 - std::stod(delta)));
      CHECK(std::abs(j["dimension"].get<double>() - predicted) <= tol);
      CHECK(j["scales"].size() == j["counts"].size());
      CHECK(j.contains("r2"));
    }
  }
  SUBCASE("keys are sorted") {
    const auto r = run({"fractal-dim", "--selftest"});
    std::vector<std::size_t> pos;
    for (const char* k : {"\"counts\"", "\"dimension\"", "\"out_of_range\"", "\"predicted\"",
                          "\"r2\"", "\"scales\""}) {
      pos.push_back(r.out.find(k));
    }
    for (std::size_t i = 1; i < pos.size(); ++i) CHECK(pos[i - 1] < pos[i]);
  }
}

TEST_CASE("density") {
  for (const char* delta : {"0.5", "1", "1.5"}) {
    const auto r = run({"density", "--delta", delta, "--epsilon", "1e-3", "--omega-min", "0",
                        "--omega-max", "2", "--samples", "101"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 101);
    CHECK(rows[0][0] == 0.0);
    CHECK(rows[0][1] == 0.0);
    const double expected = 2.0 / std::stod(delta) - 1.0;
    for (std::size_t i = 2; i < rows.size(); ++i) {
      const double slope = std::log(rows[i][1] / rows[1][1]) / std::log(rows[i][0] / rows[1][0]);
      CHECK(std::abs(slope - expected) <= 1e-10);
    }
  }
  CHECK(run({"density", "--delta", "2", "--epsilon", "1e-3", "--omega-max", "1"}).code ==
        sschain::exit_validation);
  CHECK(run({"density", "--delta", "0.5", "--epsilon", "0.5", "--omega-max", "1"}).code ==
        sschain::exit_validation);
}

TEST_CASE("simulate") {
  TempDir dir;
  SUBCASE("zero packet") {
    const auto out = dir.path / "zero";
    const auto r = run({"simulate", "--N", "1.5", "--delta", "0.7", "--L", "20", "--M", "64",
                        "--packet-amplitude", "0", "--dt", "0.1", "--steps", "20", "--snap-every",
                        "10", "--out-dir", out.string()});
    REQUIRE(r.code == 0);
    for (const char* name : {"snap_00000000.csv", "snap_00000010.csv", "snap_00000020.csv"}) {
      const auto rows = parse_csv(slurp(out / name));
      REQUIRE(rows.size() == 64);
      for (const auto& row : rows) {
        CHECK(row[1] == 0.0);
        CHECK(row[2] == 0.0);
      }
    }
    const auto log = json::parse(slurp(out / "energy.json"));
    CHECK(log["max_drift_rel"].get<double>() == 0.0);
  }
  SUBCASE("Gaussian packet conserves energy") {
    const auto out = dir.path / "gauss";
    const auto r = run({"simulate", "--N", "1.5", "--delta", "0.7", "--L", "100", "--M", "1024",
                        "--packet-width", "3", "--dt", "0.01", "--steps", "10000", "--snap-every",
                        "2500", "--out-dir", out.string()});
    REQUIRE(r.code == 0);
    const auto log = json::parse(slurp(out / "energy.json"));
    CHECK(log["records"].size() == 5);
    CHECK(log["max_drift_rel"].get<double>() <= 1e-12);
  }
  SUBCASE("Verlet frequency matches the exact mode frequency") {
    const auto out = dir.path / "verlet";
    const auto r = run({"simulate", "--N", "1.5", "--delta", "0.7", "--L", "6.283185307179586",
                        "--M", "32", "--mode", "1", "--integrator", "verlet", "--dt", "0.005",
                        "--steps", "4000", "--snap-every", "8", "--out-dir", out.string()});
    REQUIRE(r.code == 0);
    const auto log = json::parse(slurp(out / "energy.json"));
    const double exact = log["mode_frequency"].get<double>();
    const double measured = log["measured_frequency"].get<double>();
    CHECK(std::abs(measured - exact) <= 0.005 * exact);
  }
  SUBCASE("unstable Verlet step") {
    const auto r = run({"simulate", "--N", "1.5", "--delta", "0.7", "--L", "10", "--M", "64",
                        "--integrator", "verlet", "--dt", "5", "--steps", "10", "--out-dir",
                        (dir.path / "unstable").string()});
    CHECK(r.code == sschain::exit_stability);
    CHECK_FALSE(fs::exists(dir.path / "unstable" / "energy.json"));
  }
  SUBCASE("validation happens before any output") {
    const auto r = run({"simulate", "--N", "1.5", "--delta", "0.7", "--L", "10", "--M", "100",
                        "--dt", "0.1", "--steps", "10", "--out-dir", (dir.path / "bad").string()});
    CHECK(r.code == sschain::exit_validation);
    CHECK_FALSE(fs::exists(dir.path / "bad"));
  }
}

TEST_CASE("continuum") {
  SUBCASE("Gaussian") {
    const auto r = run({"continuum", "--delta", "0.7", "--epsilon", "1e-3", "--x", "0"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["rel_diff"].get<double>() <= 0.01);
    CHECK(j["longwave_coeff"].get<double>() == doctest::Approx(j["C"].get<double>() / 1e-3));
  }
  SUBCASE("constant") {
    const auto r = run({"continuum", "--delta", "0.7", "--epsilon", "1e-3", "--field", "constant"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["series_value"].get<double>() == 0.0);
    CHECK(j["continuum_value"].get<double>() == 0.0);
  }
  SUBCASE("C at delta = 1") {
    const auto r = run({"continuum", "--delta", "1", "--epsilon", "1e-3", "--field", "lorentzian"});
    REQUIRE(r.code == 0);
    CHECK(std::abs(json::parse(r.out)["C"].get<double>() - std::numbers::pi) <= 1e-6);
  }
}

TEST_CASE("command-line tool") {
  const char* tool = std::getenv("SSCHAIN_TOOL");
  REQUIRE(tool != nullptr);
  TempDir dir;
  const auto q = [](const std::string& s) { return "'" + s + "'"; };
  const std::string quiet = " > " + q((dir.path / "o").string()) + " 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((q(tool) + " " + args + quiet).c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("dispersion --N 1.5 --delta 0.7 --kh-max 1 --samples 3") == 0);
  CHECK(status("dispersion --N 1.5 --delta 2.5 --kh-max 1") == 2);
  CHECK(status("dispersion --bogus") == 2);
  CHECK(status("simulate --N 1.5 --delta 0.7 --L 10 --M 64 --integrator verlet --dt 5 --steps 3 --out-dir " +
               q((dir.path / "s").string())) == 4);
}
