#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "vortexlab/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vortex;

namespace {

const fs::path kWork = fs::current_path() / "cli_work";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VORTEXLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_file(const std::string& name, const json& doc) {
  fs::create_directories(kWork);
  const fs::path file = kWork / (name + ".json");
  std::ofstream(file) << doc.dump(2);
  return file.string();
}

std::string out_dir(const std::string& name) { return (kWork / name).string(); }

json read_json(const fs::path& file) {
  std::ifstream in(file);
  return json::parse(in);
}

}  // namespace

TEST_CASE("configuration problems exit with status 2") {
  CHECK(run_cli("converge --config " + config_file("typo", {{"gird", 64}})) == 2);
  CHECK(run_cli("solve-spde --config " + (kWork / "missing.json").string()) == 2);
  CHECK(run_cli("solve-spde --config " + config_file("odd_grid", {{"grid", 100}})) == 2);
  CHECK(run_cli("solve-spde") == 2);
  CHECK(run_cli("teleport --config x.json") == 2);
  CHECK(run_cli("kernel-table --config " + config_file("ok", json::object()) + " --threads 0") == 2);
}

TEST_CASE("numerical failure exits with status 3") {
  const json doc = {{"grid", 32}, {"dt", 0.01}, {"horizon", 0.1}, {"output_times", {0.0, 0.1}},
                    {"particles", {{"dt", 0.01}}}, {"spde", {{"biot_savart_scale", 1e6}}}};
  CHECK(run_cli("solve-spde --config " + config_file("cfl", doc) + " --out-dir " + out_dir("cfl")) == 3);
}

TEST_CASE("kernel-table with four modes matches the closed form") {
  const json doc = {{"kernel_table", {{"points", 16}, {"mode_cutoff", 1}}}};
  const std::string dir = out_dir("kernel_table");
  REQUIRE(run_cli("kernel-table --config " + config_file("kt", doc) + " --out-dir " + dir) == 0);
  std::ifstream in(fs::path(dir) / "kernel_table.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,x2,G,K1,K2");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    double x1, x2, g, k1, k2;
    char c;
    ss >> x1 >> c >> x2 >> c >> g >> c >> k1 >> c >> k2;
    CHECK(g == doctest::Approx(2 * std::cos(x1) + 2 * std::cos(x2)));
    CHECK(std::abs(k1 + 2 * std::sin(x2)) < 1e-13);
    CHECK(std::abs(k2 - 2 * std::sin(x1)) < 1e-13);
    ++rows;
  }
  CHECK(rows == 256);
  CHECK(fs::exists(fs::path(dir) / "manifest.json"));
}

TEST_CASE("solve-spde with heat only decays each mode exactly") {
  const json doc = {{"grid", 32},
                    {"horizon", 0.2},
                    {"output_times", {0.0, 0.2}},
                    {"noise", {{"common", false}}},
                    {"spde", {{"nonlinear", false}}}};
  const std::string dir = out_dir("heat");
  REQUIRE(run_cli("solve-spde --config " + config_file("heat", doc) + " --out-dir " + dir) == 0);
  const auto v0 = spectral::to_spectral(spectral::load_snapshot((fs::path(dir) / "fields/v_000.bin").string()).values);
  const auto v1 = spectral::to_spectral(spectral::load_snapshot((fs::path(dir) / "fields/v_001.bin").string()).values);
  for (auto [m1, m2] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{-1, 0}}) {
    const auto expect = v0.mode(m1, m2) * std::exp(-0.2 * (m1 * m1 + m2 * m2));
    CHECK(std::abs(v1.mode(m1, m2) - expect) <= 1e-6 * std::abs(expect));
  }
  CHECK(fs::exists(fs::path(dir) / "fields/diagnostics.csv"));
  const json m = read_json(fs::path(dir) / "manifest.json");
  CHECK(m.at("status") == "ok");
  CHECK(m.at("artifacts").contains("fields/v_001.bin"));
}

TEST_CASE("simulate-particles writes trajectories and diagnostics") {
  const json doc = {{"grid", 32},
                    {"horizon", 0.02},
                    {"output_times", {0.0, 0.01, 0.02}},
                    {"particles", {{"counts", {50}}}}};
  const std::string dir = out_dir("particles");
  REQUIRE(run_cli("simulate-particles --config " + config_file("sim", doc) + " --out-dir " + dir) == 0);
  CHECK(fs::exists(fs::path(dir) / "particles/trajectory.csv"));
  CHECK(fs::exists(fs::path(dir) / "particles/diagnostics.csv"));
  CHECK(fs::exists(fs::path(dir) / "particles/snapshot_002.bin"));
}

TEST_CASE("a single particle count refuses the rate fit but keeps the metrics") {
  const json doc = {{"grid", 32},
                    {"horizon", 0.02},
                    {"output_times", {0.0, 0.02}},
                    {"particles", {{"counts", {32}}, {"replicas", 2}}}};
  const std::string dir = out_dir("one_count");
  REQUIRE(run_cli("converge --config " + config_file("one", doc) + " --out-dir " + dir) == 0);
  const json rates = read_json(fs::path(dir) / "rates.json");
  CHECK(rates.at("fit").is_null());
  CHECK(rates.contains("fit_refused"));
  CHECK(fs::file_size(fs::path(dir) / "metrics.csv") > 0);
}

TEST_CASE("seed override is recorded and changes the run") {
  const json doc = {{"grid", 32}, {"horizon", 0.01}, {"output_times", {0.0, 0.01}}};
  const std::string cfg = config_file("seeded", doc);
  REQUIRE(run_cli("solve-spde --config " + cfg + " --out-dir " + out_dir("seed_a")) == 0);
  REQUIRE(run_cli("solve-spde --config " + cfg + " --out-dir " + out_dir("seed_b") + " --seed-override 12345") == 0);
  const json a = read_json(fs::path(out_dir("seed_a")) / "manifest.json");
  const json b = read_json(fs::path(out_dir("seed_b")) / "manifest.json");
  CHECK(b.at("config").at("master_seed") == 12345);
  CHECK(a.at("fingerprints") != b.at("fingerprints"));
  // Rerunning from the manifest reproduces every artifact.
  REQUIRE(run_cli("solve-spde --config " + (fs::path(out_dir("seed_b")) / "manifest.json").string() + " --out-dir " +
                  out_dir("seed_c")) == 0);
  const json c = read_json(fs::path(out_dir("seed_c")) / "manifest.json");
  CHECK(c.at("artifacts") == b.at("artifacts"));
}
