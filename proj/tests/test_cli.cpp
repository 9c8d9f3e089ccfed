#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distill/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_binary() {
  const char* p = std::getenv("DISTILL_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args, const fs::path& stderr_file = {}) {
  std::string cmd = cli_binary() + " " + args + " > /dev/null";
  cmd += stderr_file.empty() ? " 2>/dev/null" : " 2> " + stderr_file.string();
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "distill_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// CSV rows as string fields, skipping '#' comment lines and the header.
std::vector<std::vector<std::string>> csv_rows(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("verify subcommand passes on defaults") {
  REQUIRE(run("verify") == 0);
}

TEST_CASE("1-photon curve dominates the undistilled curve") {
  fs::path base = temp_dir("curve_base"), one = temp_dir("curve_one");
  REQUIRE(run("curve --scheme undistilled --D 16 --points 5 --out " +
              base.string()) == 0);
  REQUIRE(run("curve --scheme 1-photon --R 0.05 --D 16 --points 5 --out " +
              one.string()) == 0);
  auto rb = csv_rows(base / "curve.csv");
  auto ro = csv_rows(one / "curve.csv");
  REQUIRE(rb.size() == 5);
  REQUIRE(ro.size() == 5);
  for (size_t i = 0; i < rb.size(); ++i)
    REQUIRE(std::stod(ro[i][5]) > std::stod(rb[i][5]));  // E_N column
}

TEST_CASE("wigner grid of the subtracted state dips to -1/pi") {
  fs::path out = temp_dir("wigner");
  REQUIRE(run("wigner --scheme 1-photon --db 3.2 --D 20 --x-min -2 --x-max 2 "
              "--p-min -2 --p-max 2 --nx 21 --np 21 --out " +
              out.string()) == 0);
  double min_w = 1e9;
  for (const auto& row : csv_rows(out / "wigner.csv"))
    for (size_t j = 1; j < row.size(); ++j)
      min_w = std::min(min_w, std::stod(row[j]));
  REQUIRE(min_w == Catch::Approx(-1.0 / M_PI).margin(1e-6));
}

TEST_CASE("unknown config keys are rejected with a machine-readable error") {
  fs::path dir = temp_dir("badkey");
  fs::path cfg = dir / "cfg.json", err = dir / "err.json";
  distill::atomic_write_file(cfg, "{\"R\": 0.05, \"bogus_key\": 1}");
  REQUIRE(run("curve --config " + cfg.string(), err) == 1);
  json e = json::parse(distill::read_file(err));
  REQUIRE(e["kind"] == "config");
  REQUIRE(e["error"].get<std::string>().find("bogus_key") != std::string::npos);
}

TEST_CASE("invalid parameter values exit with code 1") {
  REQUIRE(run("curve --eta-out 1.5") == 1);
  REQUIRE(run("curve --scheme nonsense") == 1);
  REQUIRE(run("extrapolate --B 5") == 1);
}

TEST_CASE("insufficient truncation exits with code 2") {
  fs::path dir = temp_dir("trunc");
  fs::path err = dir / "err.json";
  REQUIRE(run("tomo-sim --db 3.2 --D 6 --N 100 --out " + dir.string(), err) ==
          2);
  json e = json::parse(distill::read_file(err));
  REQUIRE(e["kind"] == "compute");
}

TEST_CASE("fixed seed gives byte-identical artifacts") {
  fs::path a = temp_dir("det_a"), b = temp_dir("det_b");
  std::string args = "tomo-sim --scheme 1-photon --db 3.2 --D 10 --N 6000 "
                     "--seed 77 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  for (const char* f :
       {"tomo_sim.json", "tomo_minus.csv", "tomo_plus.csv", "tomo_minus.json"})
    REQUIRE(distill::read_file(a / f) == distill::read_file(b / f));
}

TEST_CASE("command-line flags override config-file values") {
  fs::path dir = temp_dir("override");
  fs::path cfg = dir / "cfg.json";
  distill::atomic_write_file(
      cfg, "{\"R\": 0.2, \"db_min\": 2.0, \"db_max\": 4.0, \"points\": 3, "
           "\"D\": 16}");
  REQUIRE(run("curve --config " + cfg.string() + " --R 0.05 --out " +
              dir.string()) == 0);
  std::ifstream in(dir / "curve.csv");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  REQUIRE(l1.rfind("# schema", 0) == 0);
  json embedded = json::parse(l2.substr(l2.find('{')));
  REQUIRE(embedded["R"].get<double>() == 0.05);      // flag wins
  REQUIRE(embedded["db_min"].get<double>() == 2.0);  // file value kept
  REQUIRE(embedded["points"].get<int>() == 3);
}
