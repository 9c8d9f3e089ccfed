#pragma once

// File formats and atomic writes for the pipeline artifacts.
//
// States are JSON objects {"schema", "modes", "re", "im"} with the density
// matrix stored row-major; homodyne datasets are CSV (columns x, theta) with
// a JSON sidecar carrying the seed and provenance. All floating-point output
// uses 17 significant digits so that round-trips are bit exact.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "distill/common.hpp"
#include "distill/fock.hpp"
#include "distill/tomography.hpp"

namespace distill {

inline constexpr int kSchemaVersion = 1;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Write via a temp file in the same directory plus rename, so that readers
// never observe a partially written artifact.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("atomic_write_file: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("atomic_write_file: short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Density-matrix JSON

inline nlohmann::json state_to_json(const DensityMatrix& rho) {
  nlohmann::json j;
  j["schema"] = kSchemaVersion;
  j["modes"] = rho.mode_dims;
  int n = rho.total_dim();
  std::vector<double> re, im;
  re.reserve(n * n);
  im.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      re.push_back(rho.rho(i, k).real());
      im.push_back(rho.rho(i, k).imag());
    }
  j["re"] = re;
  j["im"] = im;
  return j;
}

inline DensityMatrix state_from_json(const nlohmann::json& j) {
  if (!j.contains("modes") || !j.contains("re") || !j.contains("im"))
    throw IoError("state_from_json: missing modes/re/im");
  std::vector<int> modes = j["modes"].get<std::vector<int>>();
  long n = 1;
  for (int d : modes) n *= d;
  std::vector<double> re = j["re"].get<std::vector<double>>();
  std::vector<double> im = j["im"].get<std::vector<double>>();
  if (static_cast<long>(re.size()) != n * n ||
      static_cast<long>(im.size()) != n * n)
    throw IoError("state_from_json: element count does not match modes");
  Eigen::MatrixXcd m(n, n);
  for (long i = 0; i < n; ++i)
    for (long k = 0; k < n; ++k)
      m(i, k) = cxd(re[i * n + k], im[i * n + k]);
  return DensityMatrix(std::move(m), modes);
}

inline void save_state(const std::filesystem::path& path,
                       const DensityMatrix& rho) {
  atomic_write_file(path, state_to_json(rho).dump());
}

inline DensityMatrix load_state(const std::filesystem::path& path) {
  return state_from_json(nlohmann::json::parse(read_file(path)));
}

// ---------------------------------------------------------------------------
// Homodyne dataset CSV + JSON sidecar

inline std::string dataset_csv(const QuadratureDataset& ds) {
  std::string out = "x,theta\n";
  char buf[80];
  for (const QuadratureSample& s : ds.samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", s.x, s.theta);
    out += buf;
  }
  return out;
}

inline nlohmann::json dataset_sidecar(const QuadratureDataset& ds) {
  nlohmann::json j;
  j["schema"] = kSchemaVersion;
  j["seed"] = ds.seed;
  j["n"] = ds.size();
  j["mode"] = ds.mode;
  j["state_description"] = ds.source;
  return j;
}

inline QuadratureDataset dataset_from_csv(const std::string& csv,
                                          const nlohmann::json& sidecar = {}) {
  QuadratureDataset ds;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "x,theta")
    throw IoError("dataset_from_csv: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    QuadratureSample s;
    char extra;
    if (std::sscanf(line.c_str(), "%lf,%lf%c", &s.x, &s.theta, &extra) != 2)
      throw IoError("dataset_from_csv: bad row '" + line + "'");
    ds.samples.push_back(s);
  }
  if (!sidecar.is_null() && sidecar.is_object()) {
    if (sidecar.contains("n") &&
        sidecar["n"].get<long>() != ds.size())
      throw IoError("dataset_from_csv: sidecar sample count mismatch");
    if (sidecar.contains("seed")) ds.seed = sidecar["seed"].get<std::uint64_t>();
    if (sidecar.contains("mode")) ds.mode = sidecar["mode"].get<std::string>();
    if (sidecar.contains("state_description"))
      ds.source = sidecar["state_description"].get<std::string>();
  }
  return ds;
}

// base path "foo" -> foo.csv plus foo.json
inline void save_dataset(const std::filesystem::path& base,
                         const QuadratureDataset& ds) {
  std::filesystem::path csv = base, meta = base;
  csv += ".csv";
  meta += ".json";
  atomic_write_file(csv, dataset_csv(ds));
  atomic_write_file(meta, dataset_sidecar(ds).dump());
}

inline QuadratureDataset load_dataset(const std::filesystem::path& base) {
  std::filesystem::path csv = base, meta = base;
  csv += ".csv";
  meta += ".json";
  nlohmann::json sidecar;
  if (std::filesystem::exists(meta))
    sidecar = nlohmann::json::parse(read_file(meta));
  return dataset_from_csv(read_file(csv), sidecar);
}

}  // namespace distill
