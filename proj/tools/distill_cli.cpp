// Config-driven front end for the distillation pipelines. Subcommands write
// CSV/JSON artifacts into the output directory (flag --out, else the
// DISTILL_OUT_DIR environment variable, else the working directory); every
// artifact embeds the resolved configuration and a schema version, and fixed
// configs produce byte-identical files.
//
// Exit codes: 0 success, 1 configuration error, 2 compute failure
// (truncation budget or reconstruction convergence); failures emit a
// one-line JSON error object on stderr.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distill/analysis.hpp"
#include "distill/entanglement.hpp"
#include "distill/fock.hpp"
#include "distill/gaussian.hpp"
#include "distill/io.hpp"
#include "distill/subtraction.hpp"
#include "distill/tomography.hpp"
#include "distill/wigner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace distill;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scheme = "1-photon";
  double db = 3.2;        // magnitude of the initial squeezing in dB
  double R = 0.05;
  double eta_apd = 1.0;
  double eta_out = 1.0;
  int D = 12;
  double db_min = 1.0, db_max = 5.0;
  double r_min = 0.05, r_max = 1.0;
  int points = 9;
  long N = 24000;
  int phases = 6;
  std::uint64_t seed = 20260823;
  std::vector<long> d_list = {1, 2, 4, 8, 16};
  int B = 20;
  double x_min = -5.0, x_max = 5.0;
  double p_min = -5.0, p_max = 5.0;
  int nx = 201, np = 201;
  std::string out_dir;
};

json config_json(const RunConfig& c) {
  json j;
  j["scheme"] = c.scheme;
  j["db"] = c.db;
  j["R"] = c.R;
  j["eta_apd"] = c.eta_apd;
  j["eta_out"] = c.eta_out;
  j["D"] = c.D;
  j["db_min"] = c.db_min;
  j["db_max"] = c.db_max;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["points"] = c.points;
  j["N"] = c.N;
  j["phases"] = c.phases;
  j["seed"] = c.seed;
  j["d_list"] = c.d_list;
  j["B"] = c.B;
  j["x_min"] = c.x_min;
  j["x_max"] = c.x_max;
  j["p_min"] = c.p_min;
  j["p_max"] = c.p_max;
  j["nx"] = c.nx;
  j["np"] = c.np;
  // out_dir is run placement, not physics; leaving it out keeps artifacts
  // byte-identical across output locations
  return j;
}

// Options present in the config file override the defaults; options given on
// the command line override both (callers apply the file before CLI11
// overwrites flag-set values via a second parse pass).
void apply_config_file(const std::string& path, RunConfig& c) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot parse config file: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "scheme") c.scheme = it->get<std::string>();
    else if (k == "db") c.db = it->get<double>();
    else if (k == "R") c.R = it->get<double>();
    else if (k == "eta_apd") c.eta_apd = it->get<double>();
    else if (k == "eta_out") c.eta_out = it->get<double>();
    else if (k == "D") c.D = it->get<int>();
    else if (k == "db_min") c.db_min = it->get<double>();
    else if (k == "db_max") c.db_max = it->get<double>();
    else if (k == "r_min") c.r_min = it->get<double>();
    else if (k == "r_max") c.r_max = it->get<double>();
    else if (k == "points") c.points = it->get<int>();
    else if (k == "N") c.N = it->get<long>();
    else if (k == "phases") c.phases = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "d_list") c.d_list = it->get<std::vector<long>>();
    else if (k == "B") c.B = it->get<int>();
    else if (k == "x_min") c.x_min = it->get<double>();
    else if (k == "x_max") c.x_max = it->get<double>();
    else if (k == "p_min") c.p_min = it->get<double>();
    else if (k == "p_max") c.p_max = it->get<double>();
    else if (k == "nx") c.nx = it->get<int>();
    else if (k == "np") c.np = it->get<int>();
    else if (k == "out_dir") c.out_dir = it->get<std::string>();
    else throw ConfigError("unknown config key '" + k + "'");
  }
}

void validate(const RunConfig& c) {
  scheme_from_name(c.scheme);  // throws on unknown scheme
  if (c.R < 0.0 || c.R >= 0.5) throw ConfigError("R must lie in [0, 0.5)");
  if (c.eta_apd <= 0.0 || c.eta_apd > 1.0)
    throw ConfigError("eta_apd must lie in (0, 1]");
  if (c.eta_out <= 0.0 || c.eta_out > 1.0)
    throw ConfigError("eta_out must lie in (0, 1]");
  if (c.D < 2 || c.D > 40) throw ConfigError("D must lie in [2, 40]");
  if (c.points < 1) throw ConfigError("points must be >= 1");
  if (c.N < 1) throw ConfigError("N must be >= 1");
  if (c.phases < 1) throw ConfigError("phases must be >= 1");
  if (c.B < 20) throw ConfigError("B must be >= 20");
  if (c.d_list.size() < 2) throw ConfigError("d_list needs >= 2 entries");
  for (long d : c.d_list)
    if (d < 1) throw ConfigError("d_list entries must be >= 1");
  if (c.nx < 2 || c.np < 2) throw ConfigError("nx, np must be >= 2");
}

fs::path out_dir(const RunConfig& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("DISTILL_OUT_DIR")) return env;
  return ".";
}

std::string comment_header(const RunConfig& c) {
  return "# schema " + std::to_string(kSchemaVersion) + "\n# config " +
         config_json(c).dump() + "\n";
}

json artifact_json(const RunConfig& c) {
  json j;
  j["schema"] = kSchemaVersion;
  j["config"] = config_json(c);
  return j;
}

std::vector<double> phase_set(int n) {
  std::vector<double> ph;
  for (int k = 0; k < n; ++k) ph.push_back(k * M_PI / n);
  return ph;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

DensityMatrix minus_mode_state(const std::string& scheme, double r, int d) {
  int k = scheme_from_name(scheme) == Scheme::Undistilled  ? 0
          : scheme_from_name(scheme) == Scheme::OnePhoton ? 1
                                                          : 2;
  int di = std::max(d, squeezed_vacuum_dim(r, 1e-13));
  Eigen::VectorXcd a = squeezed_vacuum(r, di).amps;
  Eigen::MatrixXcd op = annihilation_op(di);
  for (int i = 0; i < k; ++i) a = op * a;
  if (a.norm() < 1e-14)
    throw ZeroNormError("subtraction from vacuum has zero norm");
  a.normalize();
  // the truncated state is renormalized and used as the simulation truth, so
  // the guard only needs to reject grossly insufficient cutoffs
  double lost = 1.0 - a.head(d).squaredNorm();
  if (lost > 1e-4)
    throw TruncationError("minus-mode state loses " + std::to_string(lost) +
                          " beyond the cutoff");
  return DensityMatrix::from_pure(FockVector(a.head(d).eval()).normalized());
}

int cmd_curve(const RunConfig& c) {
  std::vector<double> rs;
  for (double db : linspace(c.db_min, c.db_max, c.points))
    rs.push_back(db_to_r(-db));
  auto pts = distillation_curve(scheme_from_name(c.scheme), c.R, c.eta_out, rs,
                                c.D);
  atomic_write_file(out_dir(c) / "curve.csv",
                    comment_header(c) + curve_csv(pts));
  std::printf("curve: %zu points, scheme %s\n", pts.size(), c.scheme.c_str());
  return 0;
}

int cmd_entropy_curve(const RunConfig& c) {
  std::string csv = "r,squeezing_db,entropy_psi0,entropy_psi1,entropy_psi2\n";
  char buf[160];
  for (double r : linspace(c.r_min, c.r_max, c.points)) {
    double e0 = entropy_of_entanglement(schmidt(ideal_subtract(r, 0, 0, c.D)));
    double e1 = entropy_of_entanglement(schmidt(ideal_subtract(r, 1, 0, c.D)));
    double e2 = entropy_of_entanglement(schmidt(ideal_subtract(r, 1, 1, c.D)));
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r,
                  r_to_db(r), e0, e1, e2);
    csv += buf;
  }
  atomic_write_file(out_dir(c) / "entropy_curve.csv", comment_header(c) + csv);
  std::printf("entropy-curve: %d points\n", c.points);
  return 0;
}

int cmd_epr(const RunConfig& c) {
  std::string csv = "squeezing_db,r,var_psi0,var_psi1,var_psi2\n";
  char buf[160];
  for (double db : linspace(c.db_min, c.db_max, c.points)) {
    double r = db_to_r(-db);
    double v0 = epr_variance(
                    DensityMatrix::from_pure(ideal_subtract(r, 0, 0, c.D)))
                    .var_xminus;
    double v1 = epr_variance(
                    DensityMatrix::from_pure(ideal_subtract(r, 1, 0, c.D)))
                    .var_xminus;
    double v2 = epr_variance(
                    DensityMatrix::from_pure(ideal_subtract(r, 1, 1, c.D)))
                    .var_xminus;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", db, r,
                  v0, v1, v2);
    csv += buf;
  }
  atomic_write_file(out_dir(c) / "epr.csv", comment_header(c) + csv);
  EprCrossover cross = epr_crossover(c.D);
  json j = artifact_json(c);
  j["crossover_r"] = cross.r;
  j["crossover_db"] = cross.db;
  atomic_write_file(out_dir(c) / "epr.json", j.dump());
  std::printf("epr: crossover at %.3f dB\n", cross.db);
  return 0;
}

int cmd_wigner(const RunConfig& c) {
  DensityMatrix rho = minus_mode_state(c.scheme, db_to_r(-c.db), c.D);
  if (c.eta_out < 1.0) rho = loss_channel(rho, 0, c.eta_out);
  WignerGrid g = wigner_grid(rho, c.x_min, c.x_max, c.nx, c.p_min, c.p_max,
                             c.np);
  atomic_write_file(out_dir(c) / "wigner.csv",
                    comment_header(c) + wigner_csv(g));
  std::printf("wigner: min value %.6f\n", g.min_value());
  return 0;
}

int cmd_tomo_sim(const RunConfig& c) {
  double r = db_to_r(-c.db);
  DensityMatrix tm = minus_mode_state(c.scheme, r, c.D);
  DensityMatrix tp = DensityMatrix::from_pure(FockVector::vacuum(c.D));
  auto [plus, minus] =
      joint_sample_and_rotate_phases(tm, tp, phase_set(c.phases), c.N, c.seed);
  minus.source = c.scheme + " minus mode";
  plus.source = "vacuum plus mode";
  save_dataset(out_dir(c) / "tomo_minus", minus);
  save_dataset(out_dir(c) / "tomo_plus", plus);
  ReconstructionResult rm = mle_reconstruct(minus, c.D);
  ReconstructionResult rp = mle_reconstruct(plus, c.D);
  if (!rm.converged || !rp.converged)
    throw TruncationError("MLE reconstruction did not converge");
  json j = artifact_json(c);
  j["fidelity_minus"] = fidelity(rm.rho, tm);
  j["fidelity_plus"] = fidelity(rp.rho, tp);
  j["iterations_minus"] = rm.iterations;
  j["iterations_plus"] = rp.iterations;
  j["log_negativity"] =
      log_negativity(assemble_from_plus_minus(rm.rho, rp.rho));
  atomic_write_file(out_dir(c) / "tomo_sim.json", j.dump());
  std::printf("tomo-sim: fidelity(-) %.5f, fidelity(+) %.5f\n",
              j["fidelity_minus"].get<double>(),
              j["fidelity_plus"].get<double>());
  return 0;
}

int cmd_extrapolate(const RunConfig& c) {
  double r = db_to_r(-c.db);
  DensityMatrix tm = minus_mode_state(c.scheme, r, c.D);
  DensityMatrix tp = DensityMatrix::from_pure(FockVector::vacuum(c.D));
  ExtrapolationFit fit = negativity_vs_datasize(
      tm, tp, c.N, phase_set(c.phases), c.D, c.d_list, c.seed);
  json j = artifact_json(c);
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["residual"] = fit.residual;
  j["true_log_negativity"] = log_negativity(assemble_from_plus_minus(tm, tp));
  j["points"] = json::array();
  for (const auto& p : fit.points)
    j["points"].push_back({{"n", p.n},
                           {"mean_en", p.mean_en},
                           {"std_en", p.std_en}});
  j["warnings"] = fit.warnings;
  atomic_write_file(out_dir(c) / "extrapolate.json", j.dump());
  std::printf("extrapolate: a = %.5f, b = %.5f\n", fit.a, fit.b);
  return 0;
}

int cmd_verify(const RunConfig& c) {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };
  double r = db_to_r(-c.db);

  TwoModeFockState psi0 = half_split_squeezed_vacuum(r, 25);
  TwoModeFockState sq = apply_local_squeezing(psi0, -r / 2.0, -r / 2.0);
  double lp = std::tanh(r / 2.0);
  Eigen::MatrixXcd tmsv = Eigen::MatrixXcd::Zero(25, 25);
  for (int n = 0; n < 25; ++n) tmsv(n, n) = std::pow(lp, n);
  TwoModeFockState ref = TwoModeFockState(tmsv).normalized();
  check("local squeezing maps |Psi0> to the two-mode squeezed vacuum",
        std::abs((sq.normalized().flat().adjoint() * ref.flat())(0, 0)) >
            0.9999);

  EquivalenceReport eq = verify_model_equivalence(0.4, 0.1, 1, 0, 12);
  check("tap-then-split equals split-then-tap",
        eq.state_fidelity > 1.0 - 1e-9 &&
            std::abs(eq.success_prob_a - eq.success_prob_b) < 1e-9);

  double en = log_negativity(schmidt(ideal_subtract(r, 0, 0, 25)));
  check("closed-form negativity of |Psi0>",
        std::abs(en - r * std::log2(std::exp(1.0))) < 1e-6);

  EprVariances epr =
      epr_variance(DensityMatrix::from_pure(ideal_subtract(r, 0, 0, 25)));
  check("EPR variance of |Psi0> is e^{-2r}/2",
        std::abs(epr.var_xminus - std::exp(-2.0 * r) / 2.0) < 1e-8);

  DensityMatrix one = minus_mode_state("1-photon", r, 22);
  check("Wigner parity of the subtracted state",
        std::abs(wigner_point(one, 0.0, 0.0) + 1.0 / M_PI) < 1e-8);

  DensityMatrix sqm = minus_mode_state("undistilled", r, 22);
  DensityMatrix vac = DensityMatrix::from_pure(FockVector::vacuum(22));
  check("plus/minus assembly inverts the sampling rotation",
        fidelity(assemble_from_plus_minus(sqm, vac),
                 DensityMatrix::from_pure(half_split_squeezed_vacuum(r, 22))) >
            1.0 - 1e-8);

  std::printf("%s\n", failures == 0 ? "all checks passed" : "checks FAILED");
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-variable entanglement distillation pipelines"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--scheme", cfg.scheme,
                    "undistilled | 1-photon | 2-photon");
    sub->add_option("--db", cfg.db, "initial squeezing magnitude in dB");
    sub->add_option("--R", cfg.R, "tap reflectance");
    sub->add_option("--eta-apd", cfg.eta_apd, "herald detector efficiency");
    sub->add_option("--eta-out", cfg.eta_out, "output transmission");
    sub->add_option("--D", cfg.D, "truncation dimension");
    sub->add_option("--db-min", cfg.db_min, "grid start in dB");
    sub->add_option("--db-max", cfg.db_max, "grid end in dB");
    sub->add_option("--r-min", cfg.r_min, "grid start in r");
    sub->add_option("--r-max", cfg.r_max, "grid end in r");
    sub->add_option("--points", cfg.points, "grid size");
    sub->add_option("--N", cfg.N, "total sample count");
    sub->add_option("--phases", cfg.phases, "number of LO phases");
    sub->add_option("--seed", cfg.seed, "master RNG seed");
    sub->add_option("--d-list", cfg.d_list, "subset counts");
    sub->add_option("--B", cfg.B, "bootstrap resamples");
    sub->add_option("--x-min", cfg.x_min, "Wigner grid x start");
    sub->add_option("--x-max", cfg.x_max, "Wigner grid x end");
    sub->add_option("--p-min", cfg.p_min, "Wigner grid p start");
    sub->add_option("--p-max", cfg.p_max, "Wigner grid p end");
    sub->add_option("--nx", cfg.nx, "Wigner grid x points");
    sub->add_option("--np", cfg.np, "Wigner grid p points");
    sub->add_option("--out", cfg.out_dir, "output directory");
  };

  CLI::App* c_curve = app.add_subcommand("curve", "negativity vs squeezing");
  CLI::App* c_entropy =
      app.add_subcommand("entropy-curve", "entanglement entropy vs r");
  CLI::App* c_epr = app.add_subcommand("epr", "EPR variances and crossover");
  CLI::App* c_wigner = app.add_subcommand("wigner", "Wigner grid export");
  CLI::App* c_tomo =
      app.add_subcommand("tomo-sim", "sample, reconstruct, report");
  CLI::App* c_extrap =
      app.add_subcommand("extrapolate", "negativity vs data size");
  CLI::App* c_verify = app.add_subcommand("verify", "run invariant checks");
  for (CLI::App* sub :
       {c_curve, c_entropy, c_epr, c_wigner, c_tomo, c_extrap, c_verify})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
    return 1;
  }

  try {
    if (!config_path.empty()) {
      // file values fill in everything the command line left untouched
      RunConfig file_cfg;
      apply_config_file(config_path, file_cfg);
      CLI::App* sub = app.get_subcommands().front();
      auto keep = [&](const std::string& flag) {
        return sub->count(flag) > 0;
      };
      RunConfig merged = file_cfg;
      if (keep("--scheme")) merged.scheme = cfg.scheme;
      if (keep("--db")) merged.db = cfg.db;
      if (keep("--R")) merged.R = cfg.R;
      if (keep("--eta-apd")) merged.eta_apd = cfg.eta_apd;
      if (keep("--eta-out")) merged.eta_out = cfg.eta_out;
      if (keep("--D")) merged.D = cfg.D;
      if (keep("--db-min")) merged.db_min = cfg.db_min;
      if (keep("--db-max")) merged.db_max = cfg.db_max;
      if (keep("--r-min")) merged.r_min = cfg.r_min;
      if (keep("--r-max")) merged.r_max = cfg.r_max;
      if (keep("--points")) merged.points = cfg.points;
      if (keep("--N")) merged.N = cfg.N;
      if (keep("--phases")) merged.phases = cfg.phases;
      if (keep("--seed")) merged.seed = cfg.seed;
      if (keep("--d-list")) merged.d_list = cfg.d_list;
      if (keep("--B")) merged.B = cfg.B;
      if (keep("--x-min")) merged.x_min = cfg.x_min;
      if (keep("--x-max")) merged.x_max = cfg.x_max;
      if (keep("--p-min")) merged.p_min = cfg.p_min;
      if (keep("--p-max")) merged.p_max = cfg.p_max;
      if (keep("--nx")) merged.nx = cfg.nx;
      if (keep("--np")) merged.np = cfg.np;
      if (keep("--out")) merged.out_dir = cfg.out_dir;
      cfg = merged;
    }
    validate(cfg);
    fs::create_directories(out_dir(cfg));
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(c_curve)) return cmd_curve(cfg);
    if (app.got_subcommand(c_entropy)) return cmd_entropy_curve(cfg);
    if (app.got_subcommand(c_epr)) return cmd_epr(cfg);
    if (app.got_subcommand(c_wigner)) return cmd_wigner(cfg);
    if (app.got_subcommand(c_tomo)) return cmd_tomo_sim(cfg);
    if (app.got_subcommand(c_extrap)) return cmd_extrapolate(cfg);
    if (app.got_subcommand(c_verify)) return cmd_verify(cfg);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "compute"}}.dump() << "\n";
    return 2;
  }
  return 0;
}
