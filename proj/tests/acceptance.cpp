// Acceptance gate: one test case and one printed PASS/FAIL line per
// criterion. Each criterion is checked exactly as stated; known model
// discrepancies are left to fail honestly rather than being loosened.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "distill/analysis.hpp"
#include "distill/entanglement.hpp"
#include "distill/fock.hpp"
#include "distill/io.hpp"
#include "distill/subtraction.hpp"
#include "distill/tomography.hpp"
#include "distill/wigner.hpp"

using namespace distill;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

DensityMatrix subtracted_sqvac(double r, int k, int d) {
  int di = std::max(d, squeezed_vacuum_dim(r, 1e-13));
  Eigen::VectorXcd a = squeezed_vacuum(r, di).amps;
  Eigen::MatrixXcd op = annihilation_op(di);
  for (int i = 0; i < k; ++i) a = op * a;
  a.normalize();
  return DensityMatrix::from_pure(FockVector(a.head(d).eval()).normalized());
}

}  // namespace

TEST_CASE("criterion 1: local-unitary equivalence with the TMSV") {
  auto t0 = Clock::now();
  bool pass = true;
  double worst = 1.0;
  for (double r : {0.2, 0.4, 0.8}) {
    TwoModeFockState psi0 = half_split_squeezed_vacuum(r, 25);
    TwoModeFockState sq =
        apply_local_squeezing(psi0, -r / 2.0, -r / 2.0).normalized();
    double lp = std::tanh(r / 2.0);
    Eigen::MatrixXcd tmsv = Eigen::MatrixXcd::Zero(25, 25);
    for (int n = 0; n < 25; ++n) tmsv(n, n) = std::pow(lp, n);
    double f = std::norm(
        (sq.flat().adjoint() * TwoModeFockState(tmsv).normalized().flat())(0, 0));
    worst = std::min(worst, f);
    if (f < 0.9999) pass = false;
  }
  double dt = seconds_since(t0);
  if (dt >= 1.0) pass = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst fidelity %.6f, %.2f s", worst, dt);
  report(1, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 2: tap placement equivalence") {
  auto t0 = Clock::now();
  bool pass = true;
  double worst_f = 0.0, worst_p = 0.0;
  for (double r : {0.4, 0.8})
    for (double R : {0.05, 0.1, 0.2})
      for (auto [na, nb] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
        EquivalenceReport eq = verify_model_equivalence(r, R, na, nb, 12);
        worst_f = std::max(worst_f, std::abs(1.0 - eq.state_fidelity));
        worst_p = std::max(
            worst_p, std::abs(eq.success_prob_a - eq.success_prob_b));
      }
  if (worst_f > 1e-9 || worst_p > 1e-9) pass = false;
  double dt = seconds_since(t0);
  if (dt >= 10.0) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max |1-F| %.2e, max dp %.2e, %.2f s", worst_f, worst_p, dt);
  report(2, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 3: closed-form negativity of |Psi0>") {
  bool pass = true;
  double worst = 0.0;
  for (double r = 0.1; r <= 0.8 + 1e-12; r += 0.1) {
    double en = log_negativity(analytic_schmidt(0, r, 25, 1e-2));
    worst = std::max(worst, std::abs(en - r * std::log2(std::exp(1.0))));
  }
  if (worst > 1e-6) pass = false;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |E_N - r log2 e| = %.2e", worst);
  report(3, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 4: analytic Schmidt machinery") {
  bool pass = true;
  double worst_c = 0.0, worst_n = 0.0;
  for (int k : {0, 1, 2})
    for (double r : {0.2, 0.5, 1.0}) {
      double w = 1.0;
      TwoModeFockState psi = ideal_subtract(r, k > 0 ? 1 : 0, k > 1 ? 1 : 0,
                                            60, &w);
      Eigen::VectorXd numeric = schmidt(psi).coefficients;
      Eigen::VectorXd ana = analytic_schmidt(k, r, 60).coefficients;
      for (int i = 0; i < 60; ++i)
        worst_c = std::max(worst_c, std::abs(numeric(i) - ana(i)));
      if (k == 1)
        worst_n = std::max(worst_n, std::abs(w - herald_norm_1(r)));
      if (k == 2)
        worst_n = std::max(worst_n, std::abs(w - herald_norm_2(r)));
    }
  if (worst_c > 1e-8 || worst_n > 1e-8) pass = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "max coefficient diff %.2e, max norm diff %.2e", worst_c,
                worst_n);
  report(4, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 5: entanglement ordering and the r -> 0 limit") {
  bool order10 = true, order21 = true;
  double first_ok21 = -1.0;
  for (int i = 1; i <= 20; ++i) {
    double r = 0.05 * i;
    double e0 = entropy_of_entanglement(analytic_schmidt(0, r, 60));
    double e1 = entropy_of_entanglement(analytic_schmidt(1, r, 60));
    double e2 = entropy_of_entanglement(analytic_schmidt(2, r, 60));
    if (e1 <= e0) order10 = false;
    if (e2 <= e1)
      order21 = false;
    else if (first_ok21 < 0.0)
      first_ok21 = r;
  }
  double e1_small = entropy_of_entanglement(analytic_schmidt(1, 0.01, 40));
  bool limit = std::abs(e1_small - 1.0) < 0.01;
  bool pass = order10 && order21 && limit;
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "E1>E0 %s; E2>E1 %s (two-photon entropy vanishes as r->0, "
                "ordering holds only for r >= %.2f); E1(0.01)=%.4f",
                order10 ? "holds" : "fails", order21 ? "holds" : "fails",
                first_ok21, e1_small);
  report(5, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 6: distillation gain over 1-5 dB") {
  bool pass = true;
  std::vector<double> db_full, db_mid;
  for (double db = 1.0; db <= 5.0 + 1e-9; db += 0.5) db_full.push_back(db);
  for (double db = 2.0; db <= 4.0 + 1e-9; db += 0.5) db_mid.push_back(db);
  auto gain_ok = [&](Scheme s, double R, double eta,
                     const std::vector<double>& dbs) {
    for (double db : dbs) {
      double r = db_to_r(-db);
      CurvePoint base = curve_point(Scheme::Undistilled, r, 0.0, eta, 17);
      CurvePoint dist = curve_point(s, r, R, eta, 17);
      if (dist.log_negativity <= base.log_negativity) return false;
    }
    return true;
  };
  bool lossless1 = gain_ok(Scheme::OnePhoton, 0.05, 1.0, db_full);
  bool lossless2 = gain_ok(Scheme::TwoPhoton, 0.10, 1.0, db_full);
  bool lossy1 = gain_ok(Scheme::OnePhoton, 0.05, 0.85, db_mid);
  pass = lossless1 && lossless2 && lossy1;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "lossless 1-photon %s, lossless 2-photon %s, eta=0.85 %s",
                lossless1 ? "gains" : "fails", lossless2 ? "gains" : "fails",
                lossy1 ? "gains" : "fails");
  report(6, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 7: EPR variances and the crossover window") {
  bool never_improves = true;
  for (double r = 0.1; r <= 1.0 + 1e-9; r += 0.1) {
    DensityMatrix zero = DensityMatrix::from_pure(ideal_subtract(r, 0, 0, 40));
    DensityMatrix one = DensityMatrix::from_pure(ideal_subtract(r, 1, 0, 40));
    if (epr_variance(one).var_xminus <
        epr_variance(zero).var_xminus - 1e-10)
      never_improves = false;
  }
  auto vx2_minus_vx0 = [](double db) {
    double r = db_to_r(-db);
    DensityMatrix two = DensityMatrix::from_pure(ideal_subtract(r, 1, 1, 40));
    DensityMatrix zero = DensityMatrix::from_pure(ideal_subtract(r, 0, 0, 40));
    return epr_variance(two).var_xminus - epr_variance(zero).var_xminus;
  };
  bool below_ok = true, above_ok = true;
  for (double db : {1.0, 2.0, 3.0, 3.4})
    if (vx2_minus_vx0(db) >= 0.0) below_ok = false;
  for (double db : {4.6, 5.0, 6.0, 7.0})
    if (vx2_minus_vx0(db) <= 0.0) above_ok = false;
  EprCrossover cross = epr_crossover(40);
  bool window = cross.db > 3.5 && cross.db < 4.5;
  bool pass = never_improves && below_ok && above_ok && window;
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "1-photon never improves %s; improvement below 3.5 dB %s, "
                "none above 4.5 dB %s; crossover %.3f dB (model value "
                "atanh(1/2) -> 4.771)",
                never_improves ? "holds" : "fails", below_ok ? "holds" : "fails",
                above_ok ? "holds" : "fails", cross.db);
  report(7, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 8: Wigner parity and factorization") {
  int d = 22;
  double r = db_to_r(-3.2);
  DensityMatrix one_sub = subtracted_sqvac(r, 1, d);
  double w0 = wigner_point(one_sub, 0.0, 0.0);
  bool parity = std::abs(w0 + 1.0 / M_PI) < 1e-8;

  TwoModeFockState psi = ideal_subtract(r, 1, 0, d);
  DensityMatrix vac = DensityMatrix::from_pure(FockVector::vacuum(d));
  Eigen::VectorXcd v = psi.flat();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    double xa = u(rng), pa = u(rng), xb = u(rng), pb = u(rng);
    Eigen::MatrixXcd da =
        detail::displacement_matrix(d, std::sqrt(2.0) * cxd(xa, pa));
    Eigen::MatrixXcd db =
        detail::displacement_matrix(d, std::sqrt(2.0) * cxd(xb, pb));
    cxd w = 0.0;
    for (int m1 = 0; m1 < d; ++m1)
      for (int m2 = 0; m2 < d; ++m2)
        for (int n1 = 0; n1 < d; ++n1)
          for (int n2 = 0; n2 < d; ++n2)
            w += v(m1 * d + m2) * std::conj(v(n1 * d + n2)) *
                 (((m1 + m2) % 2 == 0) ? 1.0 : -1.0) * da(n1, m1) * db(n2, m2);
    double brute = w.real() / (M_PI * M_PI);
    double fact = factorized_two_mode_wigner(one_sub, vac, xa, pa, xb, pb);
    worst = std::max(worst, std::abs(brute - fact));
  }
  bool pass = parity && worst < 1e-6;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "W(0,0)+1/pi = %.2e, max factorization diff %.2e",
                w0 + 1.0 / M_PI, worst);
  report(8, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 9: tomography round-trip accuracy") {
  auto t0 = Clock::now();
  int d = 14;
  double r = db_to_r(-3.2);
  DensityMatrix tm = subtracted_sqvac(r, 1, d);
  DensityMatrix tp = DensityMatrix::from_pure(FockVector::vacuum(d));
  auto [plus, minus] =
      joint_sample_and_rotate_phases(tm, tp, standard_phases(), 100000, 20260823);
  ReconstructionResult rm = mle_reconstruct(minus, d);
  ReconstructionResult rp = mle_reconstruct(plus, d);
  double fm = fidelity(rm.rho, tm);
  double fp = fidelity(rp.rho, tp);
  double dt = seconds_since(t0);
  bool pass = fm >= 0.99 && fp > 0.99 && dt < 120.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "fidelity(-) %.4f, fidelity(+) %.4f, %.1f s", fm, fp, dt);
  report(9, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 10: data-size extrapolation") {
  auto t0 = Clock::now();
  int d = 14;
  double r = db_to_r(-3.2);
  DensityMatrix tm = subtracted_sqvac(r, 1, d);
  DensityMatrix tp = DensityMatrix::from_pure(FockVector::vacuum(d));
  double true_en = log_negativity(assemble_from_plus_minus(tm, tp));
  ExtrapolationFit fit = negativity_vs_datasize(
      tm, tp, 600000, standard_phases(), d, {1, 2, 4, 8, 16}, 424242);
  bool within = std::abs(fit.a - true_en) <= 0.02 * true_en;
  bool decreasing = fit.points.size() == 5;
  for (size_t i = 0; i + 1 < fit.points.size(); ++i)
    if (fit.points[i].mean_en >= fit.points[i + 1].mean_en) decreasing = false;
  double dt = seconds_since(t0);
  bool pass = within && decreasing && dt < 600.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "a = %.4f vs true %.4f (%.2f%%), means %s in N, %.1f s", fit.a,
                true_en, 100.0 * std::abs(fit.a - true_en) / true_en,
                decreasing ? "decreasing" : "NOT monotone", dt);
  report(10, pass, buf);
  CHECK(pass);
}

TEST_CASE("criterion 11: determinism of CLI artifacts") {
  const char* cli = std::getenv("DISTILL_CLI");
  bool pass = cli != nullptr;
  std::string detail = "DISTILL_CLI not set";
  if (pass) {
    fs::path root = fs::temp_directory_path() / "distill_acceptance";
    fs::remove_all(root);
    auto run = [&](const std::string& args, const std::string& out) {
      fs::create_directories(root / out);
      std::string cmd = std::string(cli) + " " + args + " --out " +
                        (root / out).string() + " > /dev/null 2>&1";
      return std::system(cmd.c_str()) == 0;
    };
    std::string tomo = "tomo-sim --scheme 1-photon --db 3.2 --D 10 --N 20000 "
                       "--seed 11";
    std::string extr = "extrapolate --scheme 1-photon --db 3.2 --D 10 "
                       "--N 20000 --d-list 1 2 4 --seed 11";
    pass = run(tomo, "t1") && run(tomo, "t2") && run(extr, "e1") &&
           run(extr, "e2");
    if (!pass) {
      detail = "CLI run failed";
    } else {
      for (const char* f : {"t1/tomo_sim.json", "t1/tomo_minus.csv",
                            "t1/tomo_plus.csv", "e1/extrapolate.json"}) {
        std::string other = f;
        other[1] = '2';
        if (read_file(root / f) != read_file(root / other)) pass = false;
      }
      detail = pass ? "tomo-sim and extrapolate artifacts byte-identical"
                    : "artifacts differ between identical runs";
    }
  }
  report(11, pass, detail);
  CHECK(pass);
}
