#pragma once

// Pipeline layer tying the state machinery together: negativity-vs-squeezing
// curves, EPR variance comparisons, the data-size extrapolation fit
// E_N(N) = a + b/sqrt(N), bootstrap uncertainty of reconstructed
// negativities, and dB conversions.
//
// Squeezing in dB follows dB = 10 log10(e^{-2r}); negative dB means a
// squeezed x quadrature.

#include <cstdint>
#include <string>
#include <vector>

#include "distill/common.hpp"
#include "distill/entanglement.hpp"
#include "distill/fock.hpp"
#include "distill/gaussian.hpp"
#include "distill/subtraction.hpp"
#include "distill/tomography.hpp"

namespace distill {

inline double db_to_r(double db) { return -db * std::log(10.0) / 20.0; }
inline double r_to_db(double r) { return -20.0 * r / std::log(10.0); }

// ---------------------------------------------------------------------------
// EPR variances

struct EprVariances {
  double var_xminus = 0.0;
  double var_pplus = 0.0;
  double product = 0.0;
};

// Joint-quadrature variances Var(x_-), Var(p_+) with x_- = (x_A - x_B)/sqrt2
// and p_+ = (p_A + p_B)/sqrt2, from the full covariance matrix. With
// vacuum_normalized the variances are divided by the vacuum level 1/2.
inline EprVariances epr_variance(const DensityMatrix& rho,
                                 bool vacuum_normalized = false) {
  CovarianceMatrix2M cm = covariance_of(rho);
  double vx = 0.5 * (cm.v(0, 0) + cm.v(2, 2) - 2.0 * cm.v(0, 2));
  double vp = 0.5 * (cm.v(1, 1) + cm.v(3, 3) + 2.0 * cm.v(1, 3));
  if (vacuum_normalized) {
    vx *= 2.0;
    vp *= 2.0;
  }
  return EprVariances{vx, vp, vx * vp};
}

// ---------------------------------------------------------------------------
// Distillation curves

enum class Scheme { Undistilled, OnePhoton, TwoPhoton };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Undistilled: return "undistilled";
    case Scheme::OnePhoton: return "1-photon";
    case Scheme::TwoPhoton: return "2-photon";
  }
  throw InvalidStateError("scheme_name: unknown scheme");
}

inline Scheme scheme_from_name(const std::string& name) {
  if (name == "undistilled") return Scheme::Undistilled;
  if (name == "1-photon" || name == "1photon") return Scheme::OnePhoton;
  if (name == "2-photon" || name == "2photon") return Scheme::TwoPhoton;
  throw InvalidStateError("scheme_from_name: unknown scheme '" + name + "'");
}

struct CurvePoint {
  double squeezing_db = 0.0;
  double r = 0.0;
  Scheme scheme = Scheme::Undistilled;
  double R = 0.0;
  double eta_out = 1.0;
  double log_negativity = 0.0;          // base 2
  double entropy = 0.0;                 // ebits; NaN when the state is mixed
  double var_xminus = 0.0;
  double var_pplus = 0.0;
  double success_prob = 1.0;
};

namespace detail {

inline SubtractionSpec curve_spec(Scheme scheme, double big_r, double eta_out) {
  switch (scheme) {
    case Scheme::Undistilled:
      return SubtractionSpec(0, 0, 0.0, 1.0, eta_out, true);
    case Scheme::OnePhoton:
      return SubtractionSpec(1, 0, big_r, 1.0, eta_out, big_r == 0.0);
    case Scheme::TwoPhoton:
      return SubtractionSpec(1, 1, big_r, 1.0, eta_out, big_r == 0.0);
  }
  throw InvalidStateError("curve_spec: unknown scheme");
}

// Entropy of entanglement if the two-mode density matrix is (numerically)
// pure, NaN otherwise.
inline double entropy_if_pure(const DensityMatrix& rho, double purity_tol = 1e-8) {
  double purity = (rho.rho * rho.rho).trace().real();
  if (purity < 1.0 - purity_tol)
    return std::numeric_limits<double>::quiet_NaN();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.rho);
  int top;
  es.eigenvalues().maxCoeff(&top);
  int da = rho.mode_dims[0], db = rho.mode_dims[1];
  Eigen::MatrixXcd c(da, db);
  for (int m = 0; m < da; ++m)
    for (int n = 0; n < db; ++n) c(m, n) = es.eigenvectors()(m * db + n, top);
  return entropy_of_entanglement(TwoModeFockState(c).normalized());
}

}  // namespace detail

inline CurvePoint curve_point(Scheme scheme, double r, double big_r,
                              double eta_out, int d) {
  HeraldedState h = heralded_subtract(r, detail::curve_spec(scheme, big_r, eta_out), d);
  EprVariances epr = epr_variance(h.state);
  CurvePoint p;
  p.squeezing_db = r_to_db(r);
  p.r = r;
  p.scheme = scheme;
  p.R = big_r;
  p.eta_out = eta_out;
  p.log_negativity = log_negativity(h.state);
  p.entropy = detail::entropy_if_pure(h.state);
  p.var_xminus = epr.var_xminus;
  p.var_pplus = epr.var_pplus;
  p.success_prob = h.success_prob;
  return p;
}

inline std::vector<CurvePoint> distillation_curve(Scheme scheme, double big_r,
                                                  double eta_out,
                                                  const std::vector<double>& r_grid,
                                                  int d) {
  std::vector<CurvePoint> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) out.push_back(curve_point(scheme, r, big_r, eta_out, d));
  return out;
}

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
  std::string out =
      "squeezing_db,r,scheme,R,eta_out,E_N,entropy,var_xminus,var_pplus,"
      "success_prob\n";
  char buf[256];
  for (const CurvePoint& p : pts) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  p.squeezing_db, p.r, scheme_name(p.scheme).c_str(), p.R,
                  p.eta_out, p.log_negativity, p.entropy, p.var_xminus,
                  p.var_pplus, p.success_prob);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// EPR crossover of the two-photon scheme (ideal, lossless model)

struct EprCrossover {
  double r = 0.0;
  double db = 0.0;  // magnitude of the initial squeezing in dB
};

// Dense r-scan (default step 0.01) of Var(x_-) for the two-photon subtracted
// state against the undistilled state; the first sign change of the
// difference is located by linear interpolation.
inline EprCrossover epr_crossover(int d = 25, double r_min = 0.05,
                                  double r_max = 1.0, double step = 0.01) {
  auto diff = [&](double r) {
    DensityMatrix two = DensityMatrix::from_pure(ideal_subtract(r, 1, 1, d));
    DensityMatrix zero = DensityMatrix::from_pure(ideal_subtract(r, 0, 0, d));
    return epr_variance(two).var_xminus - epr_variance(zero).var_xminus;
  };
  double prev_r = r_min, prev_f = diff(r_min);
  if (prev_f >= 0.0)
    throw InvalidStateError("epr_crossover: no improvement at r_min");
  for (double r = r_min + step; r <= r_max + 1e-12; r += step) {
    double f = diff(r);
    if (f >= 0.0) {
      double t = prev_f / (prev_f - f);
      double rc = prev_r + t * step;
      return EprCrossover{rc, -r_to_db(rc)};
    }
    prev_r = r;
    prev_f = f;
  }
  throw InvalidStateError("epr_crossover: no crossover found in scan range");
}

// ---------------------------------------------------------------------------
// Two-mode assembly from reconstructed +/- modes

// rho_AB = U (rho_- (x) rho_+) U^dagger with U the 50:50 beam splitter, the
// inverse of the rotation used when sampling; the "-" mode occupies the
// first slot so that (squeezed vacuum, vacuum) maps back to the half-split
// squeezed vacuum.
inline DensityMatrix assemble_from_plus_minus(const DensityMatrix& rho_minus,
                                              const DensityMatrix& rho_plus) {
  if (rho_minus.num_modes() != 1 || rho_plus.num_modes() != 1)
    throw DimensionError("assemble_from_plus_minus: single-mode inputs required");
  int da = rho_minus.total_dim(), db = rho_plus.total_dim();
  DensityMatrix prod = tensor(rho_minus, rho_plus);
  Eigen::MatrixXd u = bs_pair_matrix(da, db, M_PI / 4.0);
  Eigen::MatrixXcd out = u * prod.rho * u.transpose();
  DensityMatrix rho(out, {da, db});
  // the truncated beam splitter is unitary only up to the discarded
  // high-photon sectors; renormalize the small leak away
  return rho.normalized();
}

// ---------------------------------------------------------------------------
// Data-size extrapolation (E_N vs N) and bootstrap uncertainty

struct ExtrapolationPoint {
  double n = 0.0;       // samples per subset
  double mean_en = 0.0;
  double std_en = 0.0;  // population std over subsets (0 for a single subset)
};

struct ExtrapolationFit {
  double a = 0.0;  // asymptotic negativity
  double b = 0.0;  // noise coefficient, expected >= 0
  std::vector<ExtrapolationPoint> points;
  double residual = 0.0;  // L2 norm of fit residuals
  std::vector<std::string> warnings;
};

// Least squares for E_N(N) = a + b/sqrt(N) over the given points.
inline ExtrapolationFit fit_inverse_sqrt(const std::vector<ExtrapolationPoint>& pts) {
  if (pts.size() < 2)
    throw InvalidStateError("fit_inverse_sqrt: need at least two points");
  Eigen::MatrixXd m(pts.size(), 2);
  Eigen::VectorXd y(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    m(i, 0) = 1.0;
    m(i, 1) = 1.0 / std::sqrt(pts[i].n);
    y(i) = pts[i].mean_en;
  }
  Eigen::Vector2d coef = m.colPivHouseholderQr().solve(y);
  ExtrapolationFit fit;
  fit.a = coef(0);
  fit.b = coef(1);
  fit.points = pts;
  fit.residual = (m * coef - y).norm();
  if (fit.b < 0.0)
    fit.warnings.push_back("negative noise coefficient b = " +
                           std::to_string(fit.b));
  return fit;
}

namespace detail {

// Stratified partition: within each phase, samples are dealt round-robin to
// the subsets, so every subset sees all phases in equal proportion.
inline std::vector<QuadratureDataset> partition_stratified(
    const QuadratureDataset& ds, int n_subsets) {
  std::vector<QuadratureDataset> out(n_subsets);
  for (auto& s : out) {
    s.mode = ds.mode;
    s.seed = ds.seed;
    s.source = ds.source;
  }
  std::vector<double> ph = ds.phases();
  std::vector<long> counter(ph.size(), 0);
  for (const QuadratureSample& s : ds.samples) {
    size_t k = 0;
    while (k < ph.size() && std::abs(ph[k] - s.theta) > 1e-12) ++k;
    if (k == ph.size())
      throw InvalidStateError("partition_stratified: unknown phase");
    out[counter[k]++ % n_subsets].samples.push_back(s);
  }
  return out;
}

struct SubsetNegativity {
  std::vector<double> values;
  std::vector<std::string> warnings;
};

// MLE-reconstruct both modes of each subset pair and compute E_N of the
// assembled two-mode state; non-converged subsets are dropped with a note.
inline SubsetNegativity subset_negativities(
    const std::vector<QuadratureDataset>& minus_subsets,
    const std::vector<QuadratureDataset>& plus_subsets, int d_recon) {
  SubsetNegativity out;
  for (size_t j = 0; j < minus_subsets.size(); ++j) {
    ReconstructionResult rm = mle_reconstruct(minus_subsets[j], d_recon);
    ReconstructionResult rp = mle_reconstruct(plus_subsets[j], d_recon);
    if (!rm.converged || !rp.converged) {
      out.warnings.push_back("subset " + std::to_string(j) +
                             " dropped: MLE did not converge");
      continue;
    }
    out.values.push_back(
        log_negativity(assemble_from_plus_minus(rm.rho, rp.rho)));
  }
  return out;
}

inline ExtrapolationPoint summarize(const std::vector<double>& vals, double n) {
  ExtrapolationPoint p;
  p.n = n;
  for (double v : vals) p.mean_en += v;
  p.mean_en /= vals.size();
  for (double v : vals) p.std_en += (v - p.mean_en) * (v - p.mean_en);
  p.std_en = std::sqrt(p.std_en / vals.size());
  return p;
}

}  // namespace detail

inline std::vector<long> default_subset_counts() { return {1, 2, 4, 8, 16}; }

// Appendix-B-style analysis: sample N_full two-mode events from the product
// truth state, partition into d subsets per d in d_list (phase-stratified),
// reconstruct each subset, average E_N, and fit a + b/sqrt(N).
inline ExtrapolationFit negativity_vs_datasize(
    const DensityMatrix& truth_minus, const DensityMatrix& truth_plus,
    long n_full, const std::vector<double>& phases, int d_recon,
    const std::vector<long>& d_list, std::uint64_t seed) {
  if (d_list.size() < 2)
    throw InvalidStateError("negativity_vs_datasize: need >= 2 subset counts");
  auto [plus, minus] =
      joint_sample_and_rotate_phases(truth_minus, truth_plus, phases, n_full, seed);
  ExtrapolationFit fit;
  std::vector<ExtrapolationPoint> pts;
  for (long d : d_list) {
    if (d < 1)
      throw InvalidStateError("negativity_vs_datasize: subset counts >= 1");
    std::vector<QuadratureDataset> ms =
        detail::partition_stratified(minus, static_cast<int>(d));
    std::vector<QuadratureDataset> ps =
        detail::partition_stratified(plus, static_cast<int>(d));
    detail::SubsetNegativity sn = detail::subset_negativities(ms, ps, d_recon);
    for (const std::string& w : sn.warnings)
      fit.warnings.push_back("d=" + std::to_string(d) + ": " + w);
    if (sn.values.empty()) {
      fit.warnings.push_back("d=" + std::to_string(d) +
                             ": all subsets dropped, point skipped");
      continue;
    }
    pts.push_back(
        detail::summarize(sn.values, static_cast<double>(n_full) / d));
  }
  std::vector<std::string> warn = std::move(fit.warnings);
  fit = fit_inverse_sqrt(pts);
  warn.insert(warn.end(), fit.warnings.begin(), fit.warnings.end());
  fit.warnings = std::move(warn);
  return fit;
}

struct BootstrapReport {
  double mean = 0.0;
  double stddev = 0.0;
  int resamples = 0;
};

// Monte-Carlo error bar: repeat sample -> reconstruct -> E_N with
// independent derived seeds and report mean and (sample) std.
inline BootstrapReport bootstrap_uncertainty(const DensityMatrix& truth_minus,
                                             const DensityMatrix& truth_plus,
                                             long n, const std::vector<double>& phases,
                                             int d_recon, int b_resamples,
                                             std::uint64_t seed) {
  if (b_resamples < 20)
    throw InvalidStateError("bootstrap_uncertainty: need >= 20 resamples");
  std::vector<double> vals;
  vals.reserve(b_resamples);
  for (int k = 0; k < b_resamples; ++k) {
    auto [plus, minus] = joint_sample_and_rotate_phases(
        truth_minus, truth_plus, phases, n, derived_seed(seed, 7000 + k));
    ReconstructionResult rm = mle_reconstruct(minus, d_recon);
    ReconstructionResult rp = mle_reconstruct(plus, d_recon);
    vals.push_back(log_negativity(assemble_from_plus_minus(rm.rho, rp.rho)));
  }
  BootstrapReport rep;
  rep.resamples = b_resamples;
  for (double v : vals) rep.mean += v;
  rep.mean /= vals.size();
  for (double v : vals) rep.stddev += (v - rep.mean) * (v - rep.mean);
  rep.stddev = std::sqrt(rep.stddev / (vals.size() - 1));
  return rep;
}

inline std::string extrapolation_json(const ExtrapolationFit& fit) {
  char buf[128];
  std::string out = "{";
  std::snprintf(buf, sizeof(buf), "\"a\":%.17g,\"b\":%.17g,\"points\":[", fit.a,
                fit.b);
  out += buf;
  for (size_t i = 0; i < fit.points.size(); ++i) {
    const ExtrapolationPoint& p = fit.points[i];
    std::snprintf(buf, sizeof(buf),
                  "%s{\"n\":%.17g,\"mean_en\":%.17g,\"std_en\":%.17g}",
                  i ? "," : "", p.n, p.mean_en, p.std_en);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "],\"residual\":%.17g}", fit.residual);
  out += buf;
  return out;
}

}  // namespace distill
