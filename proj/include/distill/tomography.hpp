#pragma once

// Simulated balanced homodyne detection and state reconstruction.
//
// The quadrature POVM at local-oscillator phase theta is the rank-one
// projector density |x, theta><x, theta| with
//     <n|x, theta> = e^{i n theta} psi_n(x),
// psi_n the Hermite functions under the vacuum-variance-1/2 convention, so
// p(x | theta) = sum_{mn} rho_{mn} e^{i(n-m) theta} psi_m(x) psi_n(x).
// Sampling is inverse-CDF on a cached 4096-point grid over [-10, 10] with a
// mt19937_64 stream; per-phase sub-streams are derived with splitmix64 so
// results are reproducible regardless of evaluation order.
// Reconstruction is the iterative maximum-likelihood R rho R fixed point on
// phase-binned samples.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "distill/common.hpp"
#include "distill/fock.hpp"

namespace distill {

// ---------------------------------------------------------------------------
// Quadrature POVM

// Hermite functions psi_0..psi_{d-1} at x:
// psi_0 = pi^{-1/4} e^{-x^2/2},  psi_n = x sqrt(2/n) psi_{n-1}
//                                        - sqrt((n-1)/n) psi_{n-2}.
inline Eigen::VectorXd hermite_functions(int d, double x) {
  Eigen::VectorXd psi(d);
  psi(0) = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
  if (d > 1) psi(1) = std::sqrt(2.0) * x * psi(0);
  for (int n = 2; n < d; ++n)
    psi(n) = x * std::sqrt(2.0 / n) * psi(n - 1) -
             std::sqrt(double(n - 1) / n) * psi(n - 2);
  return psi;
}

// <n|x, theta> = e^{i n theta} psi_n(x).
inline Eigen::VectorXcd quadrature_eigenvector(int d, double theta, double x) {
  Eigen::VectorXd psi = hermite_functions(d, x);
  Eigen::VectorXcd u(d);
  for (int n = 0; n < d; ++n) u(n) = std::polar(psi(n), n * theta);
  return u;
}

inline double quadrature_pdf(const DensityMatrix& rho, double theta, double x) {
  if (rho.num_modes() != 1)
    throw DimensionError("quadrature_pdf: single-mode input required");
  if (std::abs(rho.trace() - 1.0) > 1e-6)
    throw InvalidStateError("quadrature_pdf: trace-1 input required");
  Eigen::VectorXcd u = quadrature_eigenvector(rho.total_dim(), theta, x);
  double p = (u.adjoint() * rho.rho * u)(0, 0).real();
  return std::max(p, 0.0);
}

// ---------------------------------------------------------------------------
// Datasets

// The six local-oscillator phases of the standard protocol.
inline std::vector<double> standard_phases() {
  return {0.0, M_PI / 6.0, M_PI / 3.0, M_PI / 2.0, 2.0 * M_PI / 3.0,
          5.0 * M_PI / 6.0};
}

struct QuadratureSample {
  double x = 0.0;
  double theta = 0.0;
};

struct QuadratureDataset {
  std::vector<QuadratureSample> samples;
  std::string mode;         // "A", "B", "+", or "-"
  std::uint64_t seed = 0;   // master seed of the generating stream
  std::string source;       // description of the sampled state

  long size() const { return static_cast<long>(samples.size()); }

  std::vector<double> phases() const {
    std::vector<double> ph;
    for (const auto& s : samples) {
      bool found = false;
      for (double t : ph)
        if (std::abs(t - s.theta) < 1e-12) found = true;
      if (!found) ph.push_back(s.theta);
    }
    return ph;
  }
};

// splitmix64 step; derives independent per-phase sub-stream seeds.
inline std::uint64_t derived_seed(std::uint64_t master, std::uint64_t k) {
  std::uint64_t z = master + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

constexpr int kPdfGridPoints = 4096;
constexpr double kPdfGridHalfWidth = 10.0;

// Cached inverse-CDF sampler for one (state, phase) pair.
struct InverseCdf {
  Eigen::VectorXd xs, cdf;

  InverseCdf(const DensityMatrix& rho, double theta) {
    xs = Eigen::VectorXd::LinSpaced(kPdfGridPoints, -kPdfGridHalfWidth,
                                    kPdfGridHalfWidth);
    cdf.resize(kPdfGridPoints);
    double acc = 0.0;
    double dx = xs(1) - xs(0);
    double prev = quadrature_pdf(rho, theta, xs(0));
    cdf(0) = 0.0;
    for (int i = 1; i < kPdfGridPoints; ++i) {
      double cur = quadrature_pdf(rho, theta, xs(i));
      acc += 0.5 * (prev + cur) * dx;
      cdf(i) = acc;
      prev = cur;
    }
    if (acc < 1.0 - 1e-4)
      throw InvalidStateError("InverseCdf: pdf mass " + std::to_string(acc) +
                              " escapes the sampling window");
    cdf /= acc;
  }

  double draw(double u) const {
    // binary search for the bracketing grid cell, then linear interpolation
    int lo = 0, hi = kPdfGridPoints - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (cdf(mid) < u)
        lo = mid;
      else
        hi = mid;
    }
    double span = cdf(hi) - cdf(lo);
    double t = span > 0.0 ? (u - cdf(lo)) / span : 0.5;
    return xs(lo) + t * (xs(hi) - xs(lo));
  }
};

}  // namespace detail

// n i.i.d. draws from p(x | theta); deterministic for a fixed seed.
inline QuadratureDataset sample_homodyne(const DensityMatrix& rho, double theta,
                                         long n, std::uint64_t seed) {
  if (n < 1) throw InvalidStateError("sample_homodyne: n >= 1 required");
  detail::InverseCdf inv(rho, theta);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  QuadratureDataset ds;
  ds.seed = seed;
  ds.samples.reserve(n);
  for (long i = 0; i < n; ++i)
    ds.samples.push_back({inv.draw(uni(rng)), theta});
  return ds;
}

// n_total draws spread over the given phases (per-phase counts equal within
// one), each phase on its own splitmix64-derived sub-stream.
inline QuadratureDataset sample_homodyne_phases(
    const DensityMatrix& rho, const std::vector<double>& phases, long n_total,
    std::uint64_t seed) {
  if (phases.empty())
    throw InvalidStateError("sample_homodyne_phases: need >= 1 phase");
  QuadratureDataset ds;
  ds.seed = seed;
  long base = n_total / static_cast<long>(phases.size());
  long extra = n_total % static_cast<long>(phases.size());
  for (size_t k = 0; k < phases.size(); ++k) {
    long nk = base + (static_cast<long>(k) < extra ? 1 : 0);
    if (nk == 0) continue;
    QuadratureDataset part =
        sample_homodyne(rho, phases[k], nk, derived_seed(seed, k));
    ds.samples.insert(ds.samples.end(), part.samples.begin(),
                      part.samples.end());
  }
  return ds;
}

// Joint equal-phase sampling of a factorizable two-mode state: the +/-
// modes are independent, so (x_-, x_+) are drawn from the two factors and
// mapped to the site quadratures x_A = (x_+ + x_-)/sqrt(2),
// x_B = (x_+ - x_-)/sqrt(2); rotating the pairs back recovers exactly the
// drawn +/- values, which are returned as (plus, minus) datasets.
inline std::pair<QuadratureDataset, QuadratureDataset> joint_sample_and_rotate(
    const DensityMatrix& rho_minus, const DensityMatrix& rho_plus, double theta,
    long n, std::uint64_t seed) {
  QuadratureDataset minus =
      sample_homodyne(rho_minus, theta, n, derived_seed(seed, 101));
  QuadratureDataset plus =
      sample_homodyne(rho_plus, theta, n, derived_seed(seed, 202));
  minus.mode = "-";
  plus.mode = "+";
  minus.seed = plus.seed = seed;
  return {plus, minus};
}

// Multi-phase variant covering the standard protocol phase set.
inline std::pair<QuadratureDataset, QuadratureDataset>
joint_sample_and_rotate_phases(const DensityMatrix& rho_minus,
                               const DensityMatrix& rho_plus,
                               const std::vector<double>& phases, long n_total,
                               std::uint64_t seed) {
  QuadratureDataset plus, minus;
  plus.mode = "+";
  minus.mode = "-";
  plus.seed = minus.seed = seed;
  long base = n_total / static_cast<long>(phases.size());
  long extra = n_total % static_cast<long>(phases.size());
  for (size_t k = 0; k < phases.size(); ++k) {
    long nk = base + (static_cast<long>(k) < extra ? 1 : 0);
    if (nk == 0) continue;
    auto [p, m] = joint_sample_and_rotate(rho_minus, rho_plus, phases[k], nk,
                                          derived_seed(seed, 1000 + k));
    plus.samples.insert(plus.samples.end(), p.samples.begin(), p.samples.end());
    minus.samples.insert(minus.samples.end(), m.samples.begin(),
                         m.samples.end());
  }
  return {plus, minus};
}

// ---------------------------------------------------------------------------
// Maximum-likelihood reconstruction (iterative R rho R)

struct ReconstructionResult {
  DensityMatrix rho;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  bool likelihood_monotone = true;
};

// Expectation-maximization fixed point rho <- N[R(rho) rho R(rho)] with
// R(rho) = sum_k f_k Pi_k / p_k(rho), samples binned per phase (256 bins
// over the sampling window) to bound the cost. Stops when the relative
// log-likelihood gain drops below tol; non-convergence sets a flag rather
// than throwing.
inline ReconstructionResult mle_reconstruct(const QuadratureDataset& dataset,
                                            int d, int max_iter = 2000,
                                            double tol = 1e-9,
                                            int bins_per_phase = 256) {
  if (d < 2) throw DimensionError("mle_reconstruct: d >= 2 required");
  if (dataset.samples.empty())
    throw InvalidStateError("mle_reconstruct: empty dataset");

  const double half = detail::kPdfGridHalfWidth;
  std::vector<double> phases = dataset.phases();
  // bin the samples per phase
  std::vector<Eigen::VectorXcd> proj;   // quadrature eigenvectors
  std::vector<double> counts;
  for (size_t k = 0; k < phases.size(); ++k) {
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(bins_per_phase);
    for (const auto& s : dataset.samples) {
      if (std::abs(s.theta - phases[k]) > 1e-12) continue;
      int b = static_cast<int>((s.x + half) / (2.0 * half) * bins_per_phase);
      b = std::min(std::max(b, 0), bins_per_phase - 1);
      hist(b) += 1.0;
    }
    for (int b = 0; b < bins_per_phase; ++b) {
      if (hist(b) == 0.0) continue;
      double xc = -half + (b + 0.5) * (2.0 * half) / bins_per_phase;
      proj.push_back(quadrature_eigenvector(d, phases[k], xc));
      counts.push_back(hist(b));
    }
  }
  const long nb = static_cast<long>(proj.size());
  Eigen::MatrixXcd u(d, nb);
  for (long b = 0; b < nb; ++b) u.col(b) = proj[b];
  Eigen::VectorXd f(nb);
  for (long b = 0; b < nb; ++b) f(b) = counts[b];

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d) / double(d);
  ReconstructionResult res;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXcd b = rho * u;  // d x nb
    Eigen::VectorXd p(nb);
    for (long j = 0; j < nb; ++j)
      p(j) = std::max(u.col(j).dot(b.col(j)).real(), 1e-300);
    double ll = 0.0;
    for (long j = 0; j < nb; ++j) ll += f(j) * std::log(p(j));
    if (ll + 1e-9 * std::abs(ll) < prev_ll) res.likelihood_monotone = false;
    res.iterations = it + 1;
    res.log_likelihood = ll;
    if (it > 0 && ll - prev_ll < tol * std::abs(ll)) {
      res.converged = true;
      break;
    }
    prev_ll = ll;
    Eigen::MatrixXcd r = u * (f.array() / p.array()).matrix().asDiagonal() *
                         u.adjoint();
    rho = r * rho * r;
    rho = 0.5 * (rho + rho.adjoint().eval());
    rho /= rho.trace().real();
  }
  res.rho = DensityMatrix(rho, {d});
  return res;
}

}  // namespace distill
