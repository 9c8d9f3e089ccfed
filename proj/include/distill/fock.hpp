#pragma once

// Truncated Fock-space states and the elementary operators from which the
// distillation protocol states are built. All operations are pure functions;
// unitaries are applied either in closed form (photon-number-conserving
// beam splitters, handled block by block) or by exponentiating the truncated
// generator, with the leaked tail mass audited on every call.

#include <cmath>
#include <optional>

#include "distill/common.hpp"

namespace distill {

// ---------------------------------------------------------------------------
// State types

struct FockVector {
  Eigen::VectorXcd amps;

  FockVector() = default;
  explicit FockVector(Eigen::VectorXcd a) : amps(std::move(a)) {
    if (amps.size() < 2) throw DimensionError("FockVector: dim must be >= 2");
  }

  int dim() const { return static_cast<int>(amps.size()); }
  double norm() const { return amps.norm(); }

  FockVector normalized() const {
    double n = norm();
    if (n < 1e-14) throw ZeroNormError("FockVector: cannot normalize zero state");
    return FockVector(amps / n);
  }

  static FockVector vacuum(int d) {
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(d);
    a(0) = 1.0;
    return FockVector(std::move(a));
  }

  static FockVector number_state(int n, int d) {
    if (n >= d) throw DimensionError("FockVector: n >= dim");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(d);
    a(n) = 1.0;
    return FockVector(std::move(a));
  }
};

// Pure two-mode state; coeffs(m, n) is the amplitude of |m>_A |n>_B.
struct TwoModeFockState {
  Eigen::MatrixXcd coeffs;

  TwoModeFockState() = default;
  explicit TwoModeFockState(Eigen::MatrixXcd c) : coeffs(std::move(c)) {
    if (coeffs.rows() != coeffs.cols())
      throw DimensionError("TwoModeFockState: coefficient matrix must be square");
    if (coeffs.rows() < 2) throw DimensionError("TwoModeFockState: dim must be >= 2");
  }

  int dim() const { return static_cast<int>(coeffs.rows()); }
  double norm() const { return coeffs.norm(); }

  TwoModeFockState normalized() const {
    double n = norm();
    if (n < 1e-14) throw ZeroNormError("TwoModeFockState: zero state");
    return TwoModeFockState(coeffs / n);
  }

  // Row-major flattening, index m * D + n.
  Eigen::VectorXcd flat() const {
    int d = dim();
    Eigen::VectorXcd v(d * d);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) v(m * d + n) = coeffs(m, n);
    return v;
  }

  static TwoModeFockState product(const FockVector& a, const FockVector& b) {
    if (a.dim() != b.dim())
      throw DimensionError("TwoModeFockState::product: unequal mode dims");
    return TwoModeFockState(a.amps * b.amps.transpose());
  }

  TwoModeFockState truncated(int d, double* lost_mass = nullptr) const {
    if (d > dim()) throw DimensionError("truncated: cannot grow");
    Eigen::MatrixXcd c = coeffs.topLeftCorner(d, d);
    if (lost_mass) *lost_mass = coeffs.squaredNorm() - c.squaredNorm();
    return TwoModeFockState(std::move(c));
  }
};

// Mixed state over one mode (dims = {D}) or two modes (dims = {DA, DB},
// row-major mode ordering A (x) B).
struct DensityMatrix {
  Eigen::MatrixXcd rho;
  std::vector<int> mode_dims;

  DensityMatrix() = default;
  DensityMatrix(Eigen::MatrixXcd m, std::vector<int> dims)
      : rho(std::move(m)), mode_dims(std::move(dims)) {
    long total = 1;
    for (int d : mode_dims) total *= d;
    if (rho.rows() != total || rho.cols() != total)
      throw DimensionError("DensityMatrix: matrix size does not match mode dims");
  }

  int total_dim() const { return static_cast<int>(rho.rows()); }
  int num_modes() const { return static_cast<int>(mode_dims.size()); }
  double trace() const { return rho.trace().real(); }

  bool is_hermitian(double tol = 1e-10) const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff() < tol;
  }

  DensityMatrix normalized() const {
    double t = trace();
    if (t < 1e-14) throw ZeroNormError("DensityMatrix: zero trace");
    return DensityMatrix(rho / t, mode_dims);
  }

  static DensityMatrix from_pure(const FockVector& psi) {
    return DensityMatrix(psi.amps * psi.amps.adjoint(), {psi.dim()});
  }

  static DensityMatrix from_pure(const TwoModeFockState& psi) {
    Eigen::VectorXcd v = psi.flat();
    return DensityMatrix(v * v.adjoint(), {psi.dim(), psi.dim()});
  }
};

// Squeezing / tap parameters. lambda and lambda' are always derived from r.
struct ModeParams {
  double r = 0.0;          // squeezing parameter
  double R = 0.0;          // tap reflectance in [0, 1)
  double eta = 1.0;        // generic loss-channel efficiency in (0, 1]

  ModeParams() = default;
  ModeParams(double r_, double R_, double eta_ = 1.0) : r(r_), R(R_), eta(eta_) {
    if (R < 0.0 || R >= 1.0) throw InvalidStateError("ModeParams: R must be in [0,1)");
    if (eta <= 0.0 || eta > 1.0) throw InvalidStateError("ModeParams: eta must be in (0,1]");
  }

  double lambda() const { return std::tanh(r); }
  double lambda_prime() const { return std::tanh(r / 2.0); }
  double tap_angle() const { return std::asin(std::sqrt(R)); }
};

// ---------------------------------------------------------------------------
// Elementary operator matrices

inline Eigen::MatrixXcd annihilation_op(int d) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

inline Eigen::MatrixXcd number_op(int d) {
  Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = double(k);
  return n;
}

// x = (a + a†)/√2, p = (a − a†)/(i√2); vacuum variance 1/2.
inline Eigen::MatrixXcd quadrature_x_op(int d) {
  Eigen::MatrixXcd a = annihilation_op(d);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

inline Eigen::MatrixXcd quadrature_p_op(int d) {
  Eigen::MatrixXcd a = annihilation_op(d);
  return (a - a.adjoint()) / (cxd(0.0, 1.0) * std::sqrt(2.0));
}

// exp of a real antisymmetric matrix, via the Hermitian eigenproblem of -iG.
inline Eigen::MatrixXd exp_antisymmetric(const Eigen::MatrixXd& g) {
  Eigen::MatrixXcd h = cxd(0.0, -1.0) * g.cast<cxd>();  // Hermitian
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXcd ph(es.eigenvalues().size());
  for (int i = 0; i < ph.size(); ++i)
    ph(i) = std::exp(cxd(0.0, es.eigenvalues()(i)));
  Eigen::MatrixXcd u =
      es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  return u.real();
}

// Truncated single-mode squeezing operator S(r) = exp(r (a² − a†²)/2).
// With this sign, x is squeezed for r > 0 and the |2> amplitude is negative.
inline Eigen::MatrixXd squeeze_op(double r, int d) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  for (int n = 2; n < d; ++n) {
    double s = 0.5 * r * std::sqrt(double(n) * double(n - 1));
    g(n - 2, n) = s;    // a² part
    g(n, n - 2) = -s;   // -a†² part
  }
  return exp_antisymmetric(g);
}

// ---------------------------------------------------------------------------
// Squeezed vacuum (closed form)

// S(r)|0>: amplitudes c_{2n} = (-tanh r)^n sqrt((2n)!)/(2^n n!) / sqrt(cosh r).
// Fails if the untruncated tail mass beyond D exceeds tail_tol.
inline FockVector squeezed_vacuum(double r, int d, double tail_tol = kTailTol) {
  if (d < 2) throw DimensionError("squeezed_vacuum: D must be >= 2");
  if (std::abs(r) >= 5.0) throw InvalidStateError("squeezed_vacuum: |r| must be < 5");
  const double t = std::tanh(r);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(d);
  double c = 1.0 / std::sqrt(std::cosh(r));
  amps(0) = c;
  double kept = c * c;
  double tail = 0.0;
  // recurrence c_{2n} = c_{2n-2} * (-t) * sqrt((2n)(2n-1)) / (2n)
  for (int n = 1; n < 4096; ++n) {
    c *= -t * std::sqrt(double(2 * n) * double(2 * n - 1)) / double(2 * n);
    int k = 2 * n;
    if (k < d) {
      amps(k) = c;
      kept += c * c;
    } else {
      tail += c * c;
      if (c * c < 1e-30 * kept) break;
    }
  }
  if (tail > tail_tol)
    throw TruncationError("squeezed_vacuum: tail mass " + std::to_string(tail) +
                          " exceeds tolerance for given (r, D)");
  return FockVector(amps / std::sqrt(kept));
}

// Dimension large enough that the squeezed-vacuum tail mass is below tol.
inline int squeezed_vacuum_dim(double r, double tol = 1e-12) {
  for (int d = 2; d < 4096; d += 2) {
    try {
      squeezed_vacuum(r, d, tol);
      return d;
    } catch (const TruncationError&) {
    }
  }
  throw TruncationError("squeezed_vacuum_dim: no dimension satisfies tolerance");
}

// ---------------------------------------------------------------------------
// Exact second-moment operators (projections of the infinite-dimensional
// operators; squaring the truncated x/p would be wrong at the top level).

inline Eigen::MatrixXcd quadrature_x2_op(int d) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 0; n < d; ++n) m(n, n) = n + 0.5;
  for (int n = 0; n + 2 < d; ++n) {
    double s = std::sqrt(double(n + 1) * double(n + 2)) / 2.0;
    m(n, n + 2) = s;
    m(n + 2, n) = s;
  }
  return m;
}

inline Eigen::MatrixXcd quadrature_p2_op(int d) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 0; n < d; ++n) m(n, n) = n + 0.5;
  for (int n = 0; n + 2 < d; ++n) {
    double s = std::sqrt(double(n + 1) * double(n + 2)) / 2.0;
    m(n, n + 2) = -s;
    m(n + 2, n) = -s;
  }
  return m;
}

// (xp + px)/2 = (a² − a†²)/(2i)
inline Eigen::MatrixXcd quadrature_xp_sym_op(int d) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 0; n + 2 < d; ++n) {
    double s = std::sqrt(double(n + 1) * double(n + 2)) / 2.0;
    m(n, n + 2) = cxd(0.0, -s);
    m(n + 2, n) = cxd(0.0, s);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Ladder action

// Standard ladder action on one mode; output is unnormalized, its squared
// norm is the heralding weight. Vacuum input yields the zero state.
inline TwoModeFockState apply_annihilation(const TwoModeFockState& s, Mode mode) {
  int d = s.dim();
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(d, d);
  if (mode == Mode::A) {
    for (int m = 1; m < d; ++m)
      c.row(m - 1) += std::sqrt(double(m)) * s.coeffs.row(m);
  } else {
    for (int n = 1; n < d; ++n)
      c.col(n - 1) += std::sqrt(double(n)) * s.coeffs.col(n);
  }
  return TwoModeFockState(std::move(c));
}

// ---------------------------------------------------------------------------
// Beam splitter, B(θ) = exp(θ (a†_A a_B − a_A a†_B)), photon-number
// conserving. With this orientation S_A(−r/2)S_B(−r/2) B(π/4) S_A(r)|0,0>
// is the two-mode squeezed vacuum with a positive λ' = tanh(r/2); the
// alternative orientation differs only by the local phase (−1)^{n_B}.

// exp(θ G_N) on the total-photon-number-N block, basis |k>_A |N-k>_B, k=0..N.
inline Eigen::MatrixXd bs_block(int n_total, double theta) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_total + 1, n_total + 1);
  for (int k = 0; k < n_total; ++k) {
    double s = std::sqrt(double(k + 1) * double(n_total - k));
    g(k + 1, k) = s;   // a†_A a_B
    g(k, k + 1) = -s;  // -a_A a†_B
  }
  return exp_antisymmetric(theta * g);
}

// Sub-unitary beam-splitter matrix on the truncated product space
// (row index m * dj + n). Mass leaving the truncation window is leakage.
inline Eigen::MatrixXd bs_pair_matrix(int di, int dj, double theta) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(di * dj, di * dj);
  for (int nt = 0; nt <= di + dj - 2; ++nt) {
    Eigen::MatrixXd blk = bs_block(nt, theta);
    for (int m = std::max(0, nt - dj + 1); m <= std::min(nt, di - 1); ++m)
      for (int k = std::max(0, nt - dj + 1); k <= std::min(nt, di - 1); ++k)
        u(m * dj + (nt - m), k * dj + (nt - k)) = blk(m, k);
  }
  return u;
}

// Applies B(θ) to a normalized two-mode state. Leakage past the truncation
// window is reported through *leakage and must stay below leak_tol. The
// result is renormalized.
inline TwoModeFockState apply_beamsplitter(const TwoModeFockState& s, double theta,
                                           double* leakage = nullptr,
                                           double leak_tol = kLeakTol) {
  int d = s.dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  double lost = 0.0;
  for (int nt = 0; nt <= 2 * (d - 1); ++nt) {
    int lo = std::max(0, nt - d + 1), hi = std::min(nt, d - 1);
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(nt + 1);
    bool any = false;
    for (int k = lo; k <= hi; ++k) {
      in(k) = s.coeffs(k, nt - k);
      if (in(k) != cxd(0.0)) any = true;
    }
    if (!any) continue;
    Eigen::VectorXcd res = bs_block(nt, theta) * in;
    for (int k = 0; k <= nt; ++k) {
      if (k >= lo && k <= hi)
        out(k, nt - k) = res(k);
      else
        lost += std::norm(res(k));
    }
  }
  if (leakage) *leakage = lost;
  if (lost > leak_tol)
    throw TruncationError("apply_beamsplitter: tail leakage " +
                          std::to_string(lost) + " exceeds tolerance");
  return TwoModeFockState(std::move(out)).normalized();
}

// The half-split squeezed vacuum B(π/4) S_A(r)|0,0> at truncation d per
// mode. Built at an internally sufficient dimension so that the only loss is
// the audited projection onto the d x d window.
inline TwoModeFockState half_split_squeezed_vacuum(double r, int d,
                                                   double tail_tol = kTailTol,
                                                   double* lost_mass = nullptr) {
  int d_int = std::max(d, squeezed_vacuum_dim(r, 1e-13));
  FockVector sq = squeezed_vacuum(r, d_int, 1e-12);
  TwoModeFockState big = apply_beamsplitter(
      TwoModeFockState::product(sq, FockVector::vacuum(d_int)), M_PI / 4.0);
  double lost = 0.0;
  TwoModeFockState out = big.truncated(d, &lost);
  if (lost_mass) *lost_mass = lost;
  if (lost > tail_tol)
    throw TruncationError("half_split_squeezed_vacuum: projection lost " +
                          std::to_string(lost));
  return out.normalized();
}

// ---------------------------------------------------------------------------
// Local squeezing on a two-mode state

inline TwoModeFockState apply_local_squeezing(const TwoModeFockState& s, double r_a,
                                              double r_b, double* leakage = nullptr,
                                              double tail_tol = kTailTol) {
  int d = s.dim();
  Eigen::MatrixXcd c = s.coeffs;
  if (r_a != 0.0) c = squeeze_op(r_a, d).cast<cxd>() * c;
  if (r_b != 0.0) c = c * squeeze_op(r_b, d).cast<cxd>().transpose();
  double kept = c.squaredNorm();
  double lost = s.coeffs.squaredNorm() - kept;
  if (leakage) *leakage = lost;
  if (lost > tail_tol)
    throw TruncationError("apply_local_squeezing: truncation insufficient, lost " +
                          std::to_string(lost));
  return TwoModeFockState(std::move(c)).normalized();
}

// ---------------------------------------------------------------------------
// Loss channel (beam splitter with vacuum of transmittance eta, ancilla traced)

namespace detail {

// c_{k,n} = sqrt(C(n,k) eta^{n-k} (1-eta)^k): amplitude for losing k photons
// out of n.
inline Eigen::MatrixXd loss_kraus_coeffs(int d, double eta) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);  // (k, n)
  for (int n = 0; n < d; ++n) {
    double binom = 1.0;
    for (int k = 0; k <= n; ++k) {
      c(k, n) = std::sqrt(binom * std::pow(eta, n - k) * std::pow(1.0 - eta, k));
      binom *= double(n - k) / double(k + 1);
    }
  }
  return c;
}

}  // namespace detail

// Applies the loss map to the given mode (0-based). Trace preserving.
inline DensityMatrix loss_channel(const DensityMatrix& in, int mode, double eta) {
  if (eta <= 0.0 || eta > 1.0) throw InvalidStateError("loss_channel: eta in (0,1]");
  if (mode < 0 || mode >= in.num_modes())
    throw DimensionError("loss_channel: bad mode index");
  if (eta == 1.0) return in;
  int d = in.mode_dims[mode];
  Eigen::MatrixXd c = detail::loss_kraus_coeffs(d, eta);

  // Strides for the lossy index within the flattened row-major product space.
  long inner = 1;
  for (int i = mode + 1; i < in.num_modes(); ++i) inner *= in.mode_dims[i];
  long outer = in.rho.rows() / (inner * d);

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(in.rho.rows(), in.rho.cols());
  for (long ro = 0; ro < outer; ++ro)
    for (int m = 0; m < d; ++m)
      for (long ri = 0; ri < inner; ++ri) {
        long row_base = (ro * d + m) * inner + ri;
        for (long co = 0; co < outer; ++co)
          for (int n = 0; n < d; ++n)
            for (long ci = 0; ci < inner; ++ci) {
              long col_base = (co * d + n) * inner + ci;
              cxd acc = 0.0;
              int kmax = std::min(d - 1 - m, d - 1 - n);
              for (int k = 0; k <= kmax; ++k) {
                long row_src = (ro * d + (m + k)) * inner + ri;
                long col_src = (co * d + (n + k)) * inner + ci;
                acc += c(k, m + k) * c(k, n + k) * in.rho(row_src, col_src);
              }
              out(row_base, col_base) = acc;
            }
      }
  return DensityMatrix(std::move(out), in.mode_dims);
}

// ---------------------------------------------------------------------------
// Standard state utilities

inline DensityMatrix partial_trace(const DensityMatrix& in, Mode keep) {
  if (in.num_modes() != 2)
    throw DimensionError("partial_trace: two-mode input required");
  int da = in.mode_dims[0], db = in.mode_dims[1];
  if (keep == Mode::A) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(da, da);
    for (int m = 0; m < da; ++m)
      for (int n = 0; n < da; ++n)
        for (int k = 0; k < db; ++k) out(m, n) += in.rho(m * db + k, n * db + k);
    return DensityMatrix(std::move(out), {da});
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(db, db);
  for (int m = 0; m < db; ++m)
    for (int n = 0; n < db; ++n)
      for (int k = 0; k < da; ++k) out(m, n) += in.rho(k * db + m, k * db + n);
  return DensityMatrix(std::move(out), {db});
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.num_modes() != 1 || b.num_modes() != 1)
    throw DimensionError("tensor: single-mode factors required");
  int da = a.total_dim(), db = b.total_dim();
  Eigen::MatrixXcd out(da * db, da * db);
  for (int m = 0; m < da; ++m)
    for (int n = 0; n < da; ++n)
      out.block(m * db, n * db, db, db) = a.rho(m, n) * b.rho;
  return DensityMatrix(std::move(out), {da, db});
}

// Uhlmann fidelity, F = ||sqrt(rho) sqrt(sigma)||_1^2.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.total_dim() != b.total_dim())
    throw DimensionError("fidelity: dimension mismatch");
  Eigen::MatrixXcd m = hermitian_sqrt(a.rho) * hermitian_sqrt(b.rho);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  double s = svd.singularValues().sum();
  return s * s;
}

inline double fidelity(const FockVector& a, const FockVector& b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
  return std::norm(a.amps.dot(b.amps));
}

inline double fidelity(const TwoModeFockState& a, const TwoModeFockState& b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
  cxd ov = (a.coeffs.conjugate().cwiseProduct(b.coeffs)).sum();
  return std::norm(ov);
}

}  // namespace distill
