#pragma once

// Covariance-matrix layer: symmetrized second moments of Fock-basis states,
// the closed-form Gaussian covariance matrices of the protocol, and the
// local-squeezing congruence. Ordering is (x_A, p_A, x_B, p_B) with vacuum
// variance 1/2.

#include "distill/common.hpp"
#include "distill/fock.hpp"

namespace distill {

struct CovarianceMatrix2M {
  Eigen::Matrix4d v;

  CovarianceMatrix2M() : v(Eigen::Matrix4d::Zero()) {}
  explicit CovarianceMatrix2M(Eigen::Matrix4d m) : v(std::move(m)) {
    if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw InvalidStateError("CovarianceMatrix2M: not symmetric");
  }

  static CovarianceMatrix2M vacuum() {
    return CovarianceMatrix2M(0.5 * Eigen::Matrix4d::Identity());
  }
};

// Standard symplectic form in (x_A, p_A, x_B, p_B) ordering.
inline Eigen::Matrix4d symplectic_form() {
  Eigen::Matrix4d o = Eigen::Matrix4d::Zero();
  o(0, 1) = 1.0; o(1, 0) = -1.0;
  o(2, 3) = 1.0; o(3, 2) = -1.0;
  return o;
}

// Symplectic eigenvalues: moduli of the eigenvalues of i Omega V (one per
// pair), ascending.
inline Eigen::Vector2d symplectic_eigenvalues(const CovarianceMatrix2M& cm) {
  Eigen::MatrixXcd m =
      cxd(0.0, 1.0) * symplectic_form().cast<cxd>() * cm.v.cast<cxd>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  std::vector<double> mags;
  for (int i = 0; i < 4; ++i) mags.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mags.begin(), mags.end());
  // eigenvalues come in +/- pairs; take one of each
  return Eigen::Vector2d(mags[1], mags[3]);
}

// All ten independent symmetrized second moments of a two-mode Fock state.
// The state must have zero first moments.
inline CovarianceMatrix2M covariance_of(const DensityMatrix& rho,
                                        double mean_tol = 1e-8) {
  if (rho.num_modes() != 2)
    throw DimensionError("covariance_of: two-mode input required");
  int da = rho.mode_dims[0], db = rho.mode_dims[1];
  Eigen::MatrixXcd ia = Eigen::MatrixXcd::Identity(da, da);
  Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(db, db);
  auto kron = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j)
        out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
  };
  std::array<Eigen::MatrixXcd, 4> ops = {
      kron(quadrature_x_op(da), ib), kron(quadrature_p_op(da), ib),
      kron(ia, quadrature_x_op(db)), kron(ia, quadrature_p_op(db))};
  for (const auto& op : ops) {
    double mean = std::abs((op * rho.rho).trace());
    if (mean > mean_tol)
      throw InvalidStateError("covariance_of: nonzero displacement " +
                              std::to_string(mean));
  }
  auto ev = [&](const Eigen::MatrixXcd& op) {
    return (op * rho.rho).trace().real();
  };
  Eigen::Matrix4d v;
  // same-mode blocks use the exact second-moment operators
  v(0, 0) = ev(kron(quadrature_x2_op(da), ib));
  v(1, 1) = ev(kron(quadrature_p2_op(da), ib));
  v(0, 1) = v(1, 0) = ev(kron(quadrature_xp_sym_op(da), ib));
  v(2, 2) = ev(kron(ia, quadrature_x2_op(db)));
  v(3, 3) = ev(kron(ia, quadrature_p2_op(db)));
  v(2, 3) = v(3, 2) = ev(kron(ia, quadrature_xp_sym_op(db)));
  // cross-mode blocks: operators commute, products of exact projections
  v(0, 2) = v(2, 0) = ev(kron(quadrature_x_op(da), quadrature_x_op(db)));
  v(0, 3) = v(3, 0) = ev(kron(quadrature_x_op(da), quadrature_p_op(db)));
  v(1, 2) = v(2, 1) = ev(kron(quadrature_p_op(da), quadrature_x_op(db)));
  v(1, 3) = v(3, 1) = ev(kron(quadrature_p_op(da), quadrature_p_op(db)));
  return CovarianceMatrix2M(v);
}

// Covariance of the half-split squeezed vacuum B(pi/4) S_A(r)|0,0>.
inline CovarianceMatrix2M hssv_covariance(double r) {
  if (std::abs(r) >= 5.0) throw InvalidStateError("hssv_covariance: |r| < 5");
  double ch = std::cosh(r), sh = std::sinh(r);
  double em = std::exp(-r), ep = std::exp(r);
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = v(2, 2) = em * ch / 2.0;
  v(1, 1) = v(3, 3) = ep * ch / 2.0;
  v(0, 2) = v(2, 0) = em * sh / 2.0;
  v(1, 3) = v(3, 1) = -ep * sh / 2.0;
  return CovarianceMatrix2M(v);
}

// Covariance of the two-mode squeezed vacuum with squeezing parameter s.
inline CovarianceMatrix2M tmsv_covariance(double s) {
  if (std::abs(s) >= 5.0) throw InvalidStateError("tmsv_covariance: |s| < 5");
  double ch = std::cosh(2.0 * s), sh = std::sinh(2.0 * s);
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = v(1, 1) = v(2, 2) = v(3, 3) = ch / 2.0;
  v(0, 2) = v(2, 0) = sh / 2.0;
  v(1, 3) = v(3, 1) = -sh / 2.0;
  return CovarianceMatrix2M(v);
}

// Congruence V -> S V S^T with S = diag(e^{-rA}, e^{rA}, e^{-rB}, e^{rB}),
// matching the operator convention where S(r) squeezes x for r > 0.
inline CovarianceMatrix2M local_squeeze_cov(const CovarianceMatrix2M& cm,
                                            double r_a, double r_b) {
  Eigen::Vector4d d(std::exp(-r_a), std::exp(r_a), std::exp(-r_b), std::exp(r_b));
  Eigen::Matrix4d s = d.asDiagonal();
  return CovarianceMatrix2M(s * cm.v * s.transpose());
}

// Loss map at the covariance level: V -> eta V + (1 - eta)/2 I, applied to
// both modes with the same efficiency.
inline CovarianceMatrix2M loss_cov(const CovarianceMatrix2M& cm, double eta) {
  return CovarianceMatrix2M(eta * cm.v +
                            (1.0 - eta) * 0.5 * Eigen::Matrix4d::Identity());
}

// Gaussian-formula logarithmic negativity, -log2(2 nu_-) for the smallest
// symplectic eigenvalue nu_- of the partially transposed covariance.
// Used as an oracle for Gaussian states only.
inline double gaussian_log_negativity(const CovarianceMatrix2M& cm) {
  Eigen::Matrix4d p = Eigen::Matrix4d::Identity();
  p(3, 3) = -1.0;  // partial transpose flips p_B
  CovarianceMatrix2M pt(p * cm.v * p);
  double nu = symplectic_eigenvalues(pt)(0);
  return std::max(0.0, -std::log2(2.0 * nu));
}

// CSV export: 4 rows x 4 columns at 17 significant digits.
inline std::string covariance_csv(const CovarianceMatrix2M& cm) {
  std::string out;
  char buf[64];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g%s", cm.v(i, j), j == 3 ? "\n" : ",");
      out += buf;
    }
  }
  return out;
}

}  // namespace distill
