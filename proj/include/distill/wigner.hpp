#pragma once

// Wigner-function evaluation in the truncated Fock basis via the
// displaced-parity expansion
//     W(x, p) = (1/pi) sum_{mn} rho_{mn} (-1)^m <n|D(beta)|m>,
// with beta = sqrt(2)(x + i p), so that the vacuum gives
// (1/pi) exp(-x^2 - p^2) and the grid integrates to 1 over dx dp.
// Also provides uniform grids with CSV export and the factorized two-mode
// form W(x_A,p_A,x_B,p_B) = W_-(x_-,p_-) W_+(x_+,p_+) in the rotated basis
// x_pm = (x_A +/- x_B)/sqrt(2).

#include <string>

#include "distill/common.hpp"
#include "distill/fock.hpp"

namespace distill {

namespace detail {

// Matrix elements <k|D(beta)|l> of the displacement operator, from the
// closed form with associated Laguerre polynomials, filled one diagonal
// offset at a time with the stable three-term recurrence.
inline Eigen::MatrixXcd displacement_matrix(int d, cxd beta) {
  const double y = std::norm(beta);
  const double pref = std::exp(-0.5 * y);
  Eigen::MatrixXcd m(d, d);
  for (int a = 0; a < d; ++a) {  // offset a = k - l >= 0
    double ratio = 1.0;          // sqrt(l! / (l + a)!)
    for (int j = 1; j <= a; ++j) ratio /= std::sqrt(double(j));
    cxd ba = std::pow(beta, a);
    cxd ba_conj = std::pow(-std::conj(beta), a);
    double lm2 = 0.0, lm1 = 0.0;
    for (int l = 0; l + a < d; ++l) {
      double lag;
      if (l == 0)
        lag = 1.0;
      else if (l == 1)
        lag = 1.0 + a - y;
      else
        lag = ((2.0 * (l - 1) + 1.0 + a - y) * lm1 - (l - 1.0 + a) * lm2) / l;
      m(l + a, l) = pref * ratio * ba * lag;
      if (a > 0) m(l, l + a) = pref * ratio * ba_conj * lag;
      lm2 = lm1;
      lm1 = lag;
      ratio *= std::sqrt(double(l + 1) / double(l + 1 + a));
    }
  }
  return m;
}

}  // namespace detail

inline double wigner_point(const DensityMatrix& rho, double x, double p) {
  if (rho.num_modes() != 1)
    throw DimensionError("wigner_point: single-mode input required");
  if (std::abs(rho.trace() - 1.0) > 1e-6)
    throw InvalidStateError("wigner_point: trace-1 input required");
  const int d = rho.total_dim();
  Eigen::MatrixXcd disp =
      detail::displacement_matrix(d, std::sqrt(2.0) * cxd(x, p));
  cxd w = 0.0;
  for (int m = 0; m < d; ++m) {
    double parity = (m % 2 == 0) ? 1.0 : -1.0;
    for (int n = 0; n < d; ++n) w += rho.rho(m, n) * parity * disp(n, m);
  }
  return w.real() / M_PI;
}

// Product form of the factorizable two-mode Wigner function evaluated at
// (x_A, p_A, x_B, p_B) through the +/- rotation.
inline double factorized_two_mode_wigner(const DensityMatrix& rho_minus,
                                         const DensityMatrix& rho_plus,
                                         double x_a, double p_a, double x_b,
                                         double p_b) {
  const double s = 1.0 / std::sqrt(2.0);
  return wigner_point(rho_minus, s * (x_a - x_b), s * (p_a - p_b)) *
         wigner_point(rho_plus, s * (x_a + x_b), s * (p_a + p_b));
}

struct WignerGrid {
  Eigen::VectorXd xs, ps;
  Eigen::MatrixXd values;  // values(i, j) = W(xs(j), ps(i))

  double integral() const {
    if (xs.size() < 2 || ps.size() < 2)
      throw DimensionError("WignerGrid::integral: need at least 2x2 points");
    double dx = xs(1) - xs(0), dp = ps(1) - ps(0);
    return values.sum() * dx * dp;
  }

  double min_value() const { return values.minCoeff(); }
};

inline WignerGrid wigner_grid(const DensityMatrix& rho, double x_min,
                              double x_max, int nx, double p_min, double p_max,
                              int np) {
  if (nx < 2 || np < 2) throw DimensionError("wigner_grid: need >= 2 points");
  WignerGrid g;
  g.xs = Eigen::VectorXd::LinSpaced(nx, x_min, x_max);
  g.ps = Eigen::VectorXd::LinSpaced(np, p_min, p_max);
  g.values.resize(np, nx);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nx; ++j)
      g.values(i, j) = wigner_point(rho, g.xs(j), g.ps(i));
  return g;
}

// Default export grid: [-5, 5]^2 at 201 x 201.
inline WignerGrid wigner_grid(const DensityMatrix& rho) {
  return wigner_grid(rho, -5.0, 5.0, 201, -5.0, 5.0, 201);
}

// CSV layout: header row of x values (first cell blank), then one row per p
// value with the p coordinate in the first column.
inline std::string wigner_csv(const WignerGrid& g) {
  std::string out;
  char buf[64];
  for (int j = 0; j < g.xs.size(); ++j) {
    std::snprintf(buf, sizeof(buf), ",%.17g", g.xs(j));
    out += buf;
  }
  out += '\n';
  for (int i = 0; i < g.ps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", g.ps(i));
    out += buf;
    for (int j = 0; j < g.xs.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", g.values(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace distill
