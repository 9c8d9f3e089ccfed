#include <catch2/catch_amalgamated.hpp>

#include "distill/fock.hpp"

using namespace distill;
using Catch::Approx;

namespace {

// Independent oracle: closed-form squeezed-vacuum amplitudes via factorials.
double sqvac_amp(double r, int n2) {
  int n = n2 / 2;
  double logfact2n = std::lgamma(2.0 * n + 1.0);
  double logfactn = std::lgamma(n + 1.0);
  double mag = std::exp(0.5 * logfact2n - n * std::log(2.0) - logfactn) *
               std::pow(std::tanh(std::abs(r)), n) / std::sqrt(std::cosh(r));
  double sign = (r > 0 && n % 2 == 1) ? -1.0 : 1.0;
  return sign * mag;
}

TwoModeFockState half_split_sqvac(double r, int d) {
  FockVector sq = squeezed_vacuum(r, d);
  return apply_beamsplitter(TwoModeFockState::product(sq, FockVector::vacuum(d)),
                            M_PI / 4.0);
}

}  // namespace

TEST_CASE("squeezed_vacuum r=0 is the vacuum") {
  FockVector v = squeezed_vacuum(0.0, 10);
  REQUIRE(std::abs(v.amps(0)) == Approx(1.0).margin(1e-14));
  REQUIRE(v.amps.tail(9).norm() == Approx(0.0).margin(1e-14));
}

TEST_CASE("squeezed_vacuum amplitude ratio and parity") {
  FockVector v = squeezed_vacuum(0.368, 20);
  double ratio = (v.amps(2) / v.amps(0)).real();
  REQUIRE(ratio == Approx(-std::tanh(0.368) / std::sqrt(2.0)).epsilon(1e-10));
  for (int n = 1; n < 20; n += 2) REQUIRE(std::abs(v.amps(n)) == 0.0);
}

TEST_CASE("squeezed_vacuum matches closed-form coefficients") {
  FockVector v = squeezed_vacuum(0.5, 20);
  REQUIRE(v.norm() == Approx(1.0).margin(1e-12));
  for (int n = 0; n < 12; n += 2)
    REQUIRE(v.amps(n).real() == Approx(sqvac_amp(0.5, n)).margin(1e-10));
}

TEST_CASE("squeezed_vacuum fails loudly when truncation is insufficient") {
  REQUIRE_THROWS_AS(squeezed_vacuum(2.0, 6), TruncationError);
  REQUIRE_THROWS_AS(squeezed_vacuum(5.5, 64), InvalidStateError);
}

TEST_CASE("annihilation on vacuum gives zero state") {
  TwoModeFockState vac =
      TwoModeFockState::product(FockVector::vacuum(4), FockVector::vacuum(4));
  REQUIRE(apply_annihilation(vac, Mode::A).norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("annihilation ladder algebra") {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(4, 4);
  c(2, 0) = 1.0;  // |2,0>
  TwoModeFockState out = apply_annihilation(TwoModeFockState(c), Mode::A);
  REQUIRE(std::abs(out.coeffs(1, 0) - std::sqrt(2.0)) < 1e-14);
  REQUIRE(out.norm() == Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("single subtraction at small r approaches the Bell state") {
  TwoModeFockState psi0 = half_split_sqvac(0.02, 12);
  TwoModeFockState sub = apply_annihilation(psi0, Mode::A).normalized();
  // Maximally entangled up to the local (-1)^{n_B} phase:
  // a_A |Psi_0> -> (|0,1> - |1,0>)/sqrt(2) as r -> 0.
  Eigen::MatrixXcd bell = Eigen::MatrixXcd::Zero(12, 12);
  bell(0, 1) = 1.0 / std::sqrt(2.0);
  bell(1, 0) = -1.0 / std::sqrt(2.0);
  REQUIRE(fidelity(sub, TwoModeFockState(bell)) > 1.0 - 1e-3);
}

TEST_CASE("beamsplitter theta=0 is identity") {
  TwoModeFockState psi = half_split_sqvac(0.3, 16);
  TwoModeFockState out = apply_beamsplitter(psi, 0.0);
  REQUIRE(fidelity(psi, out) == Approx(1.0).margin(1e-14));
}

TEST_CASE("half beamsplitter reproduces the perturbative expansion") {
  // B(pi/4) S_A(r)|0,0> = |0,0> - lambda/(2*sqrt(2)) (|0,2> - sqrt(2)|1,1> + |2,0>)
  // + O(lambda^2); the |1,1> sign follows the (-1)^{n_B} phase convention
  // noted at bs_block.
  double r = 0.2, lam = std::tanh(r);
  TwoModeFockState psi = half_split_sqvac(r, 16);
  cxd c00 = psi.coeffs(0, 0);
  double tol = lam * lam * 0.5;  // O(lambda^2) headroom
  REQUIRE(std::abs((psi.coeffs(0, 2) / c00).real() + lam / (2.0 * std::sqrt(2.0))) < tol);
  REQUIRE(std::abs((psi.coeffs(2, 0) / c00).real() + lam / (2.0 * std::sqrt(2.0))) < tol);
  REQUIRE(std::abs((psi.coeffs(1, 1) / c00).real() - lam / 2.0) < tol);
}

TEST_CASE("beamsplitter unitarity: forward then backward") {
  TwoModeFockState psi = half_split_sqvac(0.4, 20);
  TwoModeFockState back =
      apply_beamsplitter(apply_beamsplitter(psi, 0.3), -0.3);
  REQUIRE(fidelity(psi, back) > 1.0 - 1e-10);
}

TEST_CASE("beamsplitter conserves total photon number") {
  // Start from |1,2>: output must live entirely on m+n == 3.
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(6, 6);
  c(1, 2) = 1.0;
  TwoModeFockState out = apply_beamsplitter(TwoModeFockState(c), 0.7);
  double off = 0.0;
  for (int m = 0; m < 6; ++m)
    for (int n = 0; n < 6; ++n)
      if (m + n != 3) off += std::norm(out.coeffs(m, n));
  REQUIRE(off < 1e-20);
}

TEST_CASE("local squeezing identity and norm preservation") {
  TwoModeFockState psi = half_split_sqvac(0.4, 25);
  TwoModeFockState same = apply_local_squeezing(psi, 0.0, 0.0);
  REQUIRE(fidelity(psi, same) == Approx(1.0).margin(1e-14));
  double leak = 1.0;
  apply_local_squeezing(psi, -0.2, -0.2, &leak);
  REQUIRE(leak < 1e-8);
}

TEST_CASE("local squeezing maps half-split squeezed vacuum to TMSV") {
  double r = 0.4;
  int d = 25;
  TwoModeFockState psi = half_split_sqvac(r, d);
  TwoModeFockState out = apply_local_squeezing(psi, -r / 2.0, -r / 2.0);
  double lp = std::tanh(r / 2.0);
  Eigen::MatrixXcd tmsv = Eigen::MatrixXcd::Zero(d, d);
  for (int n = 0; n < d; ++n) tmsv(n, n) = std::pow(lp, n);
  TwoModeFockState ref = TwoModeFockState(tmsv).normalized();
  REQUIRE(fidelity(out, ref) > 0.9999);
}

TEST_CASE("loss channel eta=1 is the identity") {
  DensityMatrix rho = DensityMatrix::from_pure(squeezed_vacuum(0.3, 12));
  DensityMatrix out = loss_channel(rho, 0, 1.0);
  REQUIRE((out.rho - rho.rho).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("loss channel on a single photon") {
  DensityMatrix rho = DensityMatrix::from_pure(FockVector::number_state(1, 4));
  DensityMatrix out = loss_channel(rho, 0, 0.5);
  REQUIRE(out.rho(1, 1).real() == Approx(0.5).margin(1e-12));
  REQUIRE(out.rho(0, 0).real() == Approx(0.5).margin(1e-12));
  REQUIRE(out.trace() == Approx(1.0).margin(1e-12));
}

TEST_CASE("loss channel scales mean photon number by eta") {
  DensityMatrix rho = DensityMatrix::from_pure(squeezed_vacuum(0.4, 24));
  double n0 = (number_op(24) * rho.rho).trace().real();
  DensityMatrix out = loss_channel(rho, 0, 0.7);
  double n1 = (number_op(24) * out.rho).trace().real();
  REQUIRE(n1 == Approx(0.7 * n0).epsilon(1e-9));
}

TEST_CASE("loss channels compose multiplicatively") {
  DensityMatrix rho = DensityMatrix::from_pure(squeezed_vacuum(0.3, 16));
  DensityMatrix a = loss_channel(loss_channel(rho, 0, 0.8), 0, 0.6);
  DensityMatrix b = loss_channel(rho, 0, 0.48);
  REQUIRE((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("loss channel acts on the requested mode of a two-mode state") {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(3, 3);
  c(1, 0) = 1.0;  // |1,0>
  DensityMatrix rho = DensityMatrix::from_pure(TwoModeFockState(c));
  DensityMatrix lossy_b = loss_channel(rho, 1, 0.5);
  REQUIRE((lossy_b.rho - rho.rho).cwiseAbs().maxCoeff() < 1e-14);  // B is vacuum
  DensityMatrix lossy_a = loss_channel(rho, 0, 0.5);
  DensityMatrix red_a = partial_trace(lossy_a, Mode::A);
  REQUIRE(red_a.rho(1, 1).real() == Approx(0.5).margin(1e-12));
}

TEST_CASE("partial trace of a product state") {
  TwoModeFockState vac =
      TwoModeFockState::product(FockVector::vacuum(4), FockVector::vacuum(4));
  DensityMatrix red = partial_trace(DensityMatrix::from_pure(vac), Mode::B);
  REQUIRE(red.rho(0, 0).real() == Approx(1.0).margin(1e-14));
  REQUIRE(red.trace() == Approx(1.0).margin(1e-14));
}

TEST_CASE("fidelity basics") {
  DensityMatrix rho = DensityMatrix::from_pure(squeezed_vacuum(0.3, 12));
  REQUIRE(fidelity(rho, rho) == Approx(1.0).margin(1e-9));
  DensityMatrix zero = DensityMatrix::from_pure(FockVector::number_state(0, 12));
  DensityMatrix one = DensityMatrix::from_pure(FockVector::number_state(1, 12));
  REQUIRE(fidelity(zero, one) == Approx(0.0).margin(1e-12));
  REQUIRE_THROWS_AS(
      fidelity(zero, DensityMatrix::from_pure(FockVector::vacuum(8))),
      DimensionError);
}

TEST_CASE("uhlmann fidelity agrees with the pure-state overlap on mixtures") {
  // F(rho, |0><0|) = <0|rho|0>
  DensityMatrix rho = DensityMatrix::from_pure(FockVector::number_state(1, 6));
  DensityMatrix mixed = loss_channel(rho, 0, 0.7);
  DensityMatrix vac = DensityMatrix::from_pure(FockVector::vacuum(6));
  REQUIRE(fidelity(mixed, vac) == Approx(mixed.rho(0, 0).real()).margin(1e-10));
}

TEST_CASE("tensor product of density matrices") {
  DensityMatrix a = DensityMatrix::from_pure(FockVector::number_state(1, 3));
  DensityMatrix b = DensityMatrix::from_pure(FockVector::vacuum(3));
  DensityMatrix ab = tensor(a, b);
  REQUIRE(ab.rho(1 * 3 + 0, 1 * 3 + 0).real() == Approx(1.0).margin(1e-14));
  REQUIRE(ab.trace() == Approx(1.0).margin(1e-14));
}
