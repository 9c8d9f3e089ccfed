#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace distill {

using cxd = std::complex<double>;

// Default tolerances used by the state-construction layer.
inline constexpr double kNormTol = 1e-10;
inline constexpr double kTailTol = 1e-6;   // untruncated tail mass budget
inline constexpr double kLeakTol = 1e-8;   // per-call unitary leakage budget

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroNormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { A = 0, B = 1 };

inline int mode_index(Mode m) { return static_cast<int>(m); }

// Hermitian square root with eigenvalue clamping at zero.
inline Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace distill
