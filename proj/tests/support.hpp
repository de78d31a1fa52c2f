#pragma once

// Test-only generators and independent reference computations.

#include <random>

#include <Eigen/Eigenvalues>

#include "polent/qstate.hpp"

namespace polent::fixtures {

inline cplx gaussian_complex(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

inline Ket4 random_ket4(std::mt19937_64& rng) {
  Ket4 v;
  for (int i = 0; i < 4; ++i) v(i) = gaussian_complex(rng);
  return v.normalized();
}

inline Ket2 random_ket2(std::mt19937_64& rng) {
  Ket2 v(gaussian_complex(rng), gaussian_complex(rng));
  return v.normalized();
}

/// Haar-random 2x2 unitary via QR of a Ginibre matrix.
inline Mat2 random_unitary2(std::mt19937_64& rng) {
  Mat2 g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = gaussian_complex(rng);
  Eigen::HouseholderQR<Mat2> qr(g);
  Mat2 q = qr.householderQ();
  const Mat2 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 2; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

/// Hilbert-Schmidt random mixed state (full rank with probability one).
inline DensityMatrix random_mixed(std::mt19937_64& rng) {
  Mat4 g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = gaussian_complex(rng);
  Mat4 m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

inline Mat2 random_qubit_density(std::mt19937_64& rng) {
  Mat2 g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = gaussian_complex(rng);
  Mat2 m = g * g.adjoint();
  return m / m.trace().real();
}

/// Concurrence straight from the definition: square roots of the
/// eigenvalues of rho (Y rho* Y), via a general (non-Hermitian) eigensolver.
inline double concurrence_reference(const Mat4& rho) {
  Mat2 sy;
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  const Mat4 yy = kron(sy, sy);
  const Mat4 r = rho * yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Mat4> es(r);
  std::array<double, 4> l;
  for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  std::sort(l.rbegin(), l.rend());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

inline double frobenius(const Mat4& a, const Mat4& b) { return (a - b).norm(); }

} // namespace polent::fixtures
