#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace polent {

using cplx = std::complex<double>;

// Single-photon polarization in the (H, V) basis.
using Ket2 = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2cd;

// Two-photon polarization in the (HH, HV, VH, VV) basis; photon 1 is the
// major index.
using Ket4 = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double pi = std::numbers::pi;

/// Raised when an argument violates an operation's precondition.
class invalid_input : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a lossy channel leaves (numerically) nothing to post-select on.
class state_annihilated : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace ket {

inline Ket2 H() { return Ket2(1.0, 0.0); }
inline Ket2 V() { return Ket2(0.0, 1.0); }
inline Ket2 D() { return Ket2(1.0, 1.0) / std::sqrt(2.0); }
inline Ket2 A() { return Ket2(1.0, -1.0) / std::sqrt(2.0); }
inline Ket2 R() { return Ket2(cplx(1.0, 0.0), cplx(0.0, 1.0)) / std::sqrt(2.0); }
inline Ket2 L() { return Ket2(cplx(1.0, 0.0), cplx(0.0, -1.0)) / std::sqrt(2.0); }

/// Linear polarization at `angle` from H.
inline Ket2 linear(double angle) { return Ket2(std::cos(angle), std::sin(angle)); }

/// Equatorial (diagonal/circular great circle) polarization (H + e^{i phase} V)/sqrt(2).
inline Ket2 equatorial(double phase) {
  return Ket2(cplx(1.0, 0.0), std::polar(1.0, phase)) / std::sqrt(2.0);
}

/// The polarization orthogonal to `k`.
inline Ket2 orthogonal(const Ket2& k) { return Ket2(-std::conj(k(1)), std::conj(k(0))); }

} // namespace ket

/// |a> (x) |b>, photon 1 first.
inline Ket4 product(const Ket2& a, const Ket2& b) {
  Ket4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(2 * i + j) = a(i) * b(j);
  return out;
}

inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

inline Mat2 projector(const Ket2& k) { return k * k.adjoint(); }

} // namespace polent
