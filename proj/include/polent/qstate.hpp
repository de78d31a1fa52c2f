#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>

#include "polent/core.hpp"

namespace polent {

//---------------------------------------------------------------------------//
// Two-qubit polarization states and the metrics computed on them.
//
// Basis order is fixed as (HH, HV, VH, VV) everywhere, including files.
//---------------------------------------------------------------------------//

enum class BellKind { phi_plus, phi_minus, psi_plus, psi_minus };

inline BellKind parse_bell_kind(std::string_view label) {
  if (label == "phi+" || label == "Phi+" || label == "Φ⁺") return BellKind::phi_plus;
  if (label == "phi-" || label == "Phi-" || label == "Φ⁻") return BellKind::phi_minus;
  if (label == "psi+" || label == "Psi+" || label == "Ψ⁺") return BellKind::psi_plus;
  if (label == "psi-" || label == "Psi-" || label == "Ψ⁻") return BellKind::psi_minus;
  throw invalid_input("unknown Bell state label '" + std::string(label) + "'");
}

class PureState {
public:
  static constexpr double norm_tolerance = 1e-12;

  /// Throws unless the amplitudes are normalized.
  explicit PureState(const Ket4& amplitudes) : amps_(amplitudes) {
    if (std::abs(amps_.squaredNorm() - 1.0) > norm_tolerance)
      throw invalid_input("pure state amplitudes are not normalized");
  }

  static PureState normalized(const Ket4& amplitudes) {
    const double n = amplitudes.norm();
    if (n == 0.0) throw invalid_input("cannot normalize the zero vector");
    return PureState(Ket4(amplitudes / n));
  }

  const Ket4& amplitudes() const { return amps_; }
  cplx operator[](int i) const { return amps_(i); }

private:
  Ket4 amps_;
};

/// Checks the density-matrix invariants; returns an empty string when valid.
inline std::string density_violation(const Mat4& m) {
  constexpr double herm_tol = 1e-10, trace_tol = 1e-10, psd_floor = -1e-9;
  if (!m.allFinite()) return "matrix has non-finite entries";
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > herm_tol) return "matrix is not Hermitian";
  if (std::abs(m.trace() - cplx(1.0, 0.0)) > trace_tol) return "trace is not 1";
  const Mat4 h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < psd_floor) return "matrix is not positive semidefinite";
  return {};
}

/// A 4x4 Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
public:
  explicit DensityMatrix(const Mat4& m) {
    if (auto why = density_violation(m); !why.empty()) throw invalid_input("invalid density matrix: " + why);
    m_ = 0.5 * (m + m.adjoint());
  }

  const Mat4& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }

private:
  Mat4 m_;
};

inline PureState bell_state(BellKind kind) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (kind) {
  case BellKind::phi_plus: return PureState(Ket4(s, 0, 0, s));
  case BellKind::phi_minus: return PureState(Ket4(s, 0, 0, -s));
  case BellKind::psi_plus: return PureState(Ket4(0, s, s, 0));
  case BellKind::psi_minus: return PureState(Ket4(0, s, -s, 0));
  }
  throw invalid_input("unknown Bell state kind");
}

inline PureState bell_state(std::string_view label) { return bell_state(parse_bell_kind(label)); }

/// cos(theta)|HH> + sin(theta)|VV>, theta in [0, pi/2].
inline PureState schmidt_pure(double theta) {
  if (!(theta >= 0.0 && theta <= pi / 2))
    throw invalid_input("Schmidt angle must lie in [0, pi/2]");
  return PureState(Ket4(std::cos(theta), 0, 0, std::sin(theta)));
}

inline PureState product_state(const Ket2& a, const Ket2& b) { return PureState::normalized(product(a, b)); }

inline DensityMatrix to_density(const PureState& psi) {
  const Ket4& v = psi.amplitudes();
  Mat4 m = v * v.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

inline DensityMatrix maximally_mixed() { return DensityMatrix(Mat4::Identity() / 4.0); }

inline double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

/// <psi|rho|psi>, the squared-overlap fidelity with a pure target.
inline double fidelity_with_pure(const DensityMatrix& rho, const PureState& psi) {
  const Ket4& v = psi.amplitudes();
  const double f = (v.adjoint() * rho.matrix() * v)(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

struct Eigensystem {
  std::array<double, 4> values;   // descending
  std::array<Ket4, 4> vectors;    // largest-magnitude component real-positive
};

namespace detail {

inline Ket4 fix_phase(Ket4 v) {
  int pivot = 0;
  double best = -1.0;
  for (int i = 0; i < 4; ++i) {
    // Ties go to the lowest index so that equal-weight states get a stable phase.
    if (std::abs(v(i)) > best + 1e-12) {
      best = std::abs(v(i));
      pivot = i;
    }
  }
  if (best > 0.0) v *= std::conj(v(pivot)) / std::abs(v(pivot));
  return v;
}

inline const Mat4& sigma_yy() {
  static const Mat4 y = [] {
    Mat4 m = Mat4::Zero();
    m(0, 3) = -1.0;
    m(1, 2) = 1.0;
    m(2, 1) = 1.0;
    m(3, 0) = -1.0;
    return m;
  }();
  return y;
}

} // namespace detail

/// Eigen-decomposition of a Hermitian matrix, sorted descending.
inline Eigensystem eigen_hermitian(const Mat4& hermitian) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (hermitian + hermitian.adjoint()));
  Eigensystem out;
  for (int i = 0; i < 4; ++i) {
    out.values[i] = es.eigenvalues()(3 - i);
    out.vectors[i] = detail::fix_phase(es.eigenvectors().col(3 - i));
  }
  return out;
}

inline Eigensystem eigen_hermitian(const DensityMatrix& rho) { return eigen_hermitian(rho.matrix()); }

/// Dominant eigenvector as a normalized pure state.
inline PureState top_eigenvector(const DensityMatrix& rho) {
  return PureState::normalized(eigen_hermitian(rho).vectors[0]);
}

/*!
 * Wootters concurrence.
 *
 * The decreasing square roots of the eigenvalues of rho (Y rho* Y) are the
 * singular values of tau = W^T Y W, where rho = W W^H and Y = sigma_y (x)
 * sigma_y. Working with tau avoids taking square roots of eigenvalues that
 * are zero up to rounding, which would otherwise leak ~1e-8 errors into
 * pure-state results.
 */
inline double concurrence(const DensityMatrix& rho) {
  const Eigensystem es = eigen_hermitian(rho);
  Mat4 w;
  for (int i = 0; i < 4; ++i) w.col(i) = std::sqrt(std::max(es.values[i], 0.0)) * es.vectors[i];
  const Mat4 tau = w.transpose() * detail::sigma_yy() * w;
  Eigen::JacobiSVD<Mat4> svd(tau);
  const auto& s = svd.singularValues();  // descending
  return std::clamp(s(0) - s(1) - s(2) - s(3), 0.0, 1.0);
}

struct MetricReport {
  double concurrence = 0.0;
  double fidelity_target = 0.0;
  double purity = 0.0;
  std::array<double, 4> eigen_spectrum{};
};

inline MetricReport metric_report(const DensityMatrix& rho, const PureState& target) {
  return {concurrence(rho), fidelity_with_pure(rho, target), purity(rho), eigen_hermitian(rho).values};
}

} // namespace polent
