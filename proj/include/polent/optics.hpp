#pragma once

#include <span>
#include <vector>

#include "polent/qstate.hpp"

namespace polent {

/// 2x2 polarization transform in the (H, V) basis.
class JonesOperator {
public:
  JonesOperator() : m_(Mat2::Identity()) {}
  explicit JonesOperator(const Mat2& m) : m_(m) {}

  const Mat2& matrix() const { return m_; }
  bool is_unitary(double tol = 1e-12) const {
    return (m_ * m_.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff() <= tol;
  }
  Ket2 operator*(const Ket2& k) const { return m_ * k; }
  JonesOperator operator*(const JonesOperator& o) const { return JonesOperator(m_ * o.m_); }

private:
  Mat2 m_;
};

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Linear retarder with its fast axis at `angle` from H. Retardance pi is a
/// half-wave plate, pi/2 a quarter-wave plate.
inline JonesOperator waveplate(double retardance, double angle) {
  Mat2 core = Mat2::Zero();
  core(0, 0) = 1.0;
  core(1, 1) = std::polar(1.0, retardance);
  return JonesOperator(rotation(angle) * core * rotation(-angle));
}

enum class Arm { first = 1, second = 2 };

inline Arm arm_from_index(int index) {
  if (index == 1) return Arm::first;
  if (index == 2) return Arm::second;
  throw invalid_input("arm must be 1 or 2");
}

/// Embeds a single-photon operator into the two-photon space.
inline Mat4 lift(const Mat2& op, Arm arm) {
  return arm == Arm::first ? kron(op, Mat2::Identity()) : kron(Mat2::Identity(), op);
}

/// Completely positive, trace non-increasing single-photon map acting on one arm.
class KrausChannel {
public:
  KrausChannel(std::vector<Mat2> operators, Arm arm) : ops_(std::move(operators)), arm_(arm) {
    if (ops_.empty()) throw invalid_input("Kraus channel needs at least one operator");
    Mat2 sum = Mat2::Zero();
    for (const auto& k : ops_) sum += k.adjoint() * k;
    const Mat2 slack = Mat2::Identity() - sum;
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (slack + slack.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) throw invalid_input("Kraus operators increase the trace");
  }

  static KrausChannel identity(Arm arm = Arm::first) { return KrausChannel({Mat2::Identity()}, arm); }
  static KrausChannel unitary(const JonesOperator& j, Arm arm = Arm::first) {
    if (!j.is_unitary(1e-10)) throw invalid_input("Jones operator is not unitary");
    return KrausChannel({j.matrix()}, arm);
  }

  const std::vector<Mat2>& operators() const { return ops_; }
  Arm arm() const { return arm_; }

private:
  std::vector<Mat2> ops_;
  Arm arm_;
};

inline KrausChannel polarizer(double angle, Arm arm = Arm::first) {
  return KrausChannel({projector(ket::linear(angle))}, arm);
}

/*!
 * Polarization-dependent coupling loss: amplitude transmissions sqrt(eta_H)
 * and sqrt(eta_V) on the chosen arm. Post-selecting on coincidences turns
 * an unequal pair into a filter that unbalances |HH> against |VV>.
 */
inline KrausChannel anisotropic_coupler(double eta_h, double eta_v, Arm arm = Arm::first) {
  if (!(eta_h >= 0.0 && eta_h <= 1.0) || !(eta_v >= 0.0 && eta_v <= 1.0))
    throw invalid_input("coupling efficiencies must lie in [0, 1]");
  Mat2 k = Mat2::Zero();
  k(0, 0) = std::sqrt(eta_h);
  k(1, 1) = std::sqrt(eta_v);
  return KrausChannel({k}, arm);
}

struct ChannelOutcome {
  DensityMatrix state;
  double success_probability;
};

inline constexpr double annihilation_threshold = 1e-12;

inline ChannelOutcome apply_channel(const DensityMatrix& rho, const KrausChannel& ch) {
  Mat4 out = Mat4::Zero();
  for (const auto& k : ch.operators()) {
    const Mat4 big = lift(k, ch.arm());
    out += big * rho.matrix() * big.adjoint();
  }
  out = 0.5 * (out + out.adjoint());
  const double p = out.trace().real();
  if (!(p >= annihilation_threshold)) throw state_annihilated("channel output has vanishing trace");
  return {DensityMatrix(out / p), std::min(p, 1.0)};
}

/// Applies channels in order; the success probability is the product of stage successes.
inline ChannelOutcome apply_chain(const DensityMatrix& rho, std::span<const KrausChannel> chain) {
  ChannelOutcome acc{rho, 1.0};
  for (const auto& ch : chain) {
    auto step = apply_channel(acc.state, ch);
    acc = {step.state, acc.success_probability * step.success_probability};
  }
  return acc;
}

struct SinglePhotonOutcome {
  Mat2 state;
  double success_probability;
};

/// Single-photon version of apply_channel; the channel's arm is ignored.
inline SinglePhotonOutcome apply_channel(const Mat2& rho1, const KrausChannel& ch) {
  Mat2 out = Mat2::Zero();
  for (const auto& k : ch.operators()) out += k * rho1 * k.adjoint();
  out = 0.5 * (out + out.adjoint());
  const double p = out.trace().real();
  if (!(p >= annihilation_threshold)) throw state_annihilated("channel output has vanishing trace");
  return {out / p, std::min(p, 1.0)};
}

//---------------------------------------------------------------------------//
// Noise
//---------------------------------------------------------------------------//

enum class NoiseModel { white, dephasing };

inline NoiseModel parse_noise_model(std::string_view s) {
  if (s == "white" || s == "depolarizing") return NoiseModel::white;
  if (s == "dephasing") return NoiseModel::dephasing;
  throw invalid_input("unknown noise model '" + std::string(s) + "'");
}

inline const char* to_string(NoiseModel m) { return m == NoiseModel::white ? "white" : "dephasing"; }

/// (1-p) rho + p I/4.
inline DensityMatrix depolarize(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_input("noise fraction must lie in [0, 1]");
  return DensityMatrix((1.0 - p) * rho.matrix() + p * Mat4::Identity() / 4.0);
}

/// (1-p) rho + p diag(rho): loss of coherence between the four product states.
inline DensityMatrix dephase(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_input("noise fraction must lie in [0, 1]");
  Mat4 diag = rho.matrix().diagonal().asDiagonal();
  return DensityMatrix((1.0 - p) * rho.matrix() + p * diag);
}

inline DensityMatrix apply_noise(const DensityMatrix& rho, NoiseModel model, double p) {
  return model == NoiseModel::white ? depolarize(rho, p) : dephase(rho, p);
}

//---------------------------------------------------------------------------//
// Compensation and single-photon transmission
//---------------------------------------------------------------------------//

/// Pump angle theta (source cos|HH> + sin|VV>) whose post-selected output
/// through the coupler is balanced again: tan(theta) = sqrt(eta_H / eta_V).
inline double pump_compensation(double eta_h, double eta_v) {
  if (!(eta_h > 0.0) || !(eta_v > 0.0)) throw invalid_input("compensation needs nonzero efficiencies");
  return std::atan2(std::sqrt(eta_h), std::sqrt(eta_v));
}

/// Transmission of linear input polarization at each angle: eta_H cos^2 + eta_V sin^2.
inline std::vector<double> transmission_fringe(double eta_h, double eta_v, std::span<const double> angles) {
  std::vector<double> out;
  out.reserve(angles.size());
  for (double a : angles) {
    const double c = std::cos(a), s = std::sin(a);
    out.push_back(eta_h * c * c + eta_v * s * s);
  }
  return out;
}

} // namespace polent
