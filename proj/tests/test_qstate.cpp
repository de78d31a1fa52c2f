#include <gtest/gtest.h>

#include "polent/optics.hpp"
#include "polent/qstate.hpp"
#include "support.hpp"

using namespace polent;

namespace {

// Normalized form of the printed eigenstate 0.801|HH> + 0.594|VV>.
const double kTildeTheta = std::atan(0.594 / 0.801);

} // namespace

TEST(BellState, PhiPlusAmplitudes) {
  const auto phi = bell_state(BellKind::phi_plus);
  EXPECT_NEAR(phi[0].real(), 0.70710678, 1e-8);
  EXPECT_EQ(phi[1], cplx(0.0));
  EXPECT_EQ(phi[2], cplx(0.0));
  EXPECT_NEAR(phi[3].real(), 0.70710678, 1e-8);
}

TEST(BellState, PhiMinusIsOrthogonalPartner) {
  const auto m = bell_state(BellKind::phi_minus);
  EXPECT_NEAR(m[3].real(), -0.70710678, 1e-8);
  EXPECT_NEAR(std::abs(m.amplitudes().dot(bell_state(BellKind::phi_plus).amplitudes())), 0.0, 1e-15);
}

TEST(BellState, AllLabelsNormalizedPureAndMaximallyEntangled) {
  for (const char* label : {"phi+", "phi-", "psi+", "psi-"}) {
    const auto psi = bell_state(label);
    EXPECT_NEAR(psi.amplitudes().squaredNorm(), 1.0, 1e-15) << label;
    const auto rho = to_density(psi);
    EXPECT_NEAR(purity(rho), 1.0, 1e-12) << label;
    EXPECT_NEAR(concurrence(rho), 1.0, 1e-12) << label;
  }
}

TEST(BellState, UnknownLabelRejected) { EXPECT_THROW(bell_state("chi+"), invalid_input); }

TEST(PureState, RejectsUnnormalized) {
  EXPECT_THROW(PureState(Ket4(1, 0, 0, 1)), invalid_input);
  EXPECT_NO_THROW(PureState::normalized(Ket4(1, 0, 0, 1)));
}

TEST(SchmidtPure, BalancedAngleIsPhiPlus) {
  const auto s = schmidt_pure(pi / 4);
  EXPECT_NEAR((s.amplitudes() - bell_state(BellKind::phi_plus).amplitudes()).norm(), 0.0, 1e-15);
}

TEST(SchmidtPure, PrintedEigenstateRenormalized) {
  // atan(0.594/0.801) = 0.638086, amplitudes (0.803237, 0.595659) by direct evaluation
  EXPECT_NEAR(kTildeTheta, 0.638086, 1e-6);
  const auto s = schmidt_pure(kTildeTheta);
  EXPECT_NEAR(s[0].real(), 0.803237, 1e-6);
  EXPECT_NEAR(s[3].real(), 0.595659, 1e-6);
}

TEST(SchmidtPure, ZeroAngleIsProductState) {
  const auto rho = to_density(schmidt_pure(0.0));
  EXPECT_NEAR(concurrence(rho), 0.0, 1e-15);
  EXPECT_NEAR(rho(0, 0).real(), 1.0, 1e-15);
}

TEST(SchmidtPure, OutOfRangeRejected) {
  EXPECT_THROW(schmidt_pure(-0.01), invalid_input);
  EXPECT_THROW(schmidt_pure(pi / 2 + 0.01), invalid_input);
}

TEST(ToDensity, PhiPlusCorners) {
  const auto rho = to_density(bell_state(BellKind::phi_plus));
  for (auto [r, c] : {std::pair{0, 0}, {0, 3}, {3, 0}, {3, 3}}) EXPECT_NEAR(rho(r, c).real(), 0.5, 1e-15);
  EXPECT_NEAR(rho(1, 1).real(), 0.0, 1e-15);
}

TEST(ToDensity, ProductStateIsDiagonalProjector) {
  const auto rho = to_density(product_state(ket::H(), ket::H()));
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = 1.0;
  EXPECT_NEAR((rho.matrix() - expected).norm(), 0.0, 1e-15);
}

TEST(DensityMatrix, RejectsInvalid) {
  Mat4 m = Mat4::Identity() / 4.0;
  m(0, 1) = 0.1;  // not Hermitian
  EXPECT_THROW(DensityMatrix{m}, invalid_input);
  EXPECT_THROW(DensityMatrix{Mat4(Mat4::Identity() / 2.0)}, invalid_input);  // trace 2
  Mat4 neg = Mat4::Zero();
  neg.diagonal() << 0.6, 0.5, 0.0, -0.1;
  EXPECT_THROW(DensityMatrix{neg}, invalid_input);
}

TEST(DensityMatrix, TinyNegativeEigenvalueAccepted) {
  Mat4 m = Mat4::Zero();
  m.diagonal() << 0.5 + 5e-10, 0.3, 0.2, -5e-10;
  EXPECT_NO_THROW(DensityMatrix{m});
  EXPECT_GE(concurrence(DensityMatrix(m)), 0.0);
}

TEST(Concurrence, Anchors) {
  EXPECT_NEAR(concurrence(to_density(bell_state(BellKind::phi_plus))), 1.0, 1e-12);
  EXPECT_NEAR(concurrence(maximally_mixed()), 0.0, 1e-15);
  // sin(2 * 0.638086) = 0.956911 for the renormalized printed eigenstate
  EXPECT_NEAR(concurrence(to_density(schmidt_pure(kTildeTheta))), 0.956911, 1e-6);
}

TEST(Concurrence, SchmidtFamilyMatchesSinTwoTheta) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, pi / 2);
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng);
    EXPECT_NEAR(concurrence(to_density(schmidt_pure(t))), std::abs(std::sin(2 * t)), 1e-9);
  }
}

TEST(Concurrence, PureStatesMatchDeterminantFormula) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto psi = PureState(fixtures::random_ket4(rng));
    const double expected = 2.0 * std::abs(psi[0] * psi[3] - psi[1] * psi[2]);
    EXPECT_NEAR(concurrence(to_density(psi)), expected, 1e-9);
  }
}

TEST(Concurrence, MixedStatesMatchDefinition) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto base = fixtures::random_mixed(rng);
    // bias toward entangled states so the max(0, .) branch is exercised both ways
    const auto rho = DensityMatrix(0.5 * base.matrix() + 0.5 * to_density(PureState(fixtures::random_ket4(rng))).matrix());
    EXPECT_NEAR(concurrence(rho), fixtures::concurrence_reference(rho.matrix()), 1e-7);
  }
}

TEST(Concurrence, InvariantUnderLocalUnitaries) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto rho = DensityMatrix(0.3 * fixtures::random_mixed(rng).matrix() +
                                   0.7 * to_density(PureState(fixtures::random_ket4(rng))).matrix());
    const Mat4 u = kron(fixtures::random_unitary2(rng), fixtures::random_unitary2(rng));
    const auto rotated = DensityMatrix(u * rho.matrix() * u.adjoint());
    EXPECT_NEAR(concurrence(rho), concurrence(rotated), 1e-9);
  }
}

TEST(Fidelity, Anchors) {
  const auto phi = bell_state(BellKind::phi_plus);
  EXPECT_NEAR(fidelity_with_pure(to_density(phi), phi), 1.0, 1e-15);
  EXPECT_NEAR(fidelity_with_pure(to_density(phi), bell_state(BellKind::phi_minus)), 0.0, 1e-15);
  // ((0.803237 + 0.595659) / sqrt 2)^2 = 0.978456
  EXPECT_NEAR(fidelity_with_pure(to_density(schmidt_pure(kTildeTheta)), phi), 0.978456, 1e-6);
}

TEST(Fidelity, EqualsTraceWithProjector) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto rho = fixtures::random_mixed(rng);
    const auto psi = PureState(fixtures::random_ket4(rng));
    const Mat4 proj = psi.amplitudes() * psi.amplitudes().adjoint();
    EXPECT_NEAR(fidelity_with_pure(rho, psi), (rho.matrix() * proj).trace().real(), 1e-12);
  }
}

TEST(EigenHermitian, Diagonal) {
  Mat4 m = Mat4::Zero();
  m.diagonal() << 0.5, 0.3, 0.2, 0.0;
  const auto es = eigen_hermitian(DensityMatrix(m));
  const std::array<double, 4> expected{0.5, 0.3, 0.2, 0.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(es.values[i], expected[i], 1e-15);
    EXPECT_NEAR(std::abs(es.vectors[i](i)), 1.0, 1e-15);
    EXPECT_NEAR(es.vectors[i](i).imag(), 0.0, 1e-15);
    EXPECT_GT(es.vectors[i](i).real(), 0.0);
  }
}

TEST(EigenHermitian, RankOneBellState) {
  const auto phi = bell_state(BellKind::phi_plus);
  const auto es = eigen_hermitian(to_density(phi));
  EXPECT_NEAR(es.values[0], 1.0, 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(es.values[i], 0.0, 1e-12);
  EXPECT_NEAR((es.vectors[0] - phi.amplitudes()).norm(), 0.0, 1e-12);
}

TEST(EigenHermitian, ReconstructsAndSumsToOne) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto rho = fixtures::random_mixed(rng);
    const auto es = eigen_hermitian(rho);
    Mat4 back = Mat4::Zero();
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      back += es.values[k] * es.vectors[k] * es.vectors[k].adjoint();
      sum += es.values[k];
      if (k > 0) EXPECT_GE(es.values[k - 1], es.values[k]);
    }
    EXPECT_LE((back - rho.matrix()).norm(), 1e-9);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(EigenHermitian, NoisyFilteredStateRecoversSchmidtEigenvector) {
  // Phi+ filtered by an H/V efficiency ratio of 1.78 plus white noise: the
  // dominant eigenvector is the filtered Schmidt state, close to the printed
  // (0.801, 0.594) pair.
  const auto out = apply_channel(to_density(bell_state(BellKind::phi_plus)), anisotropic_coupler(0.403, 0.403 / 1.78));
  const auto noisy = depolarize(out.state, 0.18);
  const auto top = eigen_hermitian(noisy).vectors[0];
  EXPECT_NEAR(top(0).real(), 0.801, 0.02);
  EXPECT_NEAR(top(3).real(), 0.594, 0.02);
}

TEST(MetricReport, PurityMatchesRecomputation) {
  std::mt19937_64 rng(7);
  const auto rho = fixtures::random_mixed(rng);
  const auto m = metric_report(rho, bell_state(BellKind::phi_plus));
  EXPECT_NEAR(m.purity, (rho.matrix() * rho.matrix()).trace().real(), 1e-10);
  EXPECT_GE(m.purity, 0.25 - 1e-12);
}
