#include <gtest/gtest.h>

#include "polent/bell.hpp"
#include "support.hpp"

using namespace polent;

namespace {

DensityMatrix phi_plus() { return to_density(bell_state(BellKind::phi_plus)); }

// Reference correlation from the four joint probabilities.
double correlation_from_probabilities(const DensityMatrix& rho, double a, double b) {
  double e = 0.0;
  for (int sa = 0; sa < 2; ++sa)
    for (int sb = 0; sb < 2; ++sb) {
      const double p = coincidence_probability(rho, {Analyzer::linear(a + sa * pi / 2), Analyzer::linear(b + sb * pi / 2)});
      e += (sa == sb ? 1.0 : -1.0) * p;
    }
  return e;
}

} // namespace

TEST(Correlation, PhiPlusAnchors) {
  EXPECT_NEAR(correlation(phi_plus(), 0.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(correlation(phi_plus(), 0.0, pi / 4), 0.0, 1e-15);
  EXPECT_NEAR(correlation(phi_plus(), 0.0, pi / 8), 0.70710678, 1e-8);
  EXPECT_NEAR(correlation(phi_plus(), 0.0, pi / 8), correlation_from_probabilities(phi_plus(), 0.0, pi / 8), 1e-12);
}

TEST(Correlation, MatchesJointProbabilities) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (int i = 0; i < 100; ++i) {
    const auto rho = fixtures::random_mixed(rng);
    const double a = u(rng), b = u(rng);
    EXPECT_NEAR(correlation(rho, a, b), correlation_from_probabilities(rho, a, b), 1e-12);
  }
}

TEST(ChshPlan, RejectsRepeatedAngles) {
  EXPECT_THROW(ChshPlan({0.1, 0.1}, {0.0, 1.0}), invalid_input);
  EXPECT_THROW(ChshPlan({0.1, 0.2}, {1.0, 1.0}), invalid_input);
}

TEST(ChshS, TsirelsonForPhiPlus) {
  // E(a,b) = cos 2(a-b): four terms of cos(pi/4) each
  const auto r = chsh_S(phi_plus(), ChshPlan::optimal());
  EXPECT_NEAR(r.S, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(r.sigma_S, 0.0);
  EXPECT_NEAR(r.S, chsh_combination(r.E), 1e-12);
}

TEST(ChshS, PhiPlusAnyPlanMatchesCosineFormula) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (int i = 0; i < 200; ++i) {
    const ChshPlan plan({u(rng), u(rng)}, {u(rng), u(rng)});
    double expected = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        expected += (a == 0 && b == 1 ? -1.0 : 1.0) * std::cos(2 * (plan.alice[a] - plan.bob[b]));
    EXPECT_NEAR(chsh_S(phi_plus(), plan).S, expected, 1e-10);
  }
}

TEST(ChshS, ProductStateRespectsLocalBound) {
  const auto hh = to_density(product_state(ket::H(), ket::H()));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (int i = 0; i < 100; ++i)
    EXPECT_LE(std::abs(chsh_S(hh, ChshPlan({u(rng), u(rng)}, {u(rng), u(rng)})).S), 2.0 + 1e-12);
}

TEST(ChshS, SeparableStatesRespectLocalBound) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const Mat4 m = kron(fixtures::random_qubit_density(rng), fixtures::random_qubit_density(rng));
    EXPECT_LE(std::abs(chsh_S(DensityMatrix(m), ChshPlan::optimal()).S), 2.0 + 1e-9);
  }
}

TEST(ChshS, TsirelsonBoundForRandomStates) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (int i = 0; i < 500; ++i) {
    const auto rho = i % 2 ? to_density(PureState(fixtures::random_ket4(rng))) : fixtures::random_mixed(rng);
    EXPECT_LE(std::abs(chsh_S(rho, ChshPlan({u(rng), u(rng)}, {u(rng), u(rng)})).S), 2.0 * std::sqrt(2.0) + 1e-9);
  }
}

TEST(ChshFromCounts, PerfectCorrelation) {
  auto rec = acquire_chsh(phi_plus(), ChshPlan::optimal(), Counting::exact(1.0));
  for (int pair = 0; pair < 4; ++pair) {
    rec[4 * pair].counts = 100;
    rec[4 * pair + 1].counts = 0;
    rec[4 * pair + 2].counts = 0;
    rec[4 * pair + 3].counts = 100;
  }
  const auto r = chsh_from_counts(rec);
  EXPECT_EQ(r.E(0, 0), 1.0);
  EXPECT_EQ(r.sigma_S, 0.0);
}

TEST(ChshFromCounts, UncorrelatedCountsGiveZero) {
  auto rec = acquire_chsh(phi_plus(), ChshPlan::optimal(), Counting::exact(1.0));
  for (auto& r : rec) r.counts = 250;
  const auto r = chsh_from_counts(rec);
  EXPECT_EQ(r.S, 0.0);
  // sigma_E^2 = (1 - E^2)/N per pair; four pairs of N = 1000
  EXPECT_NEAR(r.sigma_S, std::sqrt(4.0 / 1000.0), 1e-12);
}

TEST(ChshFromCounts, Rejections) {
  auto rec = acquire_chsh(phi_plus(), ChshPlan::optimal(), Counting::exact(1.0));
  for (int k = 0; k < 4; ++k) rec[k].counts = 0;
  EXPECT_THROW(chsh_from_counts(rec), invalid_input);
  rec.pop_back();
  EXPECT_THROW(chsh_from_counts(rec), invalid_input);
}

TEST(ChshFromCounts, ExactCountsReproduceStateValue) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, pi);
  for (int i = 0; i < 100; ++i) {
    const auto rho = fixtures::random_mixed(rng);
    const ChshPlan plan({u(rng), u(rng)}, {u(rng), u(rng)});
    const auto counted = chsh_from_counts(acquire_chsh(rho, plan, Counting::exact(1e4)));
    EXPECT_NEAR(counted.S, chsh_S(rho, plan).S, 1e-9);
  }
}

TEST(ChshFromCounts, PropagatedSigmaMatchesSpreadOfSampledS) {
  // Monte-Carlo check of first-order propagation on a Werner state.
  const auto rho = DensityMatrix(0.88 * phi_plus().matrix() + 0.12 * Mat4::Identity() / 4.0);
  std::vector<double> s;
  double sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto r = chsh_from_counts(acquire_chsh(rho, ChshPlan::optimal(), Counting::poisson(2500, seed)));
    s.push_back(r.S);
    sigma += r.sigma_S / 400;
  }
  double mean = 0.0, var = 0.0;
  for (double x : s) mean += x / s.size();
  for (double x : s) var += (x - mean) * (x - mean) / (s.size() - 1);
  EXPECT_NEAR(std::sqrt(var) / sigma, 1.0, 0.15);
}
