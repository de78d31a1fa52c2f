#pragma once

#include <array>
#include <span>
#include <vector>

#include "polent/sim.hpp"

namespace polent {

/// Analyzer angles for the two CHSH observables of each party.
struct ChshPlan {
  std::array<double, 2> alice;
  std::array<double, 2> bob;

  ChshPlan(std::array<double, 2> a, std::array<double, 2> b) : alice(a), bob(b) {
    if (a[0] == a[1] || b[0] == b[1]) throw invalid_input("CHSH analyzer angles must differ within each party");
  }

  /// (0, pi/4; pi/8, 3 pi/8): reaches 2 sqrt 2 on Phi+.
  static ChshPlan optimal() { return ChshPlan({0.0, pi / 4}, {pi / 8, 3 * pi / 8}); }
};

struct ChshResult {
  Eigen::Matrix2d E = Eigen::Matrix2d::Zero();  // E(i, j) = E(A_i, B_j)
  double S = 0.0;
  double sigma_S = 0.0;
};

/// E11 - E12 + E21 + E22.
inline double chsh_combination(const Eigen::Matrix2d& e) { return e(0, 0) - e(0, 1) + e(1, 0) + e(1, 1); }

/// Two-valued observable P_theta - P_theta_perp for a linear analyzer.
inline Mat2 polarization_observable(double angle) {
  const Ket2 k = ket::linear(angle);
  return projector(k) - projector(ket::orthogonal(k));
}

inline double correlation(const DensityMatrix& rho, double a, double b) {
  const Mat4 obs = kron(polarization_observable(a), polarization_observable(b));
  return std::clamp((rho.matrix() * obs).trace().real(), -1.0, 1.0);
}

inline ChshResult chsh_S(const DensityMatrix& rho, const ChshPlan& plan) {
  ChshResult r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.E(i, j) = correlation(rho, plan.alice[i], plan.bob[j]);
  r.S = chsh_combination(r.E);
  return r;
}

/*!
 * The 16 coincidence settings of a CHSH run. Order is pair-major over
 * (A1,B1), (A1,B2), (A2,B1), (A2,B2); within a pair the outcomes run
 * ++, +-, -+, -- where "-" is the orthogonal analyzer.
 */
inline std::vector<MeasurementSetting> chsh_settings(const ChshPlan& plan) {
  std::vector<MeasurementSetting> out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int sa = 0; sa < 2; ++sa)
        for (int sb = 0; sb < 2; ++sb)
          out.push_back({Analyzer::linear(plan.alice[i] + sa * pi / 2), Analyzer::linear(plan.bob[j] + sb * pi / 2)});
  return out;
}

inline std::vector<CountRecord> acquire_chsh(const DensityMatrix& rho, const ChshPlan& plan, const Counting& counting) {
  const auto settings = chsh_settings(plan);
  std::vector<CountRecord> out;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const double p = coincidence_probability(rho, settings[i]);
    out.push_back({settings[i], counting.draw(p, i), counting.mean_pairs});
  }
  return out;
}

/// Correlations from coincidence counts ordered as in chsh_settings, with
/// first-order Poissonian error propagation.
inline ChshResult chsh_from_counts(std::span<const CountRecord> records) {
  if (records.size() != 16) throw invalid_input("CHSH needs 16 records (4 setting pairs x 4 outcomes)");
  ChshResult r;
  double var_s = 0.0;
  for (int pair = 0; pair < 4; ++pair) {
    const double npp = records[4 * pair + 0].counts, npm = records[4 * pair + 1].counts,
                 nmp = records[4 * pair + 2].counts, nmm = records[4 * pair + 3].counts;
    for (double n : {npp, npm, nmp, nmm})
      if (!(n >= 0.0)) throw invalid_input("counts must be non-negative");
    const double total = npp + npm + nmp + nmm;
    if (!(total > 0.0)) throw invalid_input("CHSH setting pair has zero total counts");
    const double e = (npp + nmm - npm - nmp) / total;
    // dE/dn = (+-1 - E) / total for same/opposite outcomes.
    const double d_same = (1.0 - e) / total, d_diff = (-1.0 - e) / total;
    var_s += d_same * d_same * (npp + nmm) + d_diff * d_diff * (npm + nmp);
    r.E(pair / 2, pair % 2) = e;
  }
  r.S = chsh_combination(r.E);
  r.sigma_S = std::sqrt(var_s);
  return r;
}

} // namespace polent
