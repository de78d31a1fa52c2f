#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polent/bell.hpp"
#include "polent/minimize.hpp"

namespace polent {

//---------------------------------------------------------------------------//
// Linear inversion
//---------------------------------------------------------------------------//

namespace detail {

inline const std::array<Mat4, 16>& pauli_products() {
  static const std::array<Mat4, 16> basis = [] {
    std::array<Mat2, 4> s;
    s[0] = Mat2::Identity();
    s[1] << 0, 1, 1, 0;
    s[2] << 0, cplx(0, -1), cplx(0, 1), 0;
    s[3] << 1, 0, 0, -1;
    std::array<Mat4, 16> out;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out[4 * a + b] = kron(s[a], s[b]);
    return out;
  }();
  return basis;
}

inline Ket4 setting_vector(const MeasurementSetting& s) { return product(s.proj_1.state(), s.proj_2.state()); }

inline void check_records(std::span<const CountRecord> records) {
  if (records.empty()) throw invalid_input("no count records");
  for (const auto& r : records) {
    if (!(r.counts >= 0.0) || !std::isfinite(r.counts)) throw invalid_input("counts must be finite and non-negative");
    if (!(r.expected_pairs > 0.0) || !std::isfinite(r.expected_pairs))
      throw invalid_input("expected_pairs must be positive");
  }
}

} // namespace detail

inline constexpr double max_plan_condition = 1e6;

/// Least-squares Hermitian estimate from measured frequencies, normalized to
/// unit trace. The result can have small negative eigenvalues.
inline Mat4 linear_inversion(std::span<const CountRecord> records) {
  detail::check_records(records);
  const auto& basis = detail::pauli_products();
  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd design(n, 16);
  Eigen::VectorXd freq(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Ket4 m = detail::setting_vector(records[i].setting);
    for (int k = 0; k < 16; ++k) design(i, k) = (m.adjoint() * basis[k] * m)(0, 0).real();
    freq(i) = records[i].counts / records[i].expected_pairs;
  }
  const Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= max_plan_condition)
    throw invalid_input("measurement plan does not span the two-qubit operator space");
  const Eigen::VectorXd coef = gram.ldlt().solve(design.transpose() * freq);
  Mat4 rho = Mat4::Zero();
  for (int k = 0; k < 16; ++k) rho += coef(k) * basis[k];
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw invalid_input("linear inversion produced a non-positive trace");
  rho /= tr;
  return 0.5 * (rho + rho.adjoint());
}

//---------------------------------------------------------------------------//
// Physical parameterization
//---------------------------------------------------------------------------//

/*!
 * Sixteen reals defining a lower-triangular T with real diagonal; the
 * state is T T^H / trace(T T^H), which is physical for any parameters.
 *
 * Layout: the four diagonal entries, then (re, im) of the strictly lower
 * entries in row order (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
 */
struct CholeskyParams {
  Eigen::Matrix<double, 16, 1> t = Eigen::Matrix<double, 16, 1>::Zero();

  static constexpr std::array<std::pair<int, int>, 6> lower{{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

  Mat4 triangular() const {
    Mat4 m = Mat4::Zero();
    for (int i = 0; i < 4; ++i) m(i, i) = t(i);
    for (int k = 0; k < 6; ++k) m(lower[k].first, lower[k].second) = cplx(t(4 + 2 * k), t(5 + 2 * k));
    return m;
  }

  Mat4 density() const {
    const Mat4 tri = triangular();
    Mat4 m = tri * tri.adjoint();
    m = 0.5 * (m + m.adjoint());
    return m / m.trace().real();
  }

  /// Inverse map for a positive definite matrix.
  static CholeskyParams from_density(const Mat4& rho) {
    Eigen::LLT<Mat4> llt(0.5 * (rho + rho.adjoint()));
    if (llt.info() != Eigen::Success) throw invalid_input("matrix is not positive definite");
    const Mat4 l = llt.matrixL();
    CholeskyParams p;
    for (int i = 0; i < 4; ++i) p.t(i) = l(i, i).real();
    for (int k = 0; k < 6; ++k) {
      const cplx v = l(lower[k].first, lower[k].second);
      p.t(4 + 2 * k) = v.real();
      p.t(5 + 2 * k) = v.imag();
    }
    return p;
  }
};

/*!
 * Gaussian approximation to the Poissonian negative log-likelihood,
 *
 *   sum_v (n_v - N_v p_v)^2 / (2 N_v max(p_v, floor)),  p_v = <m_v|rho|m_v>,
 *
 * as a function of CholeskyParams, with its analytic gradient.
 */
class TomographyObjective {
public:
  explicit TomographyObjective(std::span<const CountRecord> records, double probability_floor = 1e-12)
      : floor_(probability_floor) {
    detail::check_records(records);
    for (const auto& r : records) terms_.push_back({detail::setting_vector(r.setting), r.counts, r.expected_pairs});
  }

  double value(const Eigen::VectorXd& params) const { return evaluate(params, nullptr); }

  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd& grad) const { return evaluate(params, &grad); }

  double evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const {
    CholeskyParams cp;
    cp.t = params;
    const Mat4 tri = cp.triangular();
    const Mat4 m = tri * tri.adjoint();
    const double tr = m.trace().real();
    const Mat4 rho = m / tr;

    double f = 0.0;
    Mat4 w = Mat4::Zero();
    for (const auto& term : terms_) {
      const double p = (term.m.adjoint() * rho * term.m)(0, 0).real();
      const double n = term.counts, big_n = term.pairs;
      const double resid = n - big_n * p;
      double dfdp;
      if (p >= floor_) {
        f += resid * resid / (2.0 * big_n * p);
        dfdp = 0.5 * big_n - n * n / (2.0 * big_n * p * p);
      } else {
        f += resid * resid / (2.0 * big_n * floor_);
        dfdp = -resid / floor_;
      }
      if (grad) w += dfdp * (term.m * term.m.adjoint());
    }
    if (grad) {
      // d f = (2/tr) Re tr(T^H W' dT) with W' = W - tr(W rho) I.
      const cplx shift = (w * rho).trace();
      const Mat4 g = (w - shift * Mat4::Identity()) * tri * (2.0 / tr);
      grad->resize(16);
      for (int i = 0; i < 4; ++i) (*grad)(i) = g(i, i).real();
      for (int k = 0; k < 6; ++k) {
        const cplx v = g(CholeskyParams::lower[k].first, CholeskyParams::lower[k].second);
        (*grad)(4 + 2 * k) = v.real();
        (*grad)(5 + 2 * k) = v.imag();
      }
    }
    return f;
  }

private:
  struct Term {
    Ket4 m;
    double counts;
    double pairs;
  };
  std::vector<Term> terms_;
  double floor_;
};

//---------------------------------------------------------------------------//
// Maximum likelihood reconstruction
//---------------------------------------------------------------------------//

struct Uncertainties {
  double concurrence = 0.0;
  double fidelity_target = 0.0;
  double S = 0.0;
};

struct TomographyResult {
  DensityMatrix rho;
  MetricReport metrics;
  Uncertainties uncertainties;
  double likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string plan;
  std::vector<double> objective_trace;
};

struct MleOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  double probability_floor = 1e-12;
  double eigenvalue_clip = 1e-6;
  bool record_trace = false;
  std::string plan = "james16";
};

/// Clips eigenvalues below `clip` and renormalizes, giving a positive definite start point.
inline Mat4 regularized_start(const Mat4& m, double clip) {
  const Eigensystem es = eigen_hermitian(m);
  double positive = 0.0;
  for (int i = 0; i < 4; ++i) positive += std::max(es.values[i], 0.0);
  if (!(positive > 0.0) || !std::isfinite(positive)) return Mat4::Identity() / 4.0;
  Mat4 out = Mat4::Zero();
  for (int i = 0; i < 4; ++i)
    out += std::max(es.values[i] / positive, clip) * es.vectors[i] * es.vectors[i].adjoint();
  return out / out.trace().real();
}

inline TomographyResult mle_reconstruct(std::span<const CountRecord> records, std::optional<Mat4> init = std::nullopt,
                                        const MleOptions& opts = {},
                                        const PureState& target = bell_state(BellKind::phi_plus)) {
  const TomographyObjective objective(records, opts.probability_floor);

  Mat4 start = Mat4::Identity() / 4.0;
  if (init) {
    start = *init;
  } else {
    try {
      start = linear_inversion(records);
    } catch (const invalid_input&) {
      // ill-conditioned plan or degenerate data: start from I/4
    }
  }
  if (!start.allFinite()) start = Mat4::Identity() / 4.0;
  start = regularized_start(start, opts.eigenvalue_clip);

  MinimizeOptions mo;
  mo.tolerance = opts.tolerance;
  mo.max_iterations = opts.max_iterations;
  mo.record_trace = opts.record_trace;
  const auto fit = minimize_bfgs(objective, Eigen::VectorXd(CholeskyParams::from_density(start).t), mo);

  CholeskyParams cp;
  cp.t = fit.x;
  TomographyResult res{DensityMatrix(cp.density()), {}, {}, fit.value, fit.iterations, fit.converged, opts.plan,
                       fit.trace};
  res.metrics = metric_report(res.rho, target);
  return res;
}

//---------------------------------------------------------------------------//
// Parametric bootstrap
//---------------------------------------------------------------------------//

struct BootstrapOptions {
  PureState target = bell_state(BellKind::phi_plus);
  ChshPlan chsh = ChshPlan::optimal();
  bool resample = true;  // false replays the counts unchanged (zero-variance check)
  MleOptions mle;
};

namespace detail {

inline double sample_std(const std::vector<double>& v) {
  // shifted by the first sample so identical replicas give exactly zero
  double mean = 0.0;
  for (double x : v) mean += x - v.front();
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - v.front() - mean) * (x - v.front() - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// Standard deviations of concurrence, target fidelity and S over replicas
/// whose counts are redrawn as Poisson(n_v). Replica r uses stream (seed, r).
inline Uncertainties bootstrap_errors(std::span<const CountRecord> records, int replicas, std::uint64_t seed,
                                      const BootstrapOptions& opts = {}) {
  if (replicas < 2) throw invalid_input("bootstrap needs at least 2 replicas");
  detail::check_records(records);
  std::vector<double> conc, fid, s;
  std::vector<CountRecord> replica(records.begin(), records.end());
  for (int r = 0; r < replicas; ++r) {
    Engine engine = stream_engine(seed, static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < records.size(); ++i)
      replica[i].counts = opts.resample ? static_cast<double>(poisson_draw(records[i].counts, engine)) : records[i].counts;
    const auto res = mle_reconstruct(replica, std::nullopt, opts.mle, opts.target);
    conc.push_back(res.metrics.concurrence);
    fid.push_back(res.metrics.fidelity_target);
    s.push_back(chsh_S(res.rho, opts.chsh).S);
  }
  return {detail::sample_std(conc), detail::sample_std(fid), detail::sample_std(s)};
}

} // namespace polent
