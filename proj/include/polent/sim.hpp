#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polent/optics.hpp"

namespace polent {

//---------------------------------------------------------------------------//
// Analyzers and measurement settings
//---------------------------------------------------------------------------//

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw invalid_input("malformed number '" + std::string(s) + "'");
  return x;
}

} // namespace detail

/*!
 * A single-photon projective analyzer: the polarization it passes plus a
 * label that serializes it exactly.
 *
 * Labels are H, V, D, A, R, L, "lin:<radians>" (linear polarizer angle),
 * "eq:<radians>" ((H + e^{i phi} V)/sqrt 2) and "ket:<re0>;<im0>;<re1>;<im1>".
 * D is (H + V)/sqrt 2 and A is its orthogonal partner.
 */
class Analyzer {
public:
  static Analyzer parse(std::string_view label) {
    if (label == "H") return {"H", ket::H()};
    if (label == "V") return {"V", ket::V()};
    if (label == "D") return {"D", ket::D()};
    if (label == "A") return {"A", ket::A()};
    if (label == "R") return {"R", ket::R()};
    if (label == "L") return {"L", ket::L()};
    if (label.starts_with("lin:")) return linear(detail::parse_double(label.substr(4)));
    if (label.starts_with("eq:")) return equatorial(detail::parse_double(label.substr(3)));
    if (label.starts_with("ket:")) {
      std::array<double, 4> v{};
      std::string_view rest = label.substr(4);
      for (int i = 0; i < 4; ++i) {
        const auto cut = rest.find(';');
        if ((cut == std::string_view::npos) != (i == 3)) throw invalid_input("malformed ket analyzer label");
        v[i] = detail::parse_double(rest.substr(0, cut));
        if (cut != std::string_view::npos) rest = rest.substr(cut + 1);
      }
      return custom(Ket2(cplx(v[0], v[1]), cplx(v[2], v[3])));
    }
    throw invalid_input("unknown analyzer label '" + std::string(label) + "'");
  }

  static Analyzer linear(double angle) { return {"lin:" + detail::format_double(angle), ket::linear(angle)}; }
  static Analyzer equatorial(double phase) {
    return {"eq:" + detail::format_double(phase), ket::equatorial(phase)};
  }
  static Analyzer custom(const Ket2& k) {
    const double n = k.norm();
    if (!(n > 0.0)) throw invalid_input("analyzer state is zero");
    if (std::abs(n - 1.0) > 1e-12) throw invalid_input("analyzer state is not normalized");
    return {"ket:" + detail::format_double(k(0).real()) + ";" + detail::format_double(k(0).imag()) + ";" +
                detail::format_double(k(1).real()) + ";" + detail::format_double(k(1).imag()),
            k};
  }

  const std::string& label() const { return label_; }
  const Ket2& state() const { return ket_; }

private:
  Analyzer(std::string label, Ket2 k) : label_(std::move(label)), ket_(std::move(k)) {}

  std::string label_;
  Ket2 ket_;
};

struct MeasurementSetting {
  Analyzer proj_1;
  Analyzer proj_2;

  static MeasurementSetting parse(std::string_view a, std::string_view b) {
    return {Analyzer::parse(a), Analyzer::parse(b)};
  }
};

/// Coincidence counts for one setting. Sampled records hold integral
/// counts; expected-value records (infinite-count limit) may not.
struct CountRecord {
  MeasurementSetting setting;
  double counts = 0.0;
  double expected_pairs = 0.0;
};

/// trace(rho (P1 (x) P2)).
inline double coincidence_probability(const DensityMatrix& rho, const MeasurementSetting& s) {
  const Ket4 m = product(s.proj_1.state(), s.proj_2.state());
  return std::clamp((m.adjoint() * rho.matrix() * m)(0, 0).real(), 0.0, 1.0);
}

//---------------------------------------------------------------------------//
// Counting statistics
//---------------------------------------------------------------------------//

using Engine = std::mt19937_64;

/// Independent stream for sub-task `index` of a run seeded with `master`.
inline Engine stream_engine(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Engine(seq);
}

inline std::uint64_t poisson_draw(double mean, Engine& engine) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(engine);
}

inline std::uint64_t sample_counts(double p, double mean_pairs, Engine& engine, double background = 0.0) {
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_input("probability must lie in [0, 1]");
  if (!(mean_pairs >= 0.0) || !(background >= 0.0)) throw invalid_input("mean counts must be non-negative");
  return poisson_draw(p * mean_pairs + background, engine);
}

inline std::uint64_t sample_counts(double p, double mean_pairs, std::uint64_t seed) {
  Engine e = stream_engine(seed, 0);
  return sample_counts(p, mean_pairs, e);
}

/// How probabilities turn into counts: Poisson draws when a seed is set,
/// expected values otherwise.
struct Counting {
  double mean_pairs = 1e4;
  double background = 0.0;
  std::optional<std::uint64_t> seed;

  static Counting exact(double mean_pairs) { return {mean_pairs, 0.0, std::nullopt}; }
  static Counting poisson(double mean_pairs, std::uint64_t seed) { return {mean_pairs, 0.0, seed}; }

  double draw(double p, std::uint64_t index) const {
    if (!seed) return p * mean_pairs + background;
    Engine e = stream_engine(*seed, index);
    return static_cast<double>(sample_counts(p, mean_pairs, e, background));
  }
};

//---------------------------------------------------------------------------//
// Fringes
//---------------------------------------------------------------------------//

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double visibility = 0.0;
};

/// Least-squares fit of offset + a cos(x) + b sin(x).
inline SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw invalid_input("sinusoid fit needs at least 3 points");
  Eigen::MatrixX3d design(x.size(), 3);
  Eigen::VectorXd rhs(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(x[i]);
    design(i, 2) = std::sin(x[i]);
    rhs(i) = y[i];
  }
  const Eigen::Vector3d c = design.colPivHouseholderQr().solve(rhs);
  SinusoidFit fit;
  fit.offset = c(0);
  fit.amplitude = std::hypot(c(1), c(2));
  fit.phase = std::atan2(c(2), c(1));
  fit.visibility = fit.offset > 0.0 ? std::clamp(fit.amplitude / fit.offset, 0.0, 1.0) : 0.0;
  return fit;
}

enum class ScanPath {
  linear,     // analyzer at linear angle theta; period pi
  equatorial  // analyzer (H + e^{i phi} V)/sqrt 2; period 2 pi
};

struct FringeCurve {
  std::vector<double> angles;
  std::vector<double> values;
  double visibility = 0.0;
  ScanPath path = ScanPath::linear;
};

inline FringeCurve make_fringe(std::vector<double> angles, std::vector<double> values, ScanPath path) {
  std::vector<double> x(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) x[i] = path == ScanPath::linear ? 2.0 * angles[i] : angles[i];
  const double v = fit_sinusoid(x, values).visibility;
  return {std::move(angles), std::move(values), v, path};
}

/// Analyzer angles 0, step, 2 step, ... strictly below `end`.
inline std::vector<double> angle_grid(double step, double end = pi) {
  if (!(step > 0.0)) throw invalid_input("angle step must be positive");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double a = i * step;
    if (a >= end - 1e-12) break;
    out.push_back(a);
  }
  return out;
}

inline Analyzer scan_analyzer(ScanPath path, double angle) {
  return path == ScanPath::linear ? Analyzer::linear(angle) : Analyzer::equatorial(angle);
}

/// Horizontal input with an incoherent V admixture chosen so that, after
/// the coupler, the max/min ratio through a rotating polarizer equals `extinction`.
inline Mat2 leaky_horizontal(double extinction, double eta_h = 1.0, double eta_v = 1.0) {
  if (!(extinction >= 1.0)) throw invalid_input("extinction ratio must be at least 1");
  if (!(eta_h > 0.0) || !(eta_v > 0.0)) throw invalid_input("efficiencies must be positive");
  const double leak = eta_h / (eta_h + extinction * eta_v);
  Mat2 rho = Mat2::Zero();
  rho(0, 0) = 1.0 - leak;
  rho(1, 1) = leak;
  return rho;
}

/// Probability of passing the coupler and then a polarizer at each analyzer angle.
inline FringeCurve single_photon_fringe(const Mat2& input, double eta_h, double eta_v,
                                        std::span<const double> analyzer_angles) {
  if (std::abs(input.trace() - cplx(1.0, 0.0)) > 1e-12) throw invalid_input("input state is not normalized");
  const Mat2 k = anisotropic_coupler(eta_h, eta_v).operators().front();
  const Mat2 out = k * input * k.adjoint();
  std::vector<double> values;
  for (double a : analyzer_angles) values.push_back((projector(ket::linear(a)) * out).trace().real());
  return make_fringe({analyzer_angles.begin(), analyzer_angles.end()}, std::move(values), ScanPath::linear);
}

inline FringeCurve single_photon_fringe(const Ket2& input, double eta_h, double eta_v,
                                        std::span<const double> analyzer_angles) {
  return single_photon_fringe(Mat2(projector(input)), eta_h, eta_v, analyzer_angles);
}

/// Coincidences with photon 1 projected onto `fixed` while photon 2's analyzer scans.
inline FringeCurve biphoton_fringe(const DensityMatrix& rho, const Analyzer& fixed,
                                   std::span<const double> scan, const Counting& counting,
                                   ScanPath path = ScanPath::linear) {
  std::vector<double> values;
  values.reserve(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double p = coincidence_probability(rho, {fixed, scan_analyzer(path, scan[i])});
    values.push_back(counting.draw(p, i));
  }
  return make_fringe({scan.begin(), scan.end()}, std::move(values), path);
}

/// (p(k) - p(k_perp)) / (p(k) + p(k_perp)) for photon 2 with photon 1 fixed.
inline double correlation_contrast(const DensityMatrix& rho, const Analyzer& fixed, const Ket2& k) {
  const double a = coincidence_probability(rho, {fixed, Analyzer::custom(k)});
  const double b = coincidence_probability(rho, {fixed, Analyzer::custom(ket::orthogonal(k))});
  return a + b > 0.0 ? (a - b) / (a + b) : 0.0;
}

//---------------------------------------------------------------------------//
// Tomography acquisition
//---------------------------------------------------------------------------//

inline constexpr std::size_t tomography_plan_size = 16;

/// Named 16-setting plans. "james16" is the standard two-qubit set built from
/// H, V, D, R and L; "product16" is {H,V,D,R} (x) {H,V,D,R}.
inline std::vector<MeasurementSetting> tomography_plan(std::string_view id = "james16") {
  std::vector<std::pair<const char*, const char*>> pairs;
  if (id == "james16") {
    pairs = {{"H", "H"}, {"H", "V"}, {"V", "V"}, {"V", "H"}, {"R", "H"}, {"R", "V"}, {"D", "V"}, {"D", "H"},
             {"D", "R"}, {"D", "D"}, {"R", "D"}, {"H", "D"}, {"V", "D"}, {"V", "L"}, {"H", "L"}, {"R", "L"}};
  } else if (id == "product16") {
    for (const char* a : {"H", "V", "D", "R"})
      for (const char* b : {"H", "V", "D", "R"}) pairs.emplace_back(a, b);
  } else {
    throw invalid_input("unknown tomography plan '" + std::string(id) + "'");
  }
  std::vector<MeasurementSetting> out;
  for (auto [a, b] : pairs) out.push_back(MeasurementSetting::parse(a, b));
  return out;
}

inline std::vector<CountRecord> acquire_tomography(const DensityMatrix& rho,
                                                   std::span<const MeasurementSetting> settings,
                                                   const Counting& counting) {
  if (settings.size() != tomography_plan_size)
    throw invalid_input("tomography plan must have exactly 16 settings");
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const double p = coincidence_probability(rho, settings[i]);
    out.push_back({settings[i], counting.draw(p, i), counting.mean_pairs});
  }
  return out;
}

} // namespace polent
