#pragma once

#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "polent/io.hpp"

namespace polent {

//---------------------------------------------------------------------------//
// Efficiency budget
//---------------------------------------------------------------------------//

struct EfficiencyStage {
  std::string name;
  double efficiency = 1.0;
};

struct EfficiencyBudget {
  std::vector<EfficiencyStage> stages;
  double total = 1.0;
};

inline void check_stage(const EfficiencyStage& s) {
  if (!(s.efficiency > 0.0 && s.efficiency <= 1.0))
    throw invalid_input("stage '" + s.name + "' efficiency must lie in (0, 1]");
}

inline EfficiencyBudget efficiency_budget(std::vector<EfficiencyStage> stages) {
  if (stages.empty()) throw invalid_input("efficiency budget needs at least one stage");
  double total = 1.0;
  for (const auto& s : stages) {
    check_stage(s);
    total *= s.efficiency;
  }
  return {std::move(stages), total};
}

/// Efficiency of the one stage missing from `known` such that the chain reaches `total`.
inline double solve_unknown_stage(const std::vector<EfficiencyStage>& known, double total) {
  if (!(total > 0.0 && total <= 1.0)) throw invalid_input("total efficiency must lie in (0, 1]");
  double known_product = 1.0;
  for (const auto& s : known) {
    check_stage(s);
    known_product *= s.efficiency;
  }
  const double x = total / known_product;
  if (x > 1.0) throw invalid_input("known stages already lose more than the requested total allows");
  return x;
}

struct UnknownStageCheck {
  double recomputed = 0.0;
  std::optional<double> quoted;
  double discrepancy = 0.0;
  bool flagged = false;  // quoted value disagrees with the recomputed one
};

inline constexpr double quoted_stage_tolerance = 1e-3;

inline UnknownStageCheck check_unknown_stage(const std::vector<EfficiencyStage>& known, double total,
                                             std::optional<double> quoted = std::nullopt) {
  UnknownStageCheck r;
  r.recomputed = solve_unknown_stage(known, total);
  r.quoted = quoted;
  if (quoted) {
    r.discrepancy = r.recomputed - *quoted;
    r.flagged = std::abs(r.discrepancy) > quoted_stage_tolerance;
  }
  return r;
}

//---------------------------------------------------------------------------//
// Noise calibration
//---------------------------------------------------------------------------//

inline constexpr double noise_fit_tolerance = 1e-6;

/// Noise fraction p whose admixture brings the concurrence of `base` down to `target`.
inline double fit_noise(double target, const DensityMatrix& base, NoiseModel model = NoiseModel::white) {
  const double c0 = concurrence(base);
  if (!(target >= 0.0) || target > c0 + noise_fit_tolerance)
    throw invalid_input("target concurrence is not reachable by adding noise");
  if (std::abs(c0 - target) < noise_fit_tolerance) return 0.0;
  if (target <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0, mid = 0.5;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double c = concurrence(apply_noise(base, model, mid));
    if (std::abs(c - target) < noise_fit_tolerance) break;
    (c > target ? lo : hi) = mid;
  }
  return mid;
}

//---------------------------------------------------------------------------//
// Scenario configuration
//---------------------------------------------------------------------------//

struct ChannelDescriptor {
  std::string kind;  // identity | taper | waveplate | polarizer | coupler
  Arm arm = Arm::first;
  double eta_h = 1.0, eta_v = 1.0;
  double retardance = 0.0, angle = 0.0;

  KrausChannel build() const {
    if (kind == "identity" || kind == "taper") return KrausChannel::identity(arm);
    if (kind == "waveplate") return KrausChannel::unitary(waveplate(retardance, angle), arm);
    if (kind == "polarizer") return polarizer(angle, arm);
    if (kind == "coupler") return anisotropic_coupler(eta_h, eta_v, arm);
    throw invalid_input("unknown channel kind '" + kind + "'");
  }
};

struct ScenarioConfig {
  std::string name;
  // Source: a Bell label, an explicit pump angle, or compensation for the first coupler.
  std::optional<BellKind> source_bell = BellKind::phi_plus;
  std::optional<double> source_theta;
  bool source_compensate = false;

  std::vector<ChannelDescriptor> channel_chain;

  NoiseModel noise_model = NoiseModel::white;
  std::optional<double> noise_p;
  std::optional<double> noise_target_concurrence;

  std::string target = "phi+";  // Bell label or "top-eigenvector"
  std::string tomography_plan = "james16";
  double mean_pairs = 1e4;
  double background = 0.0;
  std::uint64_t seed = 0;
  int bootstrap_replicas = 200;
  ChshPlan chsh = ChshPlan::optimal();

  std::vector<std::string> fringe_fixed{"H", "D"};
  double fringe_step = pi / 18;  // 10 degrees
  double single_photon_extinction = 25.0;

  std::string outputs = "out";

  /// Efficiencies of the first coupler in the chain, (1, 1) when there is none.
  std::pair<double, double> coupler_efficiencies() const {
    for (const auto& c : channel_chain)
      if (c.kind == "coupler") return {c.eta_h, c.eta_v};
    return {1.0, 1.0};
  }
};

namespace detail {

template <class T>
T get_or(const io::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline ChannelDescriptor parse_channel(const io::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw invalid_input("channel descriptor needs a 'kind'");
  ChannelDescriptor c;
  c.kind = j.at("kind").get<std::string>();
  c.arm = arm_from_index(get_or<int>(j, "arm", 1));
  if (c.kind == "coupler") {
    if (!j.contains("eta_h")) throw invalid_input("coupler needs 'eta_h'");
    c.eta_h = j.at("eta_h").get<double>();
    if (j.contains("eta_v"))
      c.eta_v = j.at("eta_v").get<double>();
    else if (j.contains("ratio"))
      c.eta_v = c.eta_h / j.at("ratio").get<double>();
    else
      throw invalid_input("coupler needs 'eta_v' or 'ratio'");
  } else if (c.kind == "waveplate") {
    c.retardance = get_or<double>(j, "retardance", pi);
    c.angle = get_or<double>(j, "angle", 0.0);
  } else if (c.kind == "polarizer") {
    c.angle = get_or<double>(j, "angle", 0.0);
  }
  (void)c.build();  // validates parameters
  return c;
}

} // namespace detail

/*!
 * Parses a scenario from JSON. Recognized keys: name, source ("phi+" or
 * {"bell": label} or {"theta": radians} or {"theta": "compensate"}),
 * channel_chain, noise ({"model", "p" | "target_concurrence"}), target,
 * tomography_plan, mean_pairs, background, seed (required),
 * bootstrap_replicas, chsh ({"alice": [a1, a2], "bob": [b1, b2]}),
 * fringes ({"fixed", "step_deg", "single_photon_extinction"}), outputs.
 */
inline ScenarioConfig parse_scenario(const io::json& j) {
  try {
    if (!j.is_object()) throw invalid_input("scenario must be a JSON object");
    ScenarioConfig c;
    c.name = j.at("name").get<std::string>();
    if (!j.contains("seed")) throw invalid_input("scenario needs an explicit 'seed'");
    c.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("source")) {
      const auto& s = j.at("source");
      if (s.is_string()) {
        c.source_bell = parse_bell_kind(s.get<std::string>());
      } else if (s.contains("bell")) {
        c.source_bell = parse_bell_kind(s.at("bell").get<std::string>());
      } else if (s.contains("theta")) {
        c.source_bell.reset();
        if (s.at("theta").is_string()) {
          if (s.at("theta").get<std::string>() != "compensate") throw invalid_input("source theta must be a number or 'compensate'");
          c.source_compensate = true;
        } else {
          c.source_theta = s.at("theta").get<double>();
          (void)schmidt_pure(*c.source_theta);
        }
      } else {
        throw invalid_input("source needs 'bell' or 'theta'");
      }
    }

    if (j.contains("channel_chain"))
      for (const auto& ch : j.at("channel_chain")) c.channel_chain.push_back(detail::parse_channel(ch));
    if (c.source_compensate) {
      const auto [h, v] = c.coupler_efficiencies();
      (void)pump_compensation(h, v);
    }

    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      c.noise_model = parse_noise_model(detail::get_or<std::string>(n, "model", "white"));
      if (n.contains("p")) {
        c.noise_p = n.at("p").get<double>();
        if (!(*c.noise_p >= 0.0 && *c.noise_p <= 1.0)) throw invalid_input("noise p must lie in [0, 1]");
      }
      if (n.contains("target_concurrence")) c.noise_target_concurrence = n.at("target_concurrence").get<double>();
      if (c.noise_p && c.noise_target_concurrence) throw invalid_input("give noise 'p' or 'target_concurrence', not both");
    }

    c.target = detail::get_or<std::string>(j, "target", c.target);
    if (c.target != "top-eigenvector") (void)parse_bell_kind(c.target);
    c.tomography_plan = detail::get_or<std::string>(j, "tomography_plan", c.tomography_plan);
    (void)tomography_plan(c.tomography_plan);
    c.mean_pairs = detail::get_or<double>(j, "mean_pairs", c.mean_pairs);
    if (!(c.mean_pairs > 0.0)) throw invalid_input("mean_pairs must be positive");
    c.background = detail::get_or<double>(j, "background", c.background);
    if (!(c.background >= 0.0)) throw invalid_input("background must be non-negative");
    c.bootstrap_replicas = detail::get_or<int>(j, "bootstrap_replicas", c.bootstrap_replicas);
    if (c.bootstrap_replicas == 1 || c.bootstrap_replicas < 0)
      throw invalid_input("bootstrap_replicas must be 0 (off) or at least 2");

    if (j.contains("chsh")) {
      const auto& p = j.at("chsh");
      c.chsh = ChshPlan(p.at("alice").get<std::array<double, 2>>(), p.at("bob").get<std::array<double, 2>>());
    }
    if (j.contains("fringes")) {
      const auto& f = j.at("fringes");
      c.fringe_fixed = detail::get_or<std::vector<std::string>>(f, "fixed", c.fringe_fixed);
      for (const auto& a : c.fringe_fixed) (void)Analyzer::parse(a);
      if (f.contains("step_deg")) c.fringe_step = f.at("step_deg").get<double>() * pi / 180.0;
      c.single_photon_extinction = detail::get_or<double>(f, "single_photon_extinction", c.single_photon_extinction);
      (void)angle_grid(c.fringe_step);
    }
    c.outputs = detail::get_or<std::string>(j, "outputs", c.outputs);
    return c;
  } catch (const io::json::exception& e) {
    throw invalid_input(std::string("malformed scenario: ") + e.what());
  }
}

inline ScenarioConfig load_scenario(const std::string& path) {
  io::json j;
  try {
    j = io::json::parse(io::read_file(path));
  } catch (const io::json::exception& e) {
    throw invalid_input("'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(j);
}

//---------------------------------------------------------------------------//
// Running a scenario
//---------------------------------------------------------------------------//

/// Independent master seed for a named stage of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(tag));
}

enum StreamTag : std::uint64_t { tomography_stream = 1, chsh_stream = 2, fringe_stream = 3, bootstrap_stream = 4 };

struct PreparedState {
  double source_theta = pi / 4;   // Schmidt angle of the source, pi/4 for Phi+
  DensityMatrix source;
  DensityMatrix noiseless;        // after the channel chain, post-selected
  double success_probability = 1.0;
  double noise_p = 0.0;
  DensityMatrix state;            // what the detectors see
};

inline PreparedState prepare_state(const ScenarioConfig& c) {
  double theta = pi / 4;
  std::optional<PureState> src;
  if (c.source_compensate) {
    const auto [h, v] = c.coupler_efficiencies();
    theta = pump_compensation(h, v);
  } else if (c.source_theta) {
    theta = *c.source_theta;
  } else if (c.source_bell) {
    src = bell_state(*c.source_bell);
  }
  const DensityMatrix source = to_density(src ? *src : schmidt_pure(theta));

  std::vector<KrausChannel> chain;
  for (const auto& d : c.channel_chain) chain.push_back(d.build());
  const ChannelOutcome out = apply_chain(source, chain);

  double p = 0.0;
  if (c.noise_p)
    p = *c.noise_p;
  else if (c.noise_target_concurrence)
    p = fit_noise(*c.noise_target_concurrence, out.state, c.noise_model);
  return {theta, source, out.state, out.success_probability, p, apply_noise(out.state, c.noise_model, p)};
}

struct ScenarioReport {
  PreparedState prepared;
  std::optional<TomographyResult> tomography;
  io::json metrics;
  std::vector<std::string> artifacts;
};

namespace detail {

inline io::json amplitudes_json(const Ket4& v) {
  io::json a = io::json::array();
  for (int i = 0; i < 4; ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

struct OutputDir {
  std::filesystem::path root;
  std::vector<std::string>* artifacts;

  void write(const std::string& name, const std::string& content) const {
    io::write_file((root / name).string(), content);
    artifacts->push_back(name);
  }
};

inline OutputDir open_outputs(const std::string& dir, std::vector<std::string>& artifacts) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
  return {dir, &artifacts};
}

inline std::string dump(const io::json& j) { return j.dump(2) + "\n"; }

} // namespace detail

/// Runs the CHSH part of a scenario: exact S on the true state plus S from simulated counts.
inline io::json run_chsh(const ScenarioConfig& c, const PreparedState& prep, const detail::OutputDir& out) {
  const ChshResult exact = chsh_S(prep.state, c.chsh);
  Counting counting{c.mean_pairs, c.background, derive_seed(c.seed, chsh_stream)};
  const auto records = acquire_chsh(prep.state, c.chsh, counting);
  const ChshResult measured = chsh_from_counts(records);
  out.write("chsh_counts.csv", io::counts_to_csv(records));
  io::json j = {{"exact", io::to_json(exact, c.chsh)}, {"measured", io::to_json(measured, c.chsh)}};
  out.write("chsh.json", detail::dump(j));
  return j;
}

/// Runs the fringe part: single-photon analyzer fringe, input-polarization
/// transmission fringe and biphoton fringes for each fixed analyzer.
inline io::json run_fringes(const ScenarioConfig& c, const PreparedState& prep, const detail::OutputDir& out) {
  const auto [eta_h, eta_v] = c.coupler_efficiencies();
  const auto grid = angle_grid(c.fringe_step);
  std::vector<std::pair<std::string, FringeCurve>> curves;

  curves.emplace_back("single_photon",
                      single_photon_fringe(leaky_horizontal(c.single_photon_extinction, eta_h, eta_v), eta_h, eta_v, grid));
  curves.emplace_back("transmission",
                      make_fringe(grid, transmission_fringe(eta_h, eta_v, grid), ScanPath::linear));
  const std::uint64_t fseed = derive_seed(c.seed, fringe_stream);
  for (std::size_t k = 0; k < c.fringe_fixed.size(); ++k) {
    Counting counting{c.mean_pairs, c.background, derive_seed(fseed, k)};
    curves.emplace_back("biphoton_" + c.fringe_fixed[k],
                        biphoton_fringe(prep.state, Analyzer::parse(c.fringe_fixed[k]), grid, counting));
  }
  out.write("fringes.csv", io::fringes_to_csv(curves));

  io::json j = io::json::object();
  for (const auto& [name, curve] : curves) {
    const auto [lo, hi] = std::minmax_element(curve.values.begin(), curve.values.end());
    j[name] = {{"visibility", curve.visibility}, {"max", *hi}, {"min", *lo}};
  }
  return j;
}

inline io::json prepared_json(const ScenarioConfig& c, const PreparedState& prep) {
  const PureState phi = bell_state(BellKind::phi_plus);
  const auto es = eigen_hermitian(prep.state);
  return {{"source_theta", prep.source_theta},
          {"success_probability", prep.success_probability},
          {"noise_model", to_string(c.noise_model)},
          {"noise_p", prep.noise_p},
          {"noiseless_concurrence", concurrence(prep.noiseless)},
          {"concurrence", concurrence(prep.state)},
          {"fidelity_phi_plus", fidelity_with_pure(prep.state, phi)},
          {"top_eigenvector", detail::amplitudes_json(es.vectors[0])}};
}

enum class RunParts { all, fringes, chsh };

/// Runs a scenario end to end and writes its artifacts under `c.outputs`.
inline ScenarioReport run_scenario(const ScenarioConfig& c, RunParts parts = RunParts::all) {
  ScenarioReport rep{prepare_state(c), std::nullopt, io::json::object(), {}};
  const auto out = detail::open_outputs(c.outputs, rep.artifacts);
  rep.metrics["scenario"] = c.name;
  rep.metrics["seed"] = c.seed;
  rep.metrics["true_state"] = prepared_json(c, rep.prepared);

  if (parts == RunParts::all) {
    const auto plan = tomography_plan(c.tomography_plan);
    Counting counting{c.mean_pairs, c.background, derive_seed(c.seed, tomography_stream)};
    const auto records = acquire_tomography(rep.prepared.state, plan, counting);
    out.write("counts.csv", io::counts_to_csv(records));

    MleOptions mo;
    mo.plan = c.tomography_plan;
    PureState target = bell_state(BellKind::phi_plus);
    auto tomo = mle_reconstruct(records, std::nullopt, mo, target);
    if (c.target == "top-eigenvector") {
      target = top_eigenvector(tomo.rho);
    } else {
      target = bell_state(c.target);
    }
    tomo.metrics = metric_report(tomo.rho, target);
    if (c.bootstrap_replicas >= 2) {
      BootstrapOptions bo;
      bo.target = target;
      bo.chsh = c.chsh;
      bo.mle = mo;
      tomo.uncertainties = bootstrap_errors(records, c.bootstrap_replicas, derive_seed(c.seed, bootstrap_stream), bo);
    }
    out.write("rho.json", detail::dump(io::to_json(tomo.rho)));
    out.write("tomography.json", detail::dump(io::to_json(tomo)));

    const auto es = eigen_hermitian(tomo.rho);
    rep.metrics["reconstructed"] = {
        {"concurrence", tomo.metrics.concurrence},
        {"fidelity_target", tomo.metrics.fidelity_target},
        {"fidelity_phi_plus", fidelity_with_pure(tomo.rho, bell_state(BellKind::phi_plus))},
        {"purity", tomo.metrics.purity},
        {"target", c.target},
        {"top_eigenvector", detail::amplitudes_json(es.vectors[0])},
        {"S_from_rho", chsh_S(tomo.rho, c.chsh).S},
        {"uncertainties", io::to_json(tomo.uncertainties)},
        {"converged", tomo.converged},
        {"iterations", tomo.iterations}};
    rep.tomography = std::move(tomo);
  }
  if (parts == RunParts::all || parts == RunParts::chsh) rep.metrics["chsh"] = run_chsh(c, rep.prepared, out);
  if (parts == RunParts::all || parts == RunParts::fringes) rep.metrics["fringes"] = run_fringes(c, rep.prepared, out);

  out.write("metrics.json", detail::dump(rep.metrics));
  rep.artifacts.push_back("manifest.json");
  io::write_file((out.root / "manifest.json").string(),
                 detail::dump({{"scenario", c.name}, {"seed", c.seed}, {"artifacts", rep.artifacts}}));
  return rep;
}

} // namespace polent
