#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polent/tomo.hpp"

namespace polent::io {

using nlohmann::json;

// Density matrices: {"re": 4x4, "im": 4x4}, row-major, basis (HH, HV, VH, VV).
inline json to_json(const DensityMatrix& rho) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < 4; ++r) {
    json rr = json::array(), ii = json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(rho(r, c).real());
      ii.push_back(rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

inline DensityMatrix density_from_json(const json& j) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im")) throw invalid_input("density matrix needs 're' and 'im'");
  Mat4 m;
  for (const char* part : {"re", "im"}) {
    const json& a = j.at(part);
    if (!a.is_array() || a.size() != 4) throw invalid_input("density matrix parts must be 4x4");
    for (int r = 0; r < 4; ++r) {
      if (!a[r].is_array() || a[r].size() != 4) throw invalid_input("density matrix parts must be 4x4");
      for (int c = 0; c < 4; ++c) {
        const double v = a[r][c].get<double>();
        if (part[0] == 'r')
          m(r, c) = cplx(v, 0.0);
        else
          m(r, c) += cplx(0.0, v);
      }
    }
  }
  return DensityMatrix(m);
}

inline json to_json(const MetricReport& m) {
  return {{"concurrence", m.concurrence},
          {"fidelity_target", m.fidelity_target},
          {"purity", m.purity},
          {"eigen_spectrum", m.eigen_spectrum}};
}

inline json to_json(const Uncertainties& u) {
  return {{"concurrence", u.concurrence}, {"fidelity_target", u.fidelity_target}, {"S", u.S}};
}

inline json to_json(const TomographyResult& t) {
  return {{"plan", t.plan},
          {"rho", to_json(t.rho)},
          {"metrics", to_json(t.metrics)},
          {"uncertainties", to_json(t.uncertainties)},
          {"likelihood", t.likelihood},
          {"iterations", t.iterations},
          {"converged", t.converged}};
}

inline json to_json(const ChshResult& r, const ChshPlan& plan) {
  return {{"plan", {{"alice", plan.alice}, {"bob", plan.bob}}},
          {"E", {{r.E(0, 0), r.E(0, 1)}, {r.E(1, 0), r.E(1, 1)}}},
          {"S", r.S},
          {"sigma_S", r.sigma_S}};
}

//---------------------------------------------------------------------------//
// Count records as CSV: setting_1,setting_2,counts,expected_pairs
//---------------------------------------------------------------------------//

inline const char* counts_header = "setting_1,setting_2,counts,expected_pairs";

inline std::string counts_to_csv(std::span<const CountRecord> records) {
  std::string out = std::string(counts_header) + "\n";
  for (const auto& r : records) {
    out += r.setting.proj_1.label() + "," + r.setting.proj_2.label() + "," + detail::format_double(r.counts) + "," +
           detail::format_double(r.expected_pairs) + "\n";
  }
  return out;
}

inline std::vector<CountRecord> counts_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("empty count file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != counts_header) throw invalid_input("unexpected count file header '" + line + "'");
  std::vector<CountRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 4) throw invalid_input("line " + std::to_string(lineno) + ": expected 4 columns");
    CountRecord r{MeasurementSetting::parse(cells[0], cells[1]), detail::parse_double(cells[2]),
                  detail::parse_double(cells[3])};
    if (!(r.counts >= 0.0)) throw invalid_input("line " + std::to_string(lineno) + ": negative counts");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CountRecord> counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  return counts_from_csv(in);
}

/// Long-format fringe table: curve,angle_rad,value.
inline std::string fringes_to_csv(const std::vector<std::pair<std::string, FringeCurve>>& curves) {
  std::string out = "curve,angle_rad,value\n";
  for (const auto& [name, c] : curves)
    for (std::size_t i = 0; i < c.angles.size(); ++i)
      out += name + "," + detail::format_double(c.angles[i]) + "," + detail::format_double(c.values[i]) + "\n";
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace polent::io
