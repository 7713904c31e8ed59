#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyapunov.hpp"
#include "model.hpp"
#include "perturbative.hpp"
#include "spectral.hpp"
#include "verify.hpp"

namespace striplyap {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

/// Shortest text with 17 significant digits; parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(cur);
    if (first)
      t.header = std::move(cells);
    else
      t.rows.push_back(std::move(cells));
    first = false;
  }
  return t;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
  return a;
}

inline json to_json(const StripModel& m) {
  return {{"width", m.width},
          {"energy", m.energy},
          {"lambda", m.coupling},
          {"disorder", std::string(to_string(m.disorder))},
          {"seed", m.seed}};
}

inline json to_json(const ChannelData& cd) {
  json ch = json::array();
  for (const auto& c : cd.channels)
    ch.push_back({{"index", c.index},
                  {"mu", c.mu},
                  {"kind", std::string(to_string(c.kind))},
                  {"eta", c.eta},
                  {"h2", c.h2()},
                  {"nu", c.nu},
                  {"modes", c.modes},
                  {"g", {c.g.real(), c.g.imag()}}});
  return {{"width", cd.width},
          {"energy", cd.energy},
          {"channels", ch},
          {"hyperbolic", cd.hyperbolic},
          {"L_c", cd.L_c},
          {"L_h", cd.L_h},
          {"h_av_sq", cd.h_av_sq}};
}

inline json to_json(const PhaseRelation& r) {
  return {{"relation", r.describe()}, {"k", r.k}, {"l", r.l}, {"m", r.m}, {"j", r.j}, {"sigma", r.sigma},
          {"residual", r.residual}};
}

inline json to_json(const HypothesisReport& h) {
  json v = json::array(), w = json::array();
  for (const auto& r : h.violations) v.push_back(to_json(r));
  for (const auto& r : h.warnings) w.push_back(to_json(r));
  return {{"satisfied", h.satisfied}, {"tolerance", h.tolerance}, {"warn_tolerance", h.warn_tolerance},
          {"min_residual", h.min_residual}, {"violations", v}, {"warnings", w}};
}

inline json to_json(const LyapunovEstimate& e) {
  return {{"gammas", to_json(e.gammas)},
          {"stderrs", to_json(e.stderrs)},
          {"partial_sums", to_json(e.partial_sums)},
          {"partial_stderrs", to_json(e.partial_stderrs)},
          {"raw_gammas", to_json(e.raw_gammas)},
          {"steps", e.steps},
          {"burn_in", e.burn_in},
          {"batches", e.batches},
          {"trajectories", e.trajectories},
          {"seed", e.seed},
          {"model", to_json(e.model)}};
}

inline json to_json(const VerifyReport& r) {
  json a = json::array();
  for (const auto& e : r.entries)
    a.push_back({{"name", e.name},
                 {"identity", e.identity},
                 {"value", e.value},
                 {"threshold", e.threshold},
                 {"pass", e.pass},
                 {"kind", e.kind},
                 {"note", e.note}});
  return {{"pass", r.pass()}, {"rejected", r.rejected}, {"entries", a}};
}

inline json to_json(const MeanFieldWeights& m) {
  return {{"rho1", to_json(m.rho1)},
          {"Z", m.Z},
          {"normalization_residual", m.normalization_residual},
          {"fixed_point_residual", m.fixed_point_residual}};
}

inline json document(json config, json results) {
  return {{"config", std::move(config)}, {"results", std::move(results)}, {"version", kVersion}};
}

inline void print_report(std::ostream& os, const VerifyReport& r) {
  for (const auto& e : r.entries) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-5s %11.3e  (<= %.1e)", e.pass ? "ok" : "FAIL", e.value, e.threshold);
    os << buf << "  " << e.name;
    if (!e.note.empty()) os << "  [" << e.note << "]";
    os << '\n';
  }
  os << (r.pass() ? "all checks passed" : "verification FAILED") << '\n';
}

}  // namespace striplyap
