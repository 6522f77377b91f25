#pragma once

// File formats: covariance-matrix JSON documents, marker-report JSON/CSV,
// homodyne trace CSV, trajectory and region-grid CSV. All files state the
// sql_half convention; entropy-like values are written in nats unless a
// bits display is requested.

#include "cvmark/channel.hpp"
#include "cvmark/covariance.hpp"
#include "cvmark/homodyne.hpp"
#include "cvmark/markers.hpp"
#include "cvmark/reconstruction.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace cvmark {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Covariance matrix documents

struct CmInput {
  Mat4 sigma = Mat4::Zero();
  std::optional<StandardForm> standard;  // set when the input was shorthand
};

inline json cm_to_json(const Mat4& sigma) {
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(sigma(i, j));
    rows.push_back(row);
  }
  return json{{"convention", "sql_half"}, {"order", "X1 Y1 X2 Y2"}, {"matrix", rows}};
}

inline json cm_to_json(const StandardForm& sf) {
  return json{{"n", sf.n}, {"m", sf.m}, {"c1", sf.c1}, {"c2", sf.c2}};
}

/// Accepts either the full-matrix document or the standard-form shorthand
/// {"n":.., "m":.., "c1":.., "c2":..}.
inline CmInput parse_cm(const json& doc) {
  CmInput in;
  if (doc.contains("matrix")) {
    if (doc.contains("convention") && doc["convention"] != "sql_half")
      throw std::invalid_argument("cm json: unsupported convention '" +
                                  doc["convention"].get<std::string>() + "'");
    if (doc.contains("order") && doc["order"] != "X1 Y1 X2 Y2")
      throw std::invalid_argument("cm json: unsupported quadrature order");
    const auto& rows = doc["matrix"];
    if (!rows.is_array() || rows.size() != 4)
      throw std::invalid_argument("cm json: matrix must be 4x4");
    for (int i = 0; i < 4; ++i) {
      if (!rows[i].is_array() || rows[i].size() != 4)
        throw std::invalid_argument("cm json: matrix must be 4x4");
      for (int j = 0; j < 4; ++j) in.sigma(i, j) = rows[i][j].get<double>();
    }
    check_covariance(in.sigma);
    return in;
  }
  if (doc.contains("n") && doc.contains("m") && doc.contains("c1") && doc.contains("c2")) {
    in.standard = make_standard_form(doc["n"].get<double>(), doc["m"].get<double>(),
                                     doc["c1"].get<double>(), doc["c2"].get<double>());
    in.sigma = in.standard->embed();
    return in;
  }
  throw std::invalid_argument("cm json: expected 'matrix' document or n/m/c1/c2 shorthand");
}

inline CmInput parse_cm(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("cm json: ") + e.what());
  }
  return parse_cm(doc);
}

// ---------------------------------------------------------------------------
// Marker reports

inline constexpr const char* kEntropyLikeFields[] = {"entropy", "mutual_info",
                                                     "discord_meas2", "discord_meas1"};

inline bool entropy_like(const std::string& name) {
  for (const char* f : kEntropyLikeFields)
    if (name == f) return true;
  return false;
}

/// Flat JSON document; `bits` rescales the entropy-like fields by 1/ln 2.
inline json marker_report_to_json(const MarkerReport& r, bool bits = false) {
  json doc;
  const auto names = MarkerReport::value_names();
  const auto vals = r.values();
  for (int k = 0; k < MarkerReport::kValueCount; ++k) {
    double v = vals[k];
    if (bits && entropy_like(names[k])) v /= std::log(2.0);
    doc[names[k]] = v;
  }
  const auto fnames = MarkerReport::flag_names();
  const auto flags = r.flags();
  for (std::size_t k = 0; k < fnames.size(); ++k) doc[fnames[k]] = flags[k];
  doc["units"] = bits ? "bits" : "nats";
  doc["convention"] = "sql_half";
  return doc;
}

inline std::string marker_report_csv_header() {
  std::string line;
  for (const char* n : MarkerReport::value_names()) {
    line += n;
    line += ',';
  }
  const auto fnames = MarkerReport::flag_names();
  for (std::size_t k = 0; k < fnames.size(); ++k) {
    line += fnames[k];
    if (k + 1 < fnames.size()) line += ',';
  }
  return line;
}

inline std::string marker_report_csv_line(const MarkerReport& r, bool bits = false) {
  std::string line;
  const auto names = MarkerReport::value_names();
  const auto vals = r.values();
  for (int k = 0; k < MarkerReport::kValueCount; ++k) {
    double v = vals[k];
    if (bits && entropy_like(names[k])) v /= std::log(2.0);
    line += format_double(v);
    line += ',';
  }
  const auto flags = r.flags();
  for (std::size_t k = 0; k < flags.size(); ++k) {
    line += flags[k] ? '1' : '0';
    if (k + 1 < flags.size()) line += ',';
  }
  return line;
}

// ---------------------------------------------------------------------------
// Homodyne traces

inline void write_trace_csv(std::ostream& os, const HomodyneTrace& tr) {
  os << "# mode=" << tr.mode_label << " seed=" << tr.seed << " samples=" << tr.values.size()
     << " calibrated=" << (tr.calibrated ? "true" : "false") << "\n";
  os << "phase,value\n";
  for (std::size_t i = 0; i < tr.values.size(); ++i)
    os << format_double(tr.phases[i]) << ',' << format_double(tr.values[i]) << "\n";
}

inline HomodyneTrace read_trace_csv(std::istream& is) {
  HomodyneTrace tr;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
    throw std::invalid_argument("trace csv: missing header comment");
  std::istringstream hs(line.substr(2));
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq), val = token.substr(eq + 1);
    if (key == "mode") tr.mode_label = val;
    else if (key == "seed") tr.seed = std::stoull(val);
    else if (key == "calibrated") tr.calibrated = (val == "true");
  }
  if (!std::getline(is, line) || line != "phase,value")
    throw std::invalid_argument("trace csv: missing column header");
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("trace csv: malformed row at line " + std::to_string(lineno));
    tr.phases.push_back(std::stod(line.substr(0, comma)));
    tr.values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (tr.values.empty()) throw std::invalid_argument("trace csv: no samples");
  return tr;
}

// ---------------------------------------------------------------------------
// Trajectory tables

inline std::string trajectory_csv_header() {
  std::string line = "T,n_T,m_T,c1_T,c2_T,mean_photon,mean_abs_correlation,";
  line += marker_report_csv_header();
  return line;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryTable& table,
                                 bool bits = false) {
  os << "# cvmark trajectory v1 convention=sql_half units=" << (bits ? "bits" : "nats")
     << "\n";
  os << trajectory_csv_header() << "\n";
  for (const TrajectoryRow& row : table) {
    os << format_double(row.transmission) << ',' << format_double(row.state.n) << ','
       << format_double(row.state.m) << ',' << format_double(row.state.c1) << ','
       << format_double(row.state.c2) << ',' << format_double(row.mean_photon) << ','
       << format_double(0.5 * (std::abs(row.state.c1) + std::abs(row.state.c2))) << ','
       << marker_report_csv_line(row.report, bits) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Region grids

inline void write_region_csv(std::ostream& os, double n, int resolution) {
  if (resolution < 8) throw std::invalid_argument("region grid: resolution below 8");
  os << "# cvmark region v1 n=" << format_double(n) << " resolution=" << resolution << "\n";
  os << "c1_tilde,c2_tilde,region\n";
  for (int i = 0; i < resolution; ++i) {
    const double c1t = -1.0 + 2.0 * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      const double c2t = -1.0 + 2.0 * j / (resolution - 1);
      os << format_double(c1t) << ',' << format_double(c2t) << ','
         << region_name(classify_region(n, c1t, c2t)) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Reconstruction results

inline json reconstruction_to_json(const ReconstructionResult& res, bool bits = false) {
  json doc;
  doc["cm"] = cm_to_json(res.cm.cm);
  json errors = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(res.cm.errors(i, j));
    errors.push_back(row);
  }
  doc["errors"] = errors;
  doc["residual_chi2_per_dof"] = res.cm.residual_chi2_per_dof;
  doc["physical"] = res.cm.physical;
  doc["bona_fide_margin"] = res.cm.margin;
  json gauss = json::array();
  for (const auto& rep : res.gaussianity) {
    json bins = json::array();
    for (const auto& b : rep.bins)
      bins.push_back(json{{"count", b.count},
                          {"excess_kurtosis", b.excess_kurtosis},
                          {"standard_error", b.standard_error},
                          {"flagged", b.flagged}});
    gauss.push_back(json{{"label", rep.label}, {"any_flagged", rep.any_flagged}, {"bins", bins}});
  }
  doc["gaussianity"] = gauss;
  json moments = json::array();
  for (const auto& est : res.moments)
    moments.push_back(json{{"mode", mode_name(est.mode)},
                           {"var_x", est.var_x},
                           {"var_y", est.var_y},
                           {"cov_xy", est.cov_xy},
                           {"se_var_x", est.se_var_x},
                           {"se_var_y", est.se_var_y},
                           {"se_cov_xy", est.se_cov_xy},
                           {"chi2_per_dof", est.chi2_per_dof}});
  doc["moments"] = moments;
  doc["markers"] = marker_report_to_json(res.markers, bits);
  return doc;
}

inline json bootstrap_to_json(const BootstrapSummary& bs, bool bits = false) {
  json doc = reconstruction_to_json(bs.point, bits);
  json sd;
  const auto names = MarkerReport::value_names();
  for (int k = 0; k < MarkerReport::kValueCount; ++k) {
    double m = bs.marker_mean[k], s = bs.marker_sd[k];
    if (bits && entropy_like(names[k])) {
      m /= std::log(2.0);
      s /= std::log(2.0);
    }
    sd[names[k]] = json{{"mean", m}, {"sd", s}};
  }
  doc["markers_bootstrap"] = sd;
  json cm_sd = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(bs.cm_sd(i, j));
    cm_sd.push_back(row);
  }
  doc["cm_bootstrap_sd"] = cm_sd;
  doc["resamples"] = bs.resamples;
  if (bs.has_transmission) {
    doc["transmission"] = json{{"point", bs.transmission_point},
                               {"mean", bs.transmission_mean},
                               {"sd", bs.transmission_sd},
                               {"failed_resamples", bs.transmission_failures}};
  }
  return doc;
}

}  // namespace cvmark
