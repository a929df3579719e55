#pragma once
// File ingestion and result serialization: the jurisdiction CSV, the JSON
// run configuration, and the formatting rules for machine outputs
// (6 significant digits, '.' decimal point, fully deterministic).

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "hivst/calibration.hpp"
#include "hivst/scenario.hpp"

namespace hivst {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_data_error = 3;
inline constexpr int exit_numerical_error = 4;

// --- formatting ------------------------------------------------------------

inline std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// --- CSV -------------------------------------------------------------------

// Split one CSV line; double quotes delimit fields, doubled quotes escape.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::optional<double> parse_double(const std::string& s) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  if (b == e) return std::nullopt;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

struct JurisdictionFile {
  std::vector<SurveillanceRecord> records;
  std::vector<std::string> warnings;
};

// Load the jurisdiction table.  Each aggregate may arrive as a precomputed
// rate or be derived from raw counts; when both are present the rate wins
// and a warning is recorded.  Any malformed row aborts the load (partial
// cohorts are worse than no cohort).
inline JurisdictionFile load_jurisdictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open jurisdiction file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file (no header)");

  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"name", "p_nocare", "p_art", "p_vls"}) {
    if (!col.count(req)) {
      throw DataError(path + ": missing required column '" + std::string(req) + "'");
    }
  }

  JurisdictionFile out;
  auto field = [&](const std::vector<std::string>& row,
                   const char* name) -> std::optional<double> {
    const auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return std::nullopt;
    return parse_double(row[it->second]);
  };
  // Resolve one aggregate from its rate column or a count-derived fallback.
  auto resolve = [&](const std::vector<std::string>& row, int line_no,
                     const char* rate_col, std::optional<double> derived,
                     const char* what) -> double {
    const std::optional<double> rate = field(row, rate_col);
    if (rate && derived) {
      out.warnings.push_back(path + ":" + std::to_string(line_no) + ": both " +
                             rate_col + " and raw counts present; rate wins");
    }
    if (rate) return *rate;
    if (derived) return *derived;
    throw DataError(path + ":" + std::to_string(line_no) + ": no usable " +
                    std::string(what) + " (need " + rate_col + " or raw counts)");
  };

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> row = split_csv_line(line);
    const std::size_t name_idx = col.at("name");
    if (name_idx >= row.size() || row[name_idx].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": missing name");
    }
    const std::optional<double> prevalence = field(row, "prevalence");
    const std::optional<double> incidence = field(row, "incidence_per_year");
    const std::optional<double> deaths = field(row, "deaths_per_year");
    const std::optional<double> new_diag = field(row, "new_diagnoses_per_year");
    const std::optional<double> unaware = field(row, "unaware_prev_year");

    std::optional<double> lam_c, mu_c, aw_c, phi_c;
    if (prevalence && *prevalence > 0.0) {
      if (incidence) lam_c = *incidence / *prevalence / 12.0;
      if (deaths) mu_c = *deaths / *prevalence;
      if (unaware) aw_c = 1.0 - *unaware / *prevalence;
    }
    if (unaware && *unaware > 0.0 && new_diag) phi_c = *new_diag / *unaware / 12.0;

    SurveillanceRecord rec;
    rec.name = row[name_idx];
    rec.lambda_bar_per_month =
        resolve(row, line_no, "lambda_bar_per_month", lam_c, "transmission rate");
    rec.mu_bar_per_year =
        resolve(row, line_no, "mu_bar_per_year", mu_c, "mortality rate");
    rec.aware_fraction =
        resolve(row, line_no, "aware_fraction", aw_c, "aware fraction");
    rec.phi_bar_per_month =
        resolve(row, line_no, "phi_bar_per_month", phi_c, "testing rate");
    const auto need = [&](const char* name) {
      const std::optional<double> v = field(row, name);
      if (!v) {
        throw DataError(path + ":" + std::to_string(line_no) + ": missing " +
                        std::string(name));
      }
      return *v;
    };
    rec.p_nocare = need("p_nocare");
    rec.p_art = need("p_art");
    rec.p_vls = need("p_vls");
    try {
      require_valid(rec);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    for (const auto& existing : out.records) {
      if (existing.name == rec.name) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": duplicate jurisdiction '" + rec.name + "'");
      }
    }
    out.records.push_back(std::move(rec));
  }
  if (out.records.empty()) {
    out.warnings.push_back(path + ": no data rows (header only)");
  }
  return out;
}

// --- configuration ---------------------------------------------------------

struct ValidationConfig {
  int window_months = 36;
  int substeps_per_month = 4;
  double shell_susceptible_fraction = 0.995;
  double shell_exit_rate_factor = 0.5;
};

struct RunConfig {
  ModelConstants constants = reference_constants();
  ScenarioConfig scenario;
  ValidationConfig validation;
};

namespace detail {

inline double get_num(const nlohmann::json& j, const char* block, const char* key,
                      double fallback) {
  if (!j.contains(block) || !j.at(block).contains(key)) return fallback;
  const auto& v = j.at(block).at(key);
  if (!v.is_number()) {
    throw ConfigError(std::string(block) + "." + key + " must be a number");
  }
  return v.get<double>();
}

inline void get_stage_triplet(const nlohmann::json& j, const char* key,
                              std::array<double, 3>& out) {
  if (!j.contains("testing") || !j.at("testing").contains(key)) return;
  const auto& v = j.at("testing").at(key);
  for (const auto& [stage, idx] :
       std::initializer_list<std::pair<const char*, int>>{
           {"acute", 0}, {"chronic", 1}, {"aids", 2}}) {
    if (v.contains(stage)) {
      if (!v.at(stage).is_number()) {
        throw ConfigError(std::string("testing.") + key + "." + stage +
                          " must be a number");
      }
      out[static_cast<std::size_t>(idx)] = v.at(stage).get<double>();
    }
  }
}

}  // namespace detail

// Parse the run configuration.  Every block defaults to the reference
// constants except the transmission multipliers, which have no defensible
// default and must be stated; a missing block or key is a hard error that
// names what is absent.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }

  RunConfig cfg;
  auto& k = cfg.constants;
  k.progression.acute_to_chronic = detail::get_num(
      j, "progression", "acute_to_chronic_per_month", k.progression.acute_to_chronic);
  k.progression.chronic_to_aids = detail::get_num(
      j, "progression", "chronic_to_aids_per_month", k.progression.chronic_to_aids);
  detail::get_stage_triplet(j, "care_sensitivity", k.testing.care_sensitivity);
  detail::get_stage_triplet(j, "self_sensitivity", k.testing.self_sensitivity);
  detail::get_stage_triplet(j, "confirm_delay_months", k.testing.confirm_delay_months);
  detail::get_stage_triplet(j, "rate_multiplier", k.testing.rate_multiplier);
  k.mortality.chronic = detail::get_num(j, "mortality_ratios", "chronic", k.mortality.chronic);
  k.mortality.aids = detail::get_num(j, "mortality_ratios", "aids", k.mortality.aids);
  k.mortality.no_care = detail::get_num(j, "mortality_ratios", "no_care", k.mortality.no_care);
  k.mortality.art_no_vls =
      detail::get_num(j, "mortality_ratios", "art_no_vls", k.mortality.art_no_vls);
  k.mortality.vls = detail::get_num(j, "mortality_ratios", "vls", k.mortality.vls);

  {
    std::vector<std::string> missing;
    const char* keys[] = {"acute", "aids", "no_care", "art_no_vls", "vls"};
    for (const char* key : keys) {
      if (!j.contains("transmission_multipliers") ||
          !j.at("transmission_multipliers").contains(key)) {
        missing.push_back(std::string("transmission_multipliers.") + key);
      }
    }
    if (!missing.empty()) {
      std::string msg = path + ": missing required key(s):";
      for (const auto& m : missing) msg += " " + m;
      throw ConfigError(msg);
    }
    const auto& tm = j.at("transmission_multipliers");
    k.transmission.acute = tm.at("acute").get<double>();
    k.transmission.aids = tm.at("aids").get<double>();
    k.transmission.no_care = tm.at("no_care").get<double>();
    k.transmission.art_no_vls = tm.at("art_no_vls").get<double>();
    k.transmission.vls = tm.at("vls").get<double>();
  }

  if (j.contains("unaware_split")) {
    const auto& us = j.at("unaware_split");
    if (us.contains("mode")) {
      const std::string mode = us.at("mode").get<std::string>();
      if (mode == "stationary") {
        k.split.fit_stationary = true;
      } else if (mode == "fixed") {
        k.split.fit_stationary = false;
      } else {
        throw ConfigError("unaware_split.mode must be 'stationary' or 'fixed'");
      }
    }
    k.split.acute_fraction =
        detail::get_num(j, "unaware_split", "acute_fraction", k.split.acute_fraction);
    k.split.aids_fraction =
        detail::get_num(j, "unaware_split", "aids_fraction", k.split.aids_fraction);
  }

  cfg.scenario.horizon_months =
      detail::get_num(j, "scenario", "horizon_months", cfg.scenario.horizon_months);
  cfg.scenario.step_months =
      detail::get_num(j, "scenario", "step_months", cfg.scenario.step_months);
  cfg.scenario.grid_step =
      detail::get_num(j, "scenario", "grid_step", cfg.scenario.grid_step);
  if (j.contains("scenario") && j.at("scenario").contains("include_gamma_zero")) {
    cfg.scenario.include_gamma_zero =
        j.at("scenario").at("include_gamma_zero").get<bool>();
  }
  cfg.scenario.threshold_tolerance = detail::get_num(
      j, "scenario", "threshold_tolerance", cfg.scenario.threshold_tolerance);
  cfg.scenario.threshold_cap =
      detail::get_num(j, "scenario", "threshold_cap", cfg.scenario.threshold_cap);

  cfg.validation.window_months = static_cast<int>(detail::get_num(
      j, "validation", "window_months", cfg.validation.window_months));
  cfg.validation.substeps_per_month = static_cast<int>(detail::get_num(
      j, "validation", "substeps_per_month", cfg.validation.substeps_per_month));
  cfg.validation.shell_susceptible_fraction =
      detail::get_num(j, "validation", "shell_susceptible_fraction",
                      cfg.validation.shell_susceptible_fraction);
  cfg.validation.shell_exit_rate_factor =
      detail::get_num(j, "validation", "shell_exit_rate_factor",
                      cfg.validation.shell_exit_rate_factor);
  return cfg;
}

// --- calibrated-parameter round trip ----------------------------------------

inline nlohmann::json to_json(const CalibratedJurisdiction& cal) {
  nlohmann::json j;
  j["name"] = cal.name;
  j["transmission"] = {cal.rates.transmission[0], cal.rates.transmission[1],
                       cal.rates.transmission[2], cal.rates.transmission[3]};
  j["mortality"] = {cal.rates.mortality[0], cal.rates.mortality[1],
                    cal.rates.mortality[2], cal.rates.mortality[3]};
  j["base_testing"] = {cal.rates.base_testing[0], cal.rates.base_testing[1],
                       cal.rates.base_testing[2]};
  j["occupancy"] = {cal.occupancy[0], cal.occupancy[1], cal.occupancy[2],
                    cal.occupancy[3]};
  j["split_acute"] = cal.split_acute;
  j["split_aids"] = cal.split_aids;
  return j;
}

inline CalibratedJurisdiction calibrated_from_json(const nlohmann::json& j) {
  CalibratedJurisdiction cal;
  try {
    cal.name = j.at("name").get<std::string>();
    for (int i = 0; i < 4; ++i) {
      cal.rates.transmission[i] = j.at("transmission").at(i).get<double>();
      cal.rates.mortality[i] = j.at("mortality").at(i).get<double>();
      cal.occupancy[i] = j.at("occupancy").at(i).get<double>();
    }
    for (int i = 0; i < 3; ++i) {
      cal.rates.base_testing[i] = j.at("base_testing").at(i).get<double>();
    }
    cal.split_acute = j.at("split_acute").get<double>();
    cal.split_aids = j.at("split_aids").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed calibrated-parameter JSON: ") + e.what());
  }
  return cal;
}

// --- output ----------------------------------------------------------------

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << content;
  if (!out) throw DataError("failed writing output file: " + path);
}

inline std::string error_json(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  return j.dump();
}

}  // namespace hivst
