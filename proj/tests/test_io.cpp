#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "helpers.hpp"
#include "hivst/engine.hpp"
#include "hivst/io.hpp"

using namespace hivst;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / ("hivst_test_" + name)).string();
  write_text(path, content);
  return path;
}

}  // namespace

TEST_CASE("the shipped cohort table loads intact") {
  const JurisdictionFile f = load_jurisdictions(testutil::data_dir() + "/jurisdictions.csv");
  CHECK(f.records.size() == 38);
  CHECK(f.warnings.empty());
  // Quoted names containing commas must survive parsing.
  bool found = false;
  for (const auto& rec : f.records) {
    if (rec.name == "Alameda County, CA") {
      found = true;
      CHECK(rec.lambda_bar_per_month == Catch::Approx(0.00233333).epsilon(1e-9));
      CHECK(rec.mu_bar_per_year == Catch::Approx(0.009).epsilon(1e-12));
      CHECK(rec.aware_fraction == Catch::Approx(0.88).epsilon(1e-12));
      CHECK(rec.phi_bar_per_month == Catch::Approx(0.016).epsilon(1e-12));
    }
  }
  CHECK(found);
}

TEST_CASE("csv field splitting honors quotes and escapes") {
  const auto f = split_csv_line("\"King County, WA\",1,\"he said \"\"hi\"\"\",");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "King County, WA");
  CHECK(f[1] == "1");
  CHECK(f[2] == "he said \"hi\"");
  CHECK(f[3].empty());
  CHECK(quote_csv("King County, WA") == "\"King County, WA\"");
  CHECK(quote_csv("plain") == "plain");
}

TEST_CASE("number parsing is strict") {
  CHECK(parse_double(" 1.5 ").value() == 1.5);
  CHECK(parse_double("-2e-3").value() == -0.002);
  CHECK_FALSE(parse_double("").has_value());
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("nanana").has_value());
}

TEST_CASE("a header-only table is empty with a warning") {
  const std::string path = temp_file(
      "header_only.csv",
      "name,lambda_bar_per_month,mu_bar_per_year,aware_fraction,"
      "phi_bar_per_month,p_nocare,p_art,p_vls\n");
  const JurisdictionFile f = load_jurisdictions(path);
  CHECK(f.records.empty());
  REQUIRE(f.warnings.size() == 1);
  CHECK_THAT(f.warnings[0], ContainsSubstring("no data rows"));
}

TEST_CASE("invalid rows abort the load with a located message") {
  const std::string header =
      "name,lambda_bar_per_month,mu_bar_per_year,aware_fraction,"
      "phi_bar_per_month,p_nocare,p_art,p_vls\n";
  SECTION("aware fraction out of range") {
    const std::string path = temp_file(
        "bad_aware.csv", header + "Badville,0.002,0.01,1.2,0.016,0.1,0.2,0.5\n");
    CHECK_THROWS_MATCHES(load_jurisdictions(path), DataError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring(":2:") &&
                             ContainsSubstring("aware_fraction")));
  }
  SECTION("care-continuum shares exceed the aware fraction") {
    const std::string path = temp_file(
        "bad_shares.csv", header + "Badville,0.002,0.01,0.5,0.016,0.3,0.3,0.3\n");
    CHECK_THROWS_MATCHES(load_jurisdictions(path), DataError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("care-continuum")));
  }
  SECTION("duplicate names are rejected") {
    const std::string path = temp_file(
        "dup.csv", header + "Twin,0.002,0.01,0.9,0.016,0.1,0.2,0.5\n" +
                       "Twin,0.002,0.01,0.9,0.016,0.1,0.2,0.5\n");
    CHECK_THROWS_MATCHES(load_jurisdictions(path), DataError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("duplicate") &&
                             ContainsSubstring(":3:")));
  }
  SECTION("a missing aggregate names itself") {
    const std::string path = temp_file(
        "missing_phi.csv",
        "name,lambda_bar_per_month,mu_bar_per_year,aware_fraction,p_nocare,p_art,p_vls\n"
        "NoPhi,0.002,0.01,0.9,0.1,0.2,0.5\n");
    CHECK_THROWS_MATCHES(load_jurisdictions(path), DataError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("phi_bar_per_month")));
  }
}

TEST_CASE("aggregates can be derived from raw counts") {
  const std::string header =
      "name,prevalence,incidence_per_year,deaths_per_year,"
      "new_diagnoses_per_year,unaware_prev_year,p_nocare,p_art,p_vls\n";
  const std::string path = temp_file(
      "counts.csv", header + "Countston,6000,168,54,138.24,720,0.14,0.23,0.51\n");
  const JurisdictionFile f = load_jurisdictions(path);
  REQUIRE(f.records.size() == 1);
  const SurveillanceRecord& r = f.records[0];
  CHECK(r.lambda_bar_per_month == Catch::Approx(168.0 / 6000.0 / 12.0).epsilon(1e-14));
  CHECK(r.mu_bar_per_year == Catch::Approx(54.0 / 6000.0).epsilon(1e-14));
  CHECK(r.aware_fraction == Catch::Approx(1.0 - 720.0 / 6000.0).epsilon(1e-14));
  CHECK(r.phi_bar_per_month == Catch::Approx(138.24 / 720.0 / 12.0).epsilon(1e-14));
  CHECK(f.warnings.empty());
}

TEST_CASE("explicit rates win over raw counts, with a warning") {
  const std::string header =
      "name,lambda_bar_per_month,prevalence,incidence_per_year,mu_bar_per_year,"
      "aware_fraction,phi_bar_per_month,p_nocare,p_art,p_vls\n";
  const std::string path = temp_file(
      "both.csv", header + "Bothton,0.005,6000,168,0.01,0.9,0.016,0.1,0.2,0.5\n");
  const JurisdictionFile f = load_jurisdictions(path);
  REQUIRE(f.records.size() == 1);
  CHECK(f.records[0].lambda_bar_per_month == 0.005);
  REQUIRE(f.warnings.size() == 1);
  CHECK_THAT(f.warnings[0], ContainsSubstring("lambda_bar_per_month"));
  CHECK_THAT(f.warnings[0], ContainsSubstring("rate wins"));
}

TEST_CASE("the shipped run configuration reproduces the built-in constants") {
  const RunConfig cfg = load_config(testutil::data_dir() + "/reference_config.json");
  const ModelConstants ref = reference_constants();
  CHECK(cfg.constants.progression.acute_to_chronic == ref.progression.acute_to_chronic);
  CHECK(cfg.constants.progression.chronic_to_aids == ref.progression.chronic_to_aids);
  CHECK(cfg.constants.testing.care_sensitivity == ref.testing.care_sensitivity);
  CHECK(cfg.constants.testing.self_sensitivity == ref.testing.self_sensitivity);
  CHECK(cfg.constants.testing.confirm_delay_months == ref.testing.confirm_delay_months);
  CHECK(cfg.constants.testing.rate_multiplier == ref.testing.rate_multiplier);
  CHECK(cfg.constants.mortality.vls == ref.mortality.vls);
  CHECK(cfg.constants.transmission.acute == ref.transmission.acute);
  CHECK(cfg.constants.transmission.vls == ref.transmission.vls);
  CHECK(cfg.constants.split.fit_stationary == ref.split.fit_stationary);
  CHECK(cfg.scenario.horizon_months == 120.0);
  CHECK(cfg.scenario.grid_step == 0.05);
  CHECK(cfg.validation.window_months == 36);
}

TEST_CASE("transmission multipliers are mandatory in a config file") {
  SECTION("block missing entirely") {
    const std::string path = temp_file("cfg_missing_block.json", "{}");
    CHECK_THROWS_MATCHES(load_config(path), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("transmission_multipliers.acute") &&
                             ContainsSubstring("transmission_multipliers.vls")));
  }
  SECTION("one key missing") {
    const std::string path = temp_file(
        "cfg_missing_key.json",
        R"({"transmission_multipliers": {"acute": 6.0, "aids": 1.5,
            "no_care": 1.0, "art_no_vls": 0.2}})");
    CHECK_THROWS_MATCHES(load_config(path), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("transmission_multipliers.vls")));
  }
  SECTION("invalid JSON is a config error") {
    const std::string path = temp_file("cfg_bad.json", "{not json");
    CHECK_THROWS_AS(load_config(path), ConfigError);
  }
  SECTION("bad split mode is a config error") {
    const std::string path = temp_file(
        "cfg_bad_mode.json",
        R"({"transmission_multipliers": {"acute": 6.0, "aids": 1.5,
            "no_care": 1.0, "art_no_vls": 0.2, "vls": 0.08},
            "unaware_split": {"mode": "banana"}})");
    CHECK_THROWS_MATCHES(load_config(path), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("unaware_split.mode")));
  }
}

TEST_CASE("config overrides land where they should") {
  const std::string path = temp_file(
      "cfg_override.json",
      R"({"transmission_multipliers": {"acute": 6.0, "aids": 1.5,
          "no_care": 1.0, "art_no_vls": 0.2, "vls": 0.08},
          "scenario": {"grid_step": 0.1, "include_gamma_zero": false},
          "unaware_split": {"mode": "fixed", "acute_fraction": 0.05},
          "testing": {"self_sensitivity": {"acute": 0.5}}})");
  const RunConfig cfg = load_config(path);
  CHECK(cfg.scenario.grid_step == 0.1);
  CHECK(cfg.scenario.include_gamma_zero == false);
  CHECK(cfg.constants.split.fit_stationary == false);
  CHECK(cfg.constants.split.acute_fraction == 0.05);
  CHECK(cfg.constants.split.aids_fraction == reference_constants().split.aids_fraction);
  CHECK(cfg.constants.testing.self_sensitivity[0] == 0.5);
  CHECK(cfg.constants.testing.self_sensitivity[1] ==
        reference_constants().testing.self_sensitivity[1]);
}

TEST_CASE("fixed-significance formatting is deterministic") {
  CHECK(format_g6(0.0023333333333333335) == "0.00233333");
  CHECK(format_g6(0.88) == "0.88");
  CHECK(format_g6(2.6615427530639675) == "2.66154");
  CHECK(format_g6(0.0) == "0");
  // Same value, same string, every time.
  for (int i = 0; i < 3; ++i) {
    CHECK(format_g6(0.5104) == "0.5104");
  }
}

TEST_CASE("calibrated parameters survive a serialization round trip") {
  const ModelConstants k = reference_constants();
  const CalibratedJurisdiction cal = calibrate(testutil::alameda_record(), k);
  const std::string text = to_json(cal).dump(2);
  const CalibratedJurisdiction back =
      calibrated_from_json(nlohmann::json::parse(text));
  CHECK(back.name == cal.name);
  // The JSON writer emits shortest round-trip doubles, so the reloaded
  // parameters are bit-identical and any downstream trajectory matches
  // exactly.
  CHECK((back.rates.transmission.array() == cal.rates.transmission.array()).all());
  CHECK((back.rates.mortality.array() == cal.rates.mortality.array()).all());
  CHECK((back.rates.base_testing.array() == cal.rates.base_testing.array()).all());
  CHECK((back.occupancy.array() == cal.occupancy.array()).all());

  const ModelMatrices m0 = assemble(k.progression, cal.rates, k.testing, Policy{});
  const ModelMatrices m1 = assemble(k.progression, back.rates, k.testing, Policy{});
  const Trajectory t0 = integrate_linear(m0, cal.occupancy, 120.0, 0.25);
  const Trajectory t1 = integrate_linear(m1, back.occupancy, 120.0, 0.25);
  CHECK(t0.cumulative_incidence.back() == t1.cumulative_incidence.back());
}

TEST_CASE("malformed calibrated-parameter JSON is a data error") {
  CHECK_THROWS_AS(calibrated_from_json(nlohmann::json::parse(R"({"name": "x"})")),
                  DataError);
}

TEST_CASE("file writes are binary-faithful") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "hivst_test_write.csv").string();
  const std::string payload = "a,b\n1,2\n";
  write_text(path, payload);
  write_text(path, payload);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == payload);
}
