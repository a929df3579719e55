// Command-line front end for the jurisdiction-level HIV testing-policy
// toolkit: calibrate stage-resolved rates from surveillance aggregates,
// inspect reproduction numbers, simulate policies, sweep policy grids,
// solve for threshold testing expansions, and validate calibrations.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration error,
// 3 data error, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hivst/hivst.hpp"

namespace {

using namespace hivst;

struct CommonOpts {
  std::string jurisdictions_path;
  std::string config_path;
  std::string out_dir = ".";
  std::string only;  // restrict to one jurisdiction by name
  bool json_errors = false;
};

void add_common(CLI::App* sub, CommonOpts& o, bool jurisdictions_required = true) {
  auto* j = sub->add_option("--jurisdictions", o.jurisdictions_path,
                            "Jurisdiction table (CSV)");
  if (jurisdictions_required) j->required();
  sub->add_option("--config", o.config_path, "Run configuration (JSON)");
  sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--jurisdiction", o.only, "Restrict to one jurisdiction by name");
  sub->add_flag("--json-errors", o.json_errors, "Report errors as JSON on stderr");
}

RunConfig run_config(const CommonOpts& o) {
  if (o.config_path.empty()) return RunConfig{};
  return load_config(o.config_path);
}

std::vector<SurveillanceRecord> cohort(const CommonOpts& o) {
  JurisdictionFile f = load_jurisdictions(o.jurisdictions_path);
  for (const auto& w : f.warnings) std::cerr << "warning: " << w << "\n";
  if (!o.only.empty()) {
    std::vector<SurveillanceRecord> picked;
    for (auto& rec : f.records) {
      if (rec.name == o.only) picked.push_back(std::move(rec));
    }
    if (picked.empty()) {
      throw DataError("jurisdiction '" + o.only + "' not found in " +
                      o.jurisdictions_path);
    }
    return picked;
  }
  if (f.records.empty()) {
    throw DataError(o.jurisdictions_path + ": no jurisdictions to process");
  }
  return f.records;
}

const SurveillanceRecord& single(const std::vector<SurveillanceRecord>& recs) {
  if (recs.size() != 1) {
    throw ConfigError("this command works on one jurisdiction; pick it with --jurisdiction");
  }
  return recs.front();
}

std::string out_path(const CommonOpts& o, const std::string& file) {
  std::filesystem::create_directories(o.out_dir);
  return (std::filesystem::path(o.out_dir) / file).string();
}

void emit(const CommonOpts& o, const std::string& file, const std::string& content) {
  const std::string path = out_path(o, file);
  write_text(path, content);
  std::cout << "wrote " << path << "\n";
}

// --- calibrate ---------------------------------------------------------------

void cmd_calibrate(const CommonOpts& o) {
  const RunConfig cfg = run_config(o);
  const auto recs = cohort(o);
  std::string csv =
      "jurisdiction,transmission_acute,transmission_chronic,transmission_aids,"
      "transmission_diagnosed,mortality_acute,mortality_chronic,mortality_aids,"
      "mortality_diagnosed,testing_acute,testing_chronic,testing_aids,"
      "occupancy_acute,occupancy_chronic,occupancy_aids,occupancy_diagnosed,"
      "split_acute,split_aids\n";
  nlohmann::json all = nlohmann::json::array();
  for (const auto& rec : recs) {
    const CalibratedJurisdiction cal = calibrate(rec, cfg.constants);
    csv += quote_csv(cal.name);
    for (int i = 0; i < 4; ++i) csv += "," + format_g6(cal.rates.transmission[i]);
    for (int i = 0; i < 4; ++i) csv += "," + format_g6(cal.rates.mortality[i]);
    for (int i = 0; i < 3; ++i) csv += "," + format_g6(cal.rates.base_testing[i]);
    for (int i = 0; i < 4; ++i) csv += "," + format_g6(cal.occupancy[i]);
    csv += "," + format_g6(cal.split_acute) + "," + format_g6(cal.split_aids) + "\n";
    all.push_back(to_json(cal));
  }
  emit(o, "calibrated.csv", csv);
  emit(o, "calibrated.json", all.dump(2) + "\n");
  std::cout << "calibrated " << recs.size() << " jurisdiction(s)\n";
}

// --- ngm ---------------------------------------------------------------------

void cmd_ngm(const CommonOpts& o) {
  const RunConfig cfg = run_config(o);
  const auto recs = cohort(o);
  std::string csv =
      "jurisdiction,r_t,r_awr,time_acute,time_chronic,time_aids,"
      "prob_diagnosed,diagnosed_term\n";
  for (const auto& rec : recs) {
    const CalibratedJurisdiction cal = calibrate(rec, cfg.constants);
    const ModelMatrices m =
        assemble(cfg.constants.progression, cal.rates, cfg.constants.testing, Policy{});
    const ReproductionDecomposition d = decompose(m, cal.rates);
    csv += quote_csv(cal.name) + "," + format_g6(reproduction_number(m)) + "," +
           format_g6(awareness_reproduction_number(m, cal.rates)) + "," +
           format_g6(d.time_acute) + "," + format_g6(d.time_chronic) + "," +
           format_g6(d.time_aids) + "," + format_g6(d.prob_diagnosed) + "," +
           format_g6(d.diagnosed_term) + "\n";
  }
  emit(o, "ngm.csv", csv);
}

// --- simulate ----------------------------------------------------------------

struct SimulateOpts {
  CommonOpts common;
  std::string calibrated_path;  // alternative to --jurisdictions
  double gamma = 0.0;
  double chi = 0.0;
  double horizon_months = -1.0;  // <0: take from config
  double step_months = -1.0;
};

CalibratedJurisdiction pick_calibrated(const SimulateOpts& s, const ModelConstants& k) {
  if (!s.calibrated_path.empty()) {
    std::ifstream in(s.calibrated_path);
    if (!in) throw DataError("cannot open calibrated file: " + s.calibrated_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(s.calibrated_path + ": invalid JSON: " + e.what());
    }
    if (j.is_object()) return calibrated_from_json(j);
    std::vector<CalibratedJurisdiction> cals;
    for (const auto& item : j) {
      CalibratedJurisdiction cal = calibrated_from_json(item);
      if (s.common.only.empty() || cal.name == s.common.only) {
        cals.push_back(std::move(cal));
      }
    }
    if (cals.empty()) {
      throw DataError(s.calibrated_path + ": no matching calibrated jurisdiction");
    }
    if (cals.size() != 1) {
      throw ConfigError("calibrated file holds several jurisdictions; pick one with --jurisdiction");
    }
    return cals.front();
  }
  return calibrate(single(cohort(s.common)), k);
}

void cmd_simulate(const SimulateOpts& s) {
  const RunConfig cfg = run_config(s.common);
  const CalibratedJurisdiction cal = pick_calibrated(s, cfg.constants);
  const double horizon =
      s.horizon_months > 0 ? s.horizon_months : cfg.scenario.horizon_months;
  const double step = s.step_months > 0 ? s.step_months : cfg.scenario.step_months;
  const Policy p{s.gamma, s.chi};
  const ModelMatrices m =
      assemble(cfg.constants.progression, cal.rates, cfg.constants.testing, p);
  const Trajectory t = integrate_linear(m, cal.occupancy, horizon, step);
  std::string csv =
      "time_months,acute,chronic,aids,diagnosed,cumulative_incidence\n";
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    csv += format_g6(t.times[i]);
    for (int c = 0; c < 4; ++c) csv += "," + format_g6(t.states[i][c]);
    csv += "," + format_g6(t.cumulative_incidence[i]) + "\n";
  }
  emit(s.common, "trajectory.csv", csv);
  std::cout << "cumulative incidence over " << format_g6(horizon)
            << " months: " << format_g6(t.cumulative_incidence.back()) << "\n";
}

// --- sweep -------------------------------------------------------------------

void cmd_sweep(const CommonOpts& o, double grid_step_override) {
  RunConfig cfg = run_config(o);
  if (grid_step_override > 0) cfg.scenario.grid_step = grid_step_override;
  const CalibratedJurisdiction cal = calibrate(single(cohort(o)), cfg.constants);
  const SweepResult r = sweep(cal, cfg.constants, cfg.scenario);
  std::string csv = "self_share,expansion,pct_change,aware_fraction_end\n";
  for (std::size_t i = 0; i < r.gamma_grid.size(); ++i) {
    for (std::size_t j = 0; j < r.chi_grid.size(); ++j) {
      csv += format_g6(r.gamma_grid[i]) + "," + format_g6(r.chi_grid[j]) + "," +
             format_g6(r.pct_change(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(j))) +
             "," +
             format_g6(r.aware_end(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(j))) +
             "\n";
    }
  }
  emit(o, "sweep.csv", csv);
  std::cout << "mean incidence reduction across the grid: "
            << format_g6(r.mean_reduction) << "\n";
}

// --- threshold ---------------------------------------------------------------

void cmd_threshold(const CommonOpts& o, std::vector<double> gammas) {
  const RunConfig cfg = run_config(o);
  if (gammas.empty()) gammas = {0.25, 0.50, 0.75, 1.0};
  const auto recs = cohort(o);
  std::string csv =
      "jurisdiction,self_share,expansion_threshold,bracket_lo,bracket_hi,iterations\n";
  for (const auto& rec : recs) {
    const CalibratedJurisdiction cal = calibrate(rec, cfg.constants);
    for (double g : gammas) {
      const ThresholdResult t = threshold_chi(cal, cfg.constants, g, cfg.scenario);
      csv += quote_csv(cal.name) + "," + format_g6(g) + "," +
             format_g6(t.chi_threshold) + "," + format_g6(t.bracket_lo) + "," +
             format_g6(t.bracket_hi) + "," + std::to_string(t.iterations) + "\n";
    }
  }
  emit(o, "thresholds.csv", csv);
}

// --- validate ----------------------------------------------------------------

void cmd_validate(const CommonOpts& o) {
  const RunConfig cfg = run_config(o);
  const auto recs = cohort(o);
  std::string val =
      "jurisdiction,lambda_bar_in,lambda_bar_sim,mu_bar_in,mu_bar_sim,"
      "aware_in,aware_sim,phi_bar_in,phi_bar_sim\n";
  std::string cert =
      "jurisdiction,sigma0,max_drift,max_bound,worst_ratio,uniform_bound_rate,"
      "linear_gap,passed\n";
  for (const auto& rec : recs) {
    const CalibratedJurisdiction cal = calibrate(rec, cfg.constants);
    const ValidationReport r = validate_against_surveillance(
        cal, rec, cfg.constants, cfg.validation.window_months,
        cfg.validation.substeps_per_month);
    val += quote_csv(r.name) + "," + format_g6(r.lambda_bar_in) + "," +
           format_g6(r.lambda_bar_sim) + "," + format_g6(r.mu_bar_in) + "," +
           format_g6(r.mu_bar_sim) + "," + format_g6(r.aware_in) + "," +
           format_g6(r.aware_sim) + "," + format_g6(r.phi_bar_in) + "," +
           format_g6(r.phi_bar_sim) + "\n";

    const NonlinearParams shell = make_validation_shell(
        cal, cfg.constants, cfg.validation.shell_susceptible_fraction,
        cfg.validation.shell_exit_rate_factor);
    const NonlinearTrajectory nt = integrate_nonlinear(
        shell, cfg.scenario.horizon_months, cfg.scenario.step_months);
    const ErrorCertificate c = linearization_certificate(shell, nt);
    const ModelMatrices m =
        assemble(cfg.constants.progression, cal.rates, cfg.constants.testing, Policy{});
    const Trajectory lt = integrate_linear(m, shell.x0, cfg.scenario.horizon_months,
                                           cfg.scenario.step_months);
    const double gap = std::abs(lt.cumulative_incidence.back() -
                                nt.cumulative_incidence.back()) /
                       nt.cumulative_incidence.back();
    const double max_drift =
        *std::max_element(c.observed_drift.begin(), c.observed_drift.end());
    const double max_bound =
        *std::max_element(c.bound_pointwise.begin(), c.bound_pointwise.end());
    cert += quote_csv(cal.name) + "," + format_g6(c.sigma0) + "," +
            format_g6(max_drift) + "," + format_g6(max_bound) + "," +
            format_g6(c.worst_ratio) + "," + format_g6(c.bound_uniform_rate) +
            "," + format_g6(gap) + "," + (c.passed ? "true" : "false") + "\n";
  }
  emit(o, "validation.csv", val);
  emit(o, "certificate.csv", cert);
}

// --- report ------------------------------------------------------------------

void cmd_report(const CommonOpts& o) {
  const RunConfig cfg = run_config(o);
  const auto recs = cohort(o);
  std::string csv =
      "jurisdiction,lambda_bar,phi_bar,r_t,r_awr,pct_inc_red,"
      "chi_025,chi_050,chi_075,chi_100\n";
  std::string benefit = "jurisdiction,r_awr,r_t,pct_inc_red\n";
  std::string risk = "jurisdiction,phi_bar,chi_100\n";
  std::vector<double> reductions;
  for (const auto& rec : recs) {
    const BenefitRiskRow row = benefit_risk_row(rec, cfg.constants, cfg.scenario);
    csv += quote_csv(row.name) + "," + format_g6(row.lambda_bar) + "," +
           format_g6(row.phi_bar) + "," + format_g6(row.r_t) + "," +
           format_g6(row.r_awr) + "," + format_g6(row.pct_inc_red);
    for (double chi : row.chi) csv += "," + format_g6(chi);
    csv += "\n";
    benefit += quote_csv(row.name) + "," + format_g6(row.r_awr) + "," +
               format_g6(row.r_t) + "," + format_g6(row.pct_inc_red) + "\n";
    risk += quote_csv(row.name) + "," + format_g6(row.phi_bar) + "," +
            format_g6(row.chi[3]) + "\n";
    reductions.push_back(row.pct_inc_red);
  }
  emit(o, "report.csv", csv);
  emit(o, "scatter_benefit.csv", benefit);
  emit(o, "scatter_risk.csv", risk);
  if (!reductions.empty()) {
    std::vector<double> sorted = reductions;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double mean = 0.0;
    for (double v : reductions) mean += v;
    mean /= static_cast<double>(n);
    std::cout << "cohort mean incidence reduction: " << format_g6(mean)
              << "  median: " << format_g6(median) << "\n";
  }
}

int report_error(const CommonOpts& o, const char* kind, const std::exception& e,
                 int code) {
  if (o.json_errors) {
    std::cerr << error_json(kind, e.what()) << "\n";
  } else {
    std::cerr << "error (" << kind << "): " << e.what() << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Jurisdiction-level HIV testing-policy toolkit: calibration, "
      "reproduction numbers, policy scenarios, and validation"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* c_cal = app.add_subcommand(
      "calibrate", "Recover stage-resolved rates from surveillance aggregates");
  add_common(c_cal, common);

  auto* c_ngm = app.add_subcommand(
      "ngm", "Reproduction numbers and their stage decomposition");
  add_common(c_ngm, common);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Integrate one policy scenario");
  add_common(c_sim, sim.common, /*jurisdictions_required=*/false);
  c_sim->add_option("--calibrated", sim.calibrated_path,
                    "Calibrated-parameter JSON (alternative to --jurisdictions)");
  c_sim->add_option("--gamma", sim.gamma, "Self-test share of all tests [0,1]")
      ->capture_default_str();
  c_sim->add_option("--chi", sim.chi, "Relative testing expansion (0.1 = +10%)")
      ->capture_default_str();
  c_sim->add_option("--horizon-months", sim.horizon_months, "Simulation horizon");
  c_sim->add_option("--step-months", sim.step_months, "Integration step");

  double grid_step_override = -1.0;
  auto* c_sweep = app.add_subcommand(
      "sweep", "Scan the (self-share, expansion) policy grid for one jurisdiction");
  add_common(c_sweep, common);
  c_sweep->add_option("--grid-step", grid_step_override, "Grid spacing in both axes");

  std::vector<double> gammas;
  auto* c_thr = app.add_subcommand(
      "threshold", "Smallest testing expansion that offsets self-test substitution");
  add_common(c_thr, common);
  c_thr->add_option("--gamma", gammas,
                    "Self-test share(s) to solve for (default: 0.25 0.5 0.75 1)");

  auto* c_val = app.add_subcommand(
      "validate", "Re-simulate calibrated baselines and certify the linearization");
  add_common(c_val, common);

  auto* c_rep = app.add_subcommand(
      "report", "Cohort-wide benefit/risk table with threshold expansions");
  add_common(c_rep, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const CommonOpts& active = c_sim->parsed() ? sim.common : common;
  try {
    if (c_cal->parsed()) cmd_calibrate(common);
    if (c_ngm->parsed()) cmd_ngm(common);
    if (c_sim->parsed()) {
      if (sim.calibrated_path.empty() && sim.common.jurisdictions_path.empty()) {
        throw ConfigError("simulate needs --jurisdictions or --calibrated");
      }
      cmd_simulate(sim);
    }
    if (c_sweep->parsed()) cmd_sweep(common, grid_step_override);
    if (c_thr->parsed()) cmd_threshold(common, gammas);
    if (c_val->parsed()) cmd_validate(common);
    if (c_rep->parsed()) cmd_report(common);
  } catch (const ConfigError& e) {
    return report_error(active, "config", e, exit_config_error);
  } catch (const DataError& e) {
    return report_error(active, "data", e, exit_data_error);
  } catch (const NumericalError& e) {
    return report_error(active, "numerical", e, exit_numerical_error);
  } catch (const std::invalid_argument& e) {
    return report_error(active, "config", e, exit_config_error);
  } catch (const std::exception& e) {
    return report_error(active, "internal", e, 1);
  }
  return exit_ok;
}
