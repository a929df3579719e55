#pragma once
// Policy experiments on a calibrated jurisdiction: single scenario runs,
// (self-share, expansion) grid sweeps, and threshold-expansion search.
//
// All relative changes are fractions (0.073 == 7.3%).  The outcome metric is
// cumulative new infections over the horizon, compared against the
// do-nothing baseline; the initial state is the calibrated stage occupancy,
// whose scale cancels out of every relative outcome.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hivst/calibration.hpp"
#include "hivst/engine.hpp"
#include "hivst/model.hpp"
#include "hivst/ngm.hpp"

namespace hivst {

struct ScenarioConfig {
  double horizon_months = 120.0;
  double step_months = 0.25;
  double grid_step = 0.05;
  bool include_gamma_zero = true;  // keep pure-expansion cells in the mean
  double threshold_tolerance = 1e-4;
  double threshold_cap = 2.0;
};

// Cumulative new infections over the horizon under one policy.
inline double cumulative_incidence(const CalibratedJurisdiction& cal,
                                   const ModelConstants& k, const Policy& p,
                                   const ScenarioConfig& cfg) {
  const ModelMatrices m = assemble(k.progression, cal.rates, k.testing, p);
  const Trajectory t =
      integrate_linear(m, cal.occupancy, cfg.horizon_months, cfg.step_months);
  return t.cumulative_incidence.back();
}

struct ScenarioOutcome {
  double cumulative_incidence = 0.0;
  double pct_change = 0.0;          // vs baseline, as a fraction
  double aware_fraction_end = 0.0;  // diagnosed share at the horizon
};

// Run one policy scenario.  Pass the precomputed baseline cumulative
// incidence when running many scenarios; NaN recomputes it here.
inline ScenarioOutcome run_scenario(
    const CalibratedJurisdiction& cal, const ModelConstants& k, const Policy& p,
    const ScenarioConfig& cfg,
    double baseline = std::numeric_limits<double>::quiet_NaN()) {
  if (std::isnan(baseline)) {
    baseline = cumulative_incidence(cal, k, Policy{}, cfg);
  }
  const ModelMatrices m = assemble(k.progression, cal.rates, k.testing, p);
  const Trajectory t =
      integrate_linear(m, cal.occupancy, cfg.horizon_months, cfg.step_months);
  ScenarioOutcome out;
  out.cumulative_incidence = t.cumulative_incidence.back();
  out.pct_change = (out.cumulative_incidence - baseline) / baseline;
  const Vec4& last = t.states.back();
  out.aware_fraction_end = last[3] / last.sum();
  return out;
}

struct SweepResult {
  std::vector<double> gamma_grid;
  std::vector<double> chi_grid;
  Eigen::MatrixXd pct_change;   // [gamma index][chi index], fractions
  Eigen::MatrixXd aware_end;    // diagnosed share at the horizon
  double mean_reduction = 0.0;  // mean of -pct_change over non-baseline cells
};

inline std::vector<double> unit_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw std::invalid_argument("grid step must lie in (0, 1]");
  }
  const int n = static_cast<int>(std::lround(1.0 / step));
  if (std::abs(n * step - 1.0) > 1e-9) {
    throw std::invalid_argument("grid step must divide 1 evenly");
  }
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = i * step;
  g.back() = 1.0;
  return g;
}

inline SweepResult sweep(const CalibratedJurisdiction& cal,
                         const ModelConstants& k, const ScenarioConfig& cfg) {
  SweepResult r;
  r.gamma_grid = unit_grid(cfg.grid_step);
  r.chi_grid = unit_grid(cfg.grid_step);
  const auto ng = static_cast<Eigen::Index>(r.gamma_grid.size());
  const auto nc = static_cast<Eigen::Index>(r.chi_grid.size());
  r.pct_change.resize(ng, nc);
  r.aware_end.resize(ng, nc);
  const double baseline = cumulative_incidence(cal, k, Policy{}, cfg);
  double sum = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    for (Eigen::Index j = 0; j < nc; ++j) {
      const Policy p{r.gamma_grid[static_cast<std::size_t>(i)],
                     r.chi_grid[static_cast<std::size_t>(j)]};
      const ScenarioOutcome o = run_scenario(cal, k, p, cfg, baseline);
      r.pct_change(i, j) = o.pct_change;
      r.aware_end(i, j) = o.aware_fraction_end;
      const bool is_baseline = (i == 0 && j == 0);
      if (!is_baseline && (cfg.include_gamma_zero || i > 0)) {
        sum += -o.pct_change;
        ++cells;
      }
    }
  }
  r.mean_reduction = sum / static_cast<double>(cells);
  return r;
}

struct ThresholdResult {
  double gamma = 0.0;
  double chi_threshold = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
};

// Smallest testing expansion that keeps cumulative incidence at or below
// baseline for a given self-test share.  The incidence change is strictly
// decreasing in the expansion (asserted grid-wide by the tests), so a
// doubling bracket plus bisection is exact to the tolerance.
inline ThresholdResult threshold_chi(const CalibratedJurisdiction& cal,
                                     const ModelConstants& k, double gamma,
                                     const ScenarioConfig& cfg) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("threshold search needs self-share in (0, 1]");
  }
  ThresholdResult res;
  res.gamma = gamma;
  const double baseline = cumulative_incidence(cal, k, Policy{}, cfg);
  const auto delta = [&](double chi) {
    return cumulative_incidence(cal, k, Policy{gamma, chi}, cfg) - baseline;
  };
  if (delta(0.0) <= 0.0) return res;  // already non-harmful
  double lo = 0.0, hi = 0.05;
  while (delta(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    ++res.iterations;
    if (hi > cfg.threshold_cap) {
      throw NumericalError("no expansion below the cap offsets the incidence increase");
    }
  }
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  while (hi - lo > cfg.threshold_tolerance) {
    const double mid = 0.5 * (lo + hi);
    (delta(mid) > 0.0 ? lo : hi) = mid;
    ++res.iterations;
  }
  res.chi_threshold = hi;
  return res;
}

// One cohort row of headline indicators and outcomes.
struct BenefitRiskRow {
  std::string name;
  double lambda_bar = 0.0;      // per month, as ingested
  double phi_bar = 0.0;         // per month, as ingested
  double r_t = 0.0;
  double r_awr = 0.0;
  double pct_inc_red = 0.0;     // mean sweep reduction, fraction
  double chi[4] = {0, 0, 0, 0}; // thresholds at self-shares .25 .50 .75 1.0
};

inline BenefitRiskRow benefit_risk_row(const SurveillanceRecord& rec,
                                       const ModelConstants& k,
                                       const ScenarioConfig& cfg) {
  const CalibratedJurisdiction cal = calibrate(rec, k);
  const ModelMatrices m = assemble(k.progression, cal.rates, k.testing, Policy{});
  BenefitRiskRow row;
  row.name = rec.name;
  row.lambda_bar = rec.lambda_bar_per_month;
  row.phi_bar = rec.phi_bar_per_month;
  row.r_t = reproduction_number(m);
  row.r_awr = awareness_reproduction_number(m, cal.rates);
  row.pct_inc_red = sweep(cal, k, cfg).mean_reduction;
  const double shares[4] = {0.25, 0.50, 0.75, 1.0};
  for (int i = 0; i < 4; ++i) {
    row.chi[i] = threshold_chi(cal, k, shares[i], cfg).chi_threshold;
  }
  return row;
}

// Rows are emitted in input order; each row is independent of the others,
// so the table is a pure map over the cohort.
inline std::vector<BenefitRiskRow> benefit_risk_table(
    const std::vector<SurveillanceRecord>& cohort, const ModelConstants& k,
    const ScenarioConfig& cfg) {
  std::vector<BenefitRiskRow> rows;
  rows.reserve(cohort.size());
  for (const auto& rec : cohort) rows.push_back(benefit_risk_row(rec, k, cfg));
  return rows;
}

}  // namespace hivst
