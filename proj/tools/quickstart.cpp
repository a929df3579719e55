// Minimal end-to-end walkthrough of the library API: calibrate one
// jurisdiction from its surveillance aggregates, read off the reproduction
// numbers, run a testing-policy scenario, and solve for the break-even
// testing expansion.  Mirrors the "Library usage" section of the README.

#include <cstdio>

#include "hivst/hivst.hpp"

int main() {
  using namespace hivst;
  const ModelConstants k = reference_constants();

  // Jurisdiction-level aggregates, as surveillance programs publish them.
  SurveillanceRecord rec;
  rec.name = "Example County";
  rec.lambda_bar_per_month = 0.0023;  // new infections per person with HIV
  rec.mu_bar_per_year = 0.009;        // deaths per person with HIV
  rec.aware_fraction = 0.88;          // diagnosed share of people with HIV
  rec.phi_bar_per_month = 0.016;      // diagnoses per undiagnosed person
  rec.p_nocare = 0.14;                // diagnosed, not in care
  rec.p_art = 0.23;                   // on treatment, not suppressed
  rec.p_vls = 0.51;                   // virally suppressed

  const CalibratedJurisdiction cal = calibrate(rec, k);
  const ModelMatrices m = assemble(k.progression, cal.rates, k.testing, Policy{});
  std::printf("reproduction number            R     = %.3f\n",
              reproduction_number(m));
  std::printf("awareness-limited reproduction R_aw  = %.3f\n",
              awareness_reproduction_number(m, cal.rates));

  // Ten-year outcome of sending half of all tests through self-testing
  // while raising the overall testing rate by 10%.
  const ScenarioConfig cfg;
  const ScenarioOutcome o = run_scenario(cal, k, Policy{0.5, 0.10}, cfg);
  std::printf("incidence change, half self-tests at +10%% testing: %+.2f%%\n",
              100.0 * o.pct_change);

  // Smallest expansion at which that self-test share stops costing anything.
  const ThresholdResult t = threshold_chi(cal, k, 0.5, cfg);
  std::printf("break-even testing expansion at half self-tests:   +%.2f%%\n",
              100.0 * t.chi_threshold);
  return 0;
}
