#pragma once
// Per-jurisdiction calibration from surveillance aggregates.
//
// Inputs are four observable quotients -- transmission, mortality, awareness,
// and testing -- plus the care-continuum composition of the diagnosed pool.
// The stage-resolved rates are recovered by inverting the aggregate formulas
// over the stage-occupancy distribution; the unaware-pool split is either a
// config constant or fitted so the chronic and AIDS stage flows are
// stationary at the start of the run.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "hivst/engine.hpp"
#include "hivst/model.hpp"

namespace hivst {

// One jurisdiction's surveillance aggregates.
//   lambda_bar_per_month  new infections per person with HIV per month
//   mu_bar_per_year       deaths per person with HIV per year
//   aware_fraction        diagnosed share of all people with HIV
//   phi_bar_per_month     diagnoses per undiagnosed person per month
//   p_nocare/p_art/p_vls  care-continuum shares of all people with HIV
struct SurveillanceRecord {
  std::string name;
  double lambda_bar_per_month = 0.0;
  double mu_bar_per_year = 0.0;
  double aware_fraction = 0.0;
  double phi_bar_per_month = 0.0;
  double p_nocare = 0.0;
  double p_art = 0.0;
  double p_vls = 0.0;
};

inline void require_valid(const SurveillanceRecord& r) {
  const auto bad = [&r](const char* field, const std::string& why) {
    throw DataError("record '" + r.name + "': " + field + " " + why);
  };
  if (r.name.empty()) throw DataError("record with empty name");
  if (!(r.lambda_bar_per_month > 0.0) || !std::isfinite(r.lambda_bar_per_month))
    bad("lambda_bar_per_month", "must be positive and finite");
  if (!(r.mu_bar_per_year > 0.0) || !std::isfinite(r.mu_bar_per_year))
    bad("mu_bar_per_year", "must be positive and finite");
  if (!(r.aware_fraction > 0.0) || !(r.aware_fraction < 1.0))
    bad("aware_fraction", "must lie strictly inside (0, 1)");
  if (!(r.phi_bar_per_month > 0.0) || !std::isfinite(r.phi_bar_per_month))
    bad("phi_bar_per_month", "must be positive and finite");
  for (double p : {r.p_nocare, r.p_art, r.p_vls}) {
    if (!(p >= 0.0) || !std::isfinite(p))
      bad("care-continuum shares", "must be nonnegative and finite");
  }
  const double psum = r.p_nocare + r.p_art + r.p_vls;
  if (!(psum > 0.0)) bad("care-continuum shares", "must not all be zero");
  if (psum > r.aware_fraction * (1.0 + 1e-9))
    bad("care-continuum shares", "must sum to at most aware_fraction");
}

// Transmission-rate multipliers relative to the chronic undiagnosed stage.
struct TransmissionWeights {
  double acute = 0.0;
  double aids = 0.0;
  double no_care = 0.0;
  double art_no_vls = 0.0;
  double vls = 0.0;
};

// Mortality-rate multipliers relative to the acute stage.
struct MortalityRatios {
  double chronic = 0.0;
  double aids = 0.0;
  double no_care = 0.0;
  double art_no_vls = 0.0;
  double vls = 0.0;
};

// Composition of the undiagnosed pool.  When fit_stationary is set the
// fractions are used as the fixed-point seed; otherwise they are taken as
// given.  acute/aids fractions are of the undiagnosed pool; the chronic
// share is the remainder.
struct UnawareSplit {
  bool fit_stationary = true;
  double acute_fraction = 0.03;
  double aids_fraction = 0.12;
};

struct ModelConstants {
  Progression progression;
  TestingConstants testing;
  MortalityRatios mortality;
  TransmissionWeights transmission;
  UnawareSplit split;
};

// Reference constant set shipped with the repository (mirrors
// data/reference_config.json).  The transmission weights were fitted to the
// published cohort-level outcomes; see README.
inline ModelConstants reference_constants() {
  constexpr double days_per_month = 30.4375;
  ModelConstants k;
  k.progression.acute_to_chronic = days_per_month / 60.0;
  k.progression.chronic_to_aids = 1.0 / (11.8 * 12.0);
  k.testing.care_sensitivity = {0.83, 1.0, 1.0};
  k.testing.self_sensitivity = {0.0, 0.92, 0.92};
  k.testing.confirm_delay_months = {90.0 / days_per_month, 90.0 / days_per_month,
                                    30.0 / days_per_month};
  k.testing.rate_multiplier = {1.0, 1.0, 4.08};
  k.mortality = {.chronic = 2.538, .aids = 6.172, .no_care = 2.538,
                 .art_no_vls = 2.538, .vls = 0.6346};
  k.transmission = {.acute = 6.0, .aids = 1.5, .no_care = 1.0,
                    .art_no_vls = 0.2, .vls = 0.08};
  k.split = UnawareSplit{};
  return k;
}

struct CalibratedJurisdiction {
  std::string name;
  StageRates rates;
  Vec4 occupancy = Vec4::Zero();  // (acute, chronic, AIDS, diagnosed), sums to 1
  double split_acute = 0.0;       // acute share of the undiagnosed pool
  double split_aids = 0.0;        // AIDS share of the undiagnosed pool
};

// Recover stage-resolved rates from the aggregates.
//
// Ordering matters: the testing and mortality rates close a fixed point with
// the stationary split (occupancies proportional to residence times), and
// the transmission rates then follow from the occupancy-weighted average.
inline CalibratedJurisdiction calibrate(const SurveillanceRecord& rec,
                                        const ModelConstants& k) {
  require_valid(rec);
  const double lam_m = rec.lambda_bar_per_month;
  const double mu_m = rec.mu_bar_per_year / 12.0;
  const double aware = rec.aware_fraction;
  const double unaware = 1.0 - aware;
  const double psum = rec.p_nocare + rec.p_art + rec.p_vls;
  const double q_nc = rec.p_nocare / psum;
  const double q_art = rec.p_art / psum;
  const double q_vls = rec.p_vls / psum;

  const double sau = k.progression.acute_to_chronic;
  const double sus = k.progression.chronic_to_aids;
  const auto& ts = k.testing;
  const double nu_a = ts.rate_multiplier[stage_acute];
  const double nu_s = ts.rate_multiplier[stage_aids];
  const double kc_a = ts.care_sensitivity[stage_acute];
  const double kc_u = ts.care_sensitivity[stage_chronic];
  const double kc_s = ts.care_sensitivity[stage_aids];

  // Diagnosed-pool multipliers collapse the care-continuum sub-states.
  const double g = k.mortality.no_care * q_nc + k.mortality.art_no_vls * q_art +
                   k.mortality.vls * q_vls;

  double x = k.split.acute_fraction;   // acute share of the undiagnosed pool
  double y = k.split.aids_fraction;    // AIDS share
  double phi_u = 0.0, mu_a = 0.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double den_phi = kc_a * nu_a * x + kc_s * nu_s * y + kc_u * (1.0 - x - y);
    phi_u = rec.phi_bar_per_month / den_phi;
    const double pa = x * unaware;
    const double pu = (1.0 - x - y) * unaware;
    const double ps = y * unaware;
    const double den_mu =
        pa + k.mortality.chronic * pu + k.mortality.aids * ps + aware * g;
    mu_a = mu_m / den_mu;
    if (!k.split.fit_stationary) break;
    // Stationary flows: inflow sigma * upstream = outflow for the chronic
    // and AIDS stages, with outflow diagonals at baseline policy.
    const double v22 = sus + kc_u * phi_u + k.mortality.chronic * mu_a;
    const double v33 = kc_s * nu_s * phi_u + k.mortality.aids * mu_a;
    const double z = 1.0 / (1.0 + v22 / sau + sus / v33);
    const double xn = (v22 / sau) * z;
    const double yn = (sus / v33) * z;
    const bool done = std::abs(xn - x) < 1e-15 && std::abs(yn - y) < 1e-15;
    x = xn;
    y = yn;
    if (done) break;
  }
  // Final pass with the settled split.
  const double den_phi = kc_a * nu_a * x + kc_s * nu_s * y + kc_u * (1.0 - x - y);
  phi_u = rec.phi_bar_per_month / den_phi;
  const double pa = x * unaware;
  const double pu = (1.0 - x - y) * unaware;
  const double ps = y * unaware;
  const double den_mu =
      pa + k.mortality.chronic * pu + k.mortality.aids * ps + aware * g;
  mu_a = mu_m / den_mu;

  const double w = k.transmission.no_care * q_nc +
                   k.transmission.art_no_vls * q_art + k.transmission.vls * q_vls;
  const double den_lam =
      k.transmission.acute * pa + pu + k.transmission.aids * ps + aware * w;
  const double lam_u = lam_m / den_lam;

  CalibratedJurisdiction cal;
  cal.name = rec.name;
  cal.rates.transmission << k.transmission.acute * lam_u, lam_u,
      k.transmission.aids * lam_u, w * lam_u;
  cal.rates.mortality << mu_a, k.mortality.chronic * mu_a,
      k.mortality.aids * mu_a, g * mu_a;
  cal.rates.base_testing << nu_a * phi_u, phi_u, nu_s * phi_u;
  cal.occupancy << pa, pu, ps, aware;
  cal.split_acute = x;
  cal.split_aids = y;
  require_valid(cal.rates);
  return cal;
}

// Baseline re-simulation: integrate the calibrated model from the calibrated
// occupancy and report the time-averaged aggregates next to the inputs.
// Units match SurveillanceRecord.
struct ValidationReport {
  std::string name;
  double lambda_bar_in = 0.0, lambda_bar_sim = 0.0;
  double mu_bar_in = 0.0, mu_bar_sim = 0.0;
  double aware_in = 0.0, aware_sim = 0.0;
  double phi_bar_in = 0.0, phi_bar_sim = 0.0;
};

inline ValidationReport validate_against_surveillance(
    const CalibratedJurisdiction& cal, const SurveillanceRecord& rec,
    const ModelConstants& k, int window_months = 36, int substeps_per_month = 4) {
  if (window_months <= 0 || substeps_per_month <= 0) {
    throw std::invalid_argument("validation window and substeps must be positive");
  }
  const ModelMatrices m =
      assemble(k.progression, cal.rates, k.testing, Policy{});
  const double step = 1.0 / substeps_per_month;
  const Trajectory traj =
      integrate_linear(m, cal.occupancy, window_months, step);

  // Trapezoid time-average of each aggregate along the trajectory.
  const std::size_t n = traj.states.size();
  double lam = 0.0, mu = 0.0, aw = 0.0, phi = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    const Vec4& s = traj.states[i];
    const double total = s.sum();
    const double und = s[0] + s[1] + s[2];
    lam += wt * cal.rates.transmission.dot(s) / total;
    mu += wt * cal.rates.mortality.dot(s) / total;
    aw += wt * s[3] / total;
    phi += wt * m.detection.dot(s.head<3>()) / und;
    wsum += wt;
  }
  ValidationReport rep;
  rep.name = rec.name;
  rep.lambda_bar_in = rec.lambda_bar_per_month;
  rep.mu_bar_in = rec.mu_bar_per_year;
  rep.aware_in = rec.aware_fraction;
  rep.phi_bar_in = rec.phi_bar_per_month;
  rep.lambda_bar_sim = lam / wsum;
  rep.mu_bar_sim = 12.0 * mu / wsum;
  rep.aware_sim = aw / wsum;
  rep.phi_bar_sim = phi / wsum;
  return rep;
}

// Embed a calibrated jurisdiction in the nonlinear susceptible-pool shell
// used to certify the linearization.  The total population is normalized to
// one; susceptible_fraction = initial susceptible share, the infected
// remainder is split by the calibrated occupancy, the susceptible exit rate
// is a fraction of the smallest stage mortality (it must undercut all of
// them), and recruitment balances the susceptible pool demographically.
inline NonlinearParams make_validation_shell(const CalibratedJurisdiction& cal,
                                             const ModelConstants& k,
                                             double susceptible_fraction = 0.995,
                                             double exit_rate_factor = 0.5) {
  if (!(susceptible_fraction > 0.0 && susceptible_fraction < 1.0)) {
    throw std::invalid_argument("shell susceptible fraction must lie in (0, 1)");
  }
  if (!(exit_rate_factor > 0.0 && exit_rate_factor < 1.0)) {
    throw std::invalid_argument("shell exit-rate factor must lie in (0, 1)");
  }
  NonlinearParams p;
  p.mortality = cal.rates.mortality;
  p.exit_rate = exit_rate_factor * cal.rates.mortality.minCoeff();
  p.e0 = susceptible_fraction;
  p.recruitment = p.exit_rate * p.e0;
  // The calibrated rates already include the susceptible-fraction scaling;
  // the shell needs the raw contact rates.
  p.transmission_unscaled = cal.rates.transmission / susceptible_fraction;
  p.detection = effective_detection(cal.rates, k.testing, Policy{});
  p.progression = k.progression;
  p.x0 = (1.0 - susceptible_fraction) * cal.occupancy;
  return p;
}

}  // namespace hivst
