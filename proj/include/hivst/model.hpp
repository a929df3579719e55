#pragma once
// Four-compartment linear HIV transmission model.
//
// State x = (a, u, s, d):
//   a  acute, undiagnosed
//   u  chronic, undiagnosed
//   s  AIDS, undiagnosed
//   d  diagnosed (care-continuum sub-states collapsed into one pool)
//
// Dynamics: x' = (F - V) x, where F carries the new-infection inflow (first
// row only) and V the stage transitions, diagnoses, and deaths.  All rates
// are per month.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hivst {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Undiagnosed stages index per-stage testing constants and detection rates.
enum Stage : int { stage_acute = 0, stage_chronic = 1, stage_aids = 2 };
inline constexpr int n_undiagnosed = 3;

// Error taxonomy shared across the library; the CLI maps these to exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Disease-course progression rates, per month.
struct Progression {
  double acute_to_chronic = 0.0;
  double chronic_to_aids = 0.0;
};

// Per-stage testing machinery.  care_sensitivity applies to provider-ordered
// tests, self_sensitivity to self-tests; confirm_delay is the expected lag
// between a reactive self-test and a formal diagnosis; rate_multiplier scales
// the chronic-stage testing rate to the other undiagnosed stages.
struct TestingConstants {
  std::array<double, 3> care_sensitivity{};
  std::array<double, 3> self_sensitivity{};
  std::array<double, 3> confirm_delay_months{};
  std::array<double, 3> rate_multiplier{};
};

// A testing policy: the share of all tests taken as self-tests, and the
// relative increase in the overall testing rate (0.10 == +10%).
struct Policy {
  double self_share = 0.0;
  double expansion = 0.0;
};

// Calibrated per-jurisdiction stage rates, all per month.
//   transmission[k]  new infections caused per person in compartment k
//   mortality[k]     death/exit rate of compartment k
//   base_testing[k]  undiagnosed stage-k testing rate before sensitivity
//                    weighting and before any policy change
struct StageRates {
  Vec4 transmission = Vec4::Zero();
  Vec4 mortality = Vec4::Zero();
  Vec3 base_testing = Vec3::Zero();
};

struct ModelMatrices {
  Mat4 F = Mat4::Zero();
  Mat4 V = Mat4::Zero();
  Vec3 detection = Vec3::Zero();  // effective diagnosis rate per undiagnosed stage
};

// Effective diagnosis rate of one undiagnosed stage under a policy.
//
// Care route: sensitivity-weighted share (1 - self_share) of the expanded
// testing rate.  Self route: the expanded per-test rate acts in series with
// the confirmation delay (per-step expected times add, so rates combine
// harmonically), weighted by the self-test share and sensitivity.
inline double effective_detection(double base_rate, double care_sens,
                                  double self_sens, double delay_months,
                                  const Policy& p) {
  const double expanded = (1.0 + p.expansion) * base_rate;
  const double care_arm = care_sens * (1.0 - p.self_share) * expanded;
  double self_arm = 0.0;
  if (expanded > 0.0 && p.self_share > 0.0) {
    self_arm = self_sens * p.self_share / (1.0 / expanded + delay_months);
  }
  return care_arm + self_arm;
}

inline Vec3 effective_detection(const StageRates& r, const TestingConstants& t,
                                const Policy& p) {
  Vec3 out;
  for (int k = 0; k < n_undiagnosed; ++k) {
    out[k] = effective_detection(r.base_testing[k], t.care_sensitivity[k],
                                 t.self_sensitivity[k],
                                 t.confirm_delay_months[k], p);
  }
  return out;
}

inline void require_valid(const Policy& p) {
  if (!(p.self_share >= 0.0 && p.self_share <= 1.0)) {
    throw std::invalid_argument("policy self_share must lie in [0, 1]");
  }
  if (!(p.expansion >= -1.0) || !std::isfinite(p.expansion)) {
    throw std::invalid_argument("policy expansion must be finite and >= -1");
  }
}

inline void require_valid(const StageRates& r) {
  for (int k = 0; k < 4; ++k) {
    if (!std::isfinite(r.transmission[k]) || r.transmission[k] < 0.0) {
      throw std::invalid_argument("stage transmission rates must be finite and nonnegative");
    }
    if (!std::isfinite(r.mortality[k]) || r.mortality[k] <= 0.0) {
      throw std::invalid_argument("stage mortality rates must be finite and positive");
    }
  }
  for (int k = 0; k < n_undiagnosed; ++k) {
    if (!std::isfinite(r.base_testing[k]) || r.base_testing[k] < 0.0) {
      throw std::invalid_argument("stage testing rates must be finite and nonnegative");
    }
  }
}

// Assemble F and V for a policy.  V is lower triangular in the stage
// ordering; each undiagnosed column leaks exactly its mortality rate
// (column sum of V equals mortality), so total flow is conserved up to
// deaths -- the structural invariant the tests pin.
inline ModelMatrices assemble(const Progression& g, const StageRates& r,
                              const TestingConstants& t, const Policy& p) {
  require_valid(p);
  ModelMatrices m;
  m.detection = effective_detection(r, t, p);
  const double da = m.detection[stage_acute];
  const double du = m.detection[stage_chronic];
  const double ds = m.detection[stage_aids];

  m.F.row(0) = r.transmission.transpose();

  m.V(0, 0) = g.acute_to_chronic + da + r.mortality[0];
  m.V(1, 0) = -g.acute_to_chronic;
  m.V(1, 1) = g.chronic_to_aids + du + r.mortality[1];
  m.V(2, 1) = -g.chronic_to_aids;
  m.V(2, 2) = ds + r.mortality[2];
  m.V(3, 0) = -da;
  m.V(3, 1) = -du;
  m.V(3, 2) = -ds;
  m.V(3, 3) = r.mortality[3];
  return m;
}

}  // namespace hivst
