#pragma once
// Deterministic fixed-step integration.
//
// One classical 4th-order Runge-Kutta kernel drives everything: the linear
// system (with a pure-accumulator equation for cumulative incidence), and
// the five-compartment nonlinear shell used to certify the linearization.
// Step-halving tests pin the observed order at 4.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

#include "hivst/model.hpp"

namespace hivst {

using Vec5 = Eigen::Matrix<double, 5, 1>;

// One classical Runge-Kutta step for y' = f(t, y).
template <class Rhs, class State>
State rk4_step(Rhs&& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
  const State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::size_t step_count(double horizon, double step) {
  if (!(step > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("horizon and step must be positive");
  }
  const double n = horizon / step;
  const auto rounded = static_cast<std::size_t>(std::llround(n));
  if (rounded == 0 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * n) {
    throw std::invalid_argument("horizon must be a positive multiple of step");
  }
  return rounded;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec4> states;
  std::vector<double> cumulative_incidence;
};

// Integrate x' = (F - V) x with a pure accumulator for the new-infection
// inflow (the first row of F dotted with the state).  The accumulator feeds
// nothing back, so the 4-state dynamics are untouched by the bookkeeping.
inline Trajectory integrate_linear(const ModelMatrices& m, const Vec4& x0,
                                   double horizon, double step) {
  const std::size_t n = step_count(horizon, step);
  Eigen::Matrix<double, 5, 5> a = Eigen::Matrix<double, 5, 5>::Zero();
  a.topLeftCorner<4, 4>() = m.F - m.V;
  a.block<1, 4>(4, 0) = m.F.row(0);
  const auto rhs = [&a](double, const Vec5& y) -> Vec5 { return a * y; };

  Trajectory out;
  out.times.reserve(n + 1);
  out.states.reserve(n + 1);
  out.cumulative_incidence.reserve(n + 1);
  Vec5 y;
  y << x0, 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    out.times.push_back(static_cast<double>(i) * step);
    out.states.push_back(y.head<4>());
    out.cumulative_incidence.push_back(y[4]);
    if (i < n) {
      y = rk4_step(rhs, out.times.back(), y, step);
      if (!y.allFinite()) {
        throw NumericalError("linear integration produced a non-finite state");
      }
    }
  }
  return out;
}

// Nonlinear shell around the infection subsystem: a susceptible pool e with
// recruitment and exit, infecting contacts scaled by the susceptible
// fraction e / n.  transmission_unscaled holds the contact rates before any
// susceptible-fraction scaling.
struct NonlinearParams {
  double recruitment = 0.0;            // persons per month
  double exit_rate = 0.0;              // susceptible-pool exit, per month
  Vec4 transmission_unscaled = Vec4::Zero();
  Vec4 mortality = Vec4::Zero();
  Vec3 detection = Vec3::Zero();       // effective diagnosis rates
  Progression progression;
  double e0 = 0.0;                     // initial susceptible pool
  Vec4 x0 = Vec4::Zero();              // initial infected stages
};

struct NonlinearTrajectory {
  std::vector<double> times;
  std::vector<Vec5> states;                 // (e, a, u, s, d)
  std::vector<double> susceptible_fraction; // e / n
  std::vector<double> cumulative_incidence;
};

inline NonlinearTrajectory integrate_nonlinear(const NonlinearParams& p,
                                               double horizon, double step) {
  if (!(p.e0 > 0.0)) {
    throw std::invalid_argument("initial susceptible pool must be positive");
  }
  const std::size_t n = step_count(horizon, step);
  const double sau = p.progression.acute_to_chronic;
  const double sus = p.progression.chronic_to_aids;
  using State6 = Eigen::Matrix<double, 6, 1>;  // (e, a, u, s, d, cum. incidence)
  const auto rhs = [&p, sau, sus](double, const State6& y) -> State6 {
    const double e = y[0], a = y[1], u = y[2], s = y[3], d = y[4];
    const double total = e + a + u + s + d;
    const double incidence =
        (p.transmission_unscaled[0] * a + p.transmission_unscaled[1] * u +
         p.transmission_unscaled[2] * s + p.transmission_unscaled[3] * d) *
        e / total;
    State6 dy;
    dy[0] = p.recruitment - p.exit_rate * e - incidence;
    dy[1] = incidence - (sau + p.detection[0] + p.mortality[0]) * a;
    dy[2] = sau * a - (sus + p.detection[1] + p.mortality[1]) * u;
    dy[3] = sus * u - (p.detection[2] + p.mortality[2]) * s;
    dy[4] = p.detection[0] * a + p.detection[1] * u + p.detection[2] * s -
            p.mortality[3] * d;
    dy[5] = incidence;
    return dy;
  };

  NonlinearTrajectory out;
  out.times.reserve(n + 1);
  out.states.reserve(n + 1);
  out.susceptible_fraction.reserve(n + 1);
  out.cumulative_incidence.reserve(n + 1);
  State6 y;
  y << p.e0, p.x0, 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double total = y.head<5>().sum();
    if (!(total > 0.0)) {
      throw NumericalError("nonlinear integration drained the population");
    }
    out.times.push_back(static_cast<double>(i) * step);
    out.states.push_back(y.head<5>());
    out.susceptible_fraction.push_back(y[0] / total);
    out.cumulative_incidence.push_back(y[5]);
    if (i < n) {
      y = rk4_step(rhs, out.times.back(), y, step);
      if (!y.allFinite()) {
        throw NumericalError("nonlinear integration produced a non-finite state");
      }
    }
  }
  return out;
}

// Certificate that the susceptible fraction stayed near its initial value,
// which is what licenses freezing it inside the linear model.
//
// Pointwise bound: |sigma(t) - sigma0| <= max over sampled t* <= t of
//   (recruitment / n(t*) + contact rate of the acute stage
//      + max stage mortality - exit rate) * (1 - sigma(t*)) * (t - t0).
// The mean-value point t* is unknown, so the bracket is maximized over the
// sampled path -- a conservative evaluation.  The uniform bound replaces
// n(t*) with min n and drops the (1 - sigma) factor; it dominates the
// pointwise bound wherever both are defined.
struct ErrorCertificate {
  double sigma0 = 0.0;
  std::vector<double> observed_drift;
  std::vector<double> bound_pointwise;
  double bound_uniform_rate = 0.0;  // multiply by elapsed time
  double worst_ratio = 0.0;         // max drift / pointwise bound
  bool passed = false;
};

inline ErrorCertificate linearization_certificate(const NonlinearParams& p,
                                                  const NonlinearTrajectory& t) {
  ErrorCertificate c;
  const std::size_t n = t.times.size();
  c.sigma0 = t.susceptible_fraction.front();
  c.observed_drift.resize(n);
  c.bound_pointwise.resize(n);
  const double mu_max = p.mortality.maxCoeff();
  double n_min = t.states.front().sum();
  double bracket_max = 0.0;
  c.passed = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double total = t.states[i].sum();
    n_min = std::min(n_min, total);
    const double bracket =
        (p.recruitment / total + p.transmission_unscaled[0] + mu_max -
         p.exit_rate) *
        (1.0 - t.susceptible_fraction[i]);
    bracket_max = std::max(bracket_max, bracket);
    c.observed_drift[i] = std::abs(t.susceptible_fraction[i] - c.sigma0);
    c.bound_pointwise[i] = bracket_max * (t.times[i] - t.times.front());
    if (i > 0) {
      c.worst_ratio =
          std::max(c.worst_ratio, c.observed_drift[i] / c.bound_pointwise[i]);
      if (c.observed_drift[i] > c.bound_pointwise[i]) c.passed = false;
    }
  }
  c.bound_uniform_rate = p.recruitment / n_min + p.transmission_unscaled[0] +
                         mu_max - p.exit_rate;
  return c;
}

}  // namespace hivst
