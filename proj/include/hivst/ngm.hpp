#pragma once
// Next-generation analysis of the linearized model.
//
// The new-infection operator F has a single nonzero row, so K = F V^{-1} is
// rank one and its spectral radius equals its trace -- a four-term closed
// form over the transition chain.  Both the closed form and a dense spectral
// fallback are provided; the tests hold them against each other.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "hivst/model.hpp"

namespace hivst {

// Closed-form inverse of the transition matrix V.  V is lower triangular
// with the sparsity produced by assemble(); entry (i, j) of the inverse is
// the expected time spent in compartment i per entry into compartment j.
inline Mat4 transition_inverse(const Mat4& V) {
  const double v11 = V(0, 0), v22 = V(1, 1), v33 = V(2, 2), v44 = V(3, 3);
  if (v11 <= 0.0 || v22 <= 0.0 || v33 <= 0.0 || v44 <= 0.0) {
    throw std::invalid_argument("transition matrix must have positive diagonal");
  }
  const double sau = -V(1, 0);  // acute -> chronic
  const double sus = -V(2, 1);  // chronic -> AIDS
  const double da = -V(3, 0), du = -V(3, 1), ds = -V(3, 2);

  Mat4 inv = Mat4::Zero();
  inv(0, 0) = 1.0 / v11;
  inv(1, 0) = sau / (v11 * v22);
  inv(1, 1) = 1.0 / v22;
  inv(2, 0) = sau * sus / (v11 * v22 * v33);
  inv(2, 1) = sus / (v22 * v33);
  inv(2, 2) = 1.0 / v33;
  // Diagnosed row: expected diagnosed residence time is the probability of
  // ever being diagnosed from column j, scaled by the mean diagnosed dwell.
  for (int j = 0; j < 3; ++j) {
    inv(3, j) = (da * inv(0, j) + du * inv(1, j) + ds * inv(2, j)) / v44;
  }
  inv(3, 3) = 1.0 / v44;
  return inv;
}

// Spectral radius of F V^{-1} via the closed form: expected transmissions
// per newly infected person, summed over the residence time in each
// compartment reachable from the acute stage.
inline double reproduction_number(const ModelMatrices& m) {
  const Mat4 inv = transition_inverse(m.V);
  return m.F.row(0).dot(inv.col(0));
}

// Same quantity through a dense eigensolver; used as a cross-check oracle.
inline double reproduction_number_spectral(const ModelMatrices& m) {
  const Mat4 k = m.F * transition_inverse(m.V);
  Eigen::EigenSolver<Mat4> es(k, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Expected transmissions caused after diagnosis, per entry into the
// diagnosed pool: the diagnosed dwell time weighted by its transmission rate.
inline double diagnosed_term(const StageRates& r) {
  return r.transmission[3] / r.mortality[3];
}

// Reproduction number net of the diagnosed pool's contribution: the
// transmissions attributable to the pre-diagnosis (unaware) period.
inline double awareness_reproduction_number(const ModelMatrices& m,
                                            const StageRates& r) {
  return reproduction_number(m) - diagnosed_term(r);
}

// Split of the reproduction number into per-compartment contributions:
// residence times along the undiagnosed chain, and the probability of ever
// being diagnosed.  Summing transmission-weighted terms reproduces the
// closed form exactly; tests assert the identity.
struct ReproductionDecomposition {
  double time_acute = 0.0;        // expected time in a per acute entry
  double time_chronic = 0.0;      // expected time in u per acute entry
  double time_aids = 0.0;         // expected time in s per acute entry
  double prob_diagnosed = 0.0;    // probability an acute entry is ever diagnosed
  double diagnosed_term = 0.0;    // transmissions per diagnosed entry
};

inline ReproductionDecomposition decompose(const ModelMatrices& m,
                                           const StageRates& r) {
  const Mat4 inv = transition_inverse(m.V);
  ReproductionDecomposition d;
  d.time_acute = inv(0, 0);
  d.time_chronic = inv(1, 0);
  d.time_aids = inv(2, 0);
  d.prob_diagnosed = inv(3, 0) * m.V(3, 3);
  d.diagnosed_term = diagnosed_term(r);
  return d;
}

}  // namespace hivst
