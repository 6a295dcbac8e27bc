#pragma once

#include "l1ac/controller.hpp"
#include "l1ac/model.hpp"

// Non-implementable analysis systems: the ideal system (desired dynamics
// under the feedforward input) and the uncertainty-aware reference system in
// its closed-loop state-space form, co-simulated for bound verification.

namespace l1ac::refsys {

using ctrl::FilterRealization;
using la::Mat;
using la::Vec;
using model::ModeDefinition;

/// Closed-loop matrices of the reference system state [x_ref; x_f1; x_I1]
/// with u_ref = -x_I1. Assembled per mode and per (theta, omega) point:
///
///   Abar = [ A + B theta^T      0      -B omega   ]
///          [ B_f theta^T       A_f    -B_f omega  ]
///          [ D_f theta^T       C_f    -D_f omega  ]
///   Bbar = [B; B_f; D_f],  Ebar = -[0; B_f k; D_f k],  Cbar = [0 0 -I].
///
/// The signs on the x_I1 column and on Ebar are fixed relative to the usual
/// printed block layout so that the loop u_ref = -(D0/s) mu_ref with
/// mu_ref = omega u_ref + theta^T x_ref + d - k r is realized exactly; the
/// frequency-response tests pin this down against the loop form.
struct ClosedLoopMatrices {
  Mat Abar;
  Mat Bbar;
  Mat Ebar;
  Mat Cbar;

  Eigen::Index dim() const { return Abar.rows(); }
};

ClosedLoopMatrices build_closedloop_matrices(const ModeDefinition& mode,
                                             const Mat& theta, const Mat& omega,
                                             const FilterRealization& filter);

/// xbar' = Abar xbar + Bbar d + Ebar r; returns the derivative.
Vec reference_deriv(const Vec& xbar, const ClosedLoopMatrices& cm, const Vec& d,
                    const Vec& r);

inline Vec reference_output(const Vec& xbar, const ClosedLoopMatrices& cm) {
  return cm.Cbar * xbar;
}

/// Ideal dynamics, x_id' = A x_id + B k r.
Vec ideal_deriv(const Vec& x_id, const ModeDefinition& mode, const Vec& r);

/// Low-pass filter C(s) = omega (sI + D0(s) omega)^{-1} D0(s) evaluated at
/// s = i w; DC gain is the identity. Used by the frequency-domain oracles
/// and the certificate report.
Eigen::MatrixXcd loop_filter_response(const FilterRealization& f, const Mat& omega,
                                      double w);

}  // namespace l1ac::refsys
