#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "l1ac/model.hpp"

// Implementable L1 controller for the switched plant: state predictor,
// piecewise-constant adaptive law and filtered control law, plus the
// switch-time reset handling. One instance per simulation run.

namespace l1ac::ctrl {

using la::Mat;
using la::Vec;
using model::ModeDefinition;

/// Minimal state-space realization of D0(s). n_f = 0 means a constant
/// D0(s) = D_f, the library default (first-order resulting filter C(s)).
struct FilterRealization {
  Mat A_f;  // n_f x n_f
  Mat B_f;  // n_f x m
  Mat C_f;  // m x n_f
  Mat D_f;  // m x m

  Eigen::Index n_f() const { return A_f.rows(); }
  Eigen::Index m() const { return D_f.rows(); }

  static FilterRealization constant_gain(double k_lpf, Eigen::Index m);

  /// Controllability + observability of (A_f,B_f,C_f); vacuous for n_f = 0.
  bool is_minimal(double tol = 1e-9) const;
};

enum class ReinitPolicy { kMeasured, kMeasuredPlusNoise, kNone };

struct L1Config {
  double Ts = 0.005;
  FilterRealization filter;
  ReinitPolicy reinit_policy = ReinitPolicy::kMeasured;
  double reinit_noise_sigma = 0.0;  // for kMeasuredPlusNoise
  // Measurement noise applied to xtilde at sample instants only (the
  // analysis entry points for error), never inside integration stages.
  double meas_noise_sigma = 0.0;
  double cond_warn_threshold = 1e8;
};

struct L1State {
  Vec xhat;    // predictor state
  Vec eta1;    // matched uncertainty estimate, constant on [jTs,(j+1)Ts)
  Vec eta2;    // unmatched-channel estimate, same holding
  Vec u_int;   // control integrator state; u = -u_int
  Vec x_f;     // D0(s) filter state
};

/// Per-mode factorizations used by the adaptive law: B_perp, lu(B_vee) and
/// lu(e^{-A Ts} - I). Rebuilt when Ts or the mode set changes.
class ModeKit {
 public:
  ModeKit(const ModeDefinition& mode, double Ts);

  const ModeDefinition& mode() const { return mode_; }
  const Mat& B_perp() const { return B_perp_; }

  /// Adaptive law, (B_vee)^{-1} A (e^{-A Ts} - I)^{-1} xtilde, split into
  /// the first m (eta1) and last n-m (eta2) entries. Linear solves only.
  /// Throws "degenerate sampling" when e^{-A Ts} - I is numerically singular.
  std::pair<Vec, Vec> adapt_update(const Vec& xtilde) const;

  /// Error amplification 1/sigma_min(e^{-A Ts} - I); large values flag Ts
  /// too small for clean numerics (log-worthy above ~1e8).
  double condition_estimate() const { return cond_estimate_; }
  bool degenerate() const { return degenerate_; }

 private:
  ModeDefinition mode_;
  Mat B_perp_;
  Eigen::PartialPivLU<Mat> lu_Bvee_;
  Eigen::PartialPivLU<Mat> lu_phi_;  // e^{-A Ts} - I
  double cond_estimate_ = 0.0;
  bool degenerate_ = false;
};

/// Predictor derivative, A xhat + B(u + eta1) + B_perp eta2.
Vec predictor_deriv(const ModeKit& kit, const L1State& s, const Vec& u);

struct ControlDeriv {
  Vec u_int_dot;
  Vec x_f_dot;
  Vec u;  // current control, -u_int
};

/// Control law u(s) = -(D0(s)/s) mu(s) with mu = u + eta1 - k r, realized as
/// x_f' = A_f x_f + B_f mu, u_int' = C_f x_f + D_f mu, u = -u_int.
ControlDeriv control_deriv(const L1State& s, const FilterRealization& f,
                           const Mat& k_gain, const Vec& r);

/// Switch-instant predictor reset. Filter/integrator states and the held
/// eta estimates are never touched. Returns the reinit error norm actually
/// applied (zero under kMeasured/kNone with matched state).
double on_switch(L1State& s, const Vec& x_measured, ReinitPolicy policy,
                 double noise_sigma, std::uint64_t& noise_state);

}  // namespace l1ac::ctrl
