#pragma once

#include "l1ac/pipeline.hpp"
#include "l1ac/sim.hpp"

// Co-simulation of the Learn-to-Fly stack: aircraft truth model, actuators
// and throttle loop on the RK4 grid; NDI and PTI at the control rate; RLS
// learning at the control rate; coefficient publishes and dwell-gated gain
// switches at the model rate; L1 adaptation on the rate subsystem at Ts.

namespace l1ac::l2f {

struct L2fScenario {
  AircraftParams params;  // truth vehicle
  TruthModel truth_model = TruthModel::kSimplified;
  AircraftState x0;

  // Actuators (first-order lag with rate and position limits).
  double actuator_tau = 0.02;
  double deflection_limit = 0.35;  // rad
  double rate_limit = 10.0;        // rad/s

  // Hidden throttle hold (unknown to controller and learner).
  double V_cmd = 20.0;
  double throttle_kp = 2.0;
  double throttle_ki = 1.0;
  double thrust_max = 15.0;

  // Guidance: direct attitude profiles, or the outer loop from (chi, gamma).
  bool use_outer_loop = false;
  sim::CommandProfile theta_cmd;  // 1-dim profiles
  sim::CommandProfile phi_cmd;
  sim::CommandProfile beta_cmd;
  sim::CommandProfile chi_cmd;
  sim::CommandProfile gamma_cmd;

  // NDI shaping.
  double zeta = 0.8;
  double K_chi = 0.2;
  double omega_n_floor = 0.5;

  // Initial model guess: truth coefficients scaled by this factor
  // (1.0 = perfect initial knowledge).
  double initial_model_scale = 0.7;

  // Learner.
  bool learning_enabled = true;
  double forgetting = 0.997;
  double rls_p0 = 1e6;
  double cov_gate = 0.05;
  double publish_threshold = 0.02;
  double tau_d = 0.5;  // dwell gate between gain switches

  PtiConfig pti;

  DestabAxis destab = DestabAxis::kNone;
  double static_margin_target = -0.164;  // pitch case
  double clp_target = 0.0;               // roll case (0 = neutral)

  // L1 augmentation on the rate loop.
  bool adaptive_enabled = true;
  ctrl::L1Config l1;  // filter must be 3-channel; default set by config layer
  ctrl::ReinitPolicy reinit_policy = ctrl::ReinitPolicy::kNone;

  sim::Schedule sched;
  std::uint64_t seed = 0;
};

sim::Trace run_l2f(const L2fScenario& sc);

/// Effective pitch stiffness of the destabilized airframe from a finite
/// difference of the truth moment around the state: d C_m_total / d alpha,
/// including the hidden feedback channel. Static margin = -Cm_alpha / CL_alpha.
double effective_cm_alpha(const L2fScenario& sc, const AircraftState& at);

/// Roll-subsidence eigenvalue of the destabilized airframe (d p_dot / d p).
double roll_subsidence_eig(const L2fScenario& sc, const AircraftState& at);

}  // namespace l1ac::l2f
