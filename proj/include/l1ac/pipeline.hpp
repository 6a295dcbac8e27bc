#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "l1ac/linalg.hpp"

// Learn-to-Fly application layer: simplified aircraft truth model, three-loop
// NDI baseline, gain scheduling from the recursively learned aero model, PTI
// excitation and the destabilization scenarios. The L1 inner loop attaches to
// the rate subsystem with A = -K_omega, B = I, k = K_omega.

namespace l1ac::l2f {

using la::Mat;
using la::Vec;
using V3 = Eigen::Vector3d;
using M3 = Eigen::Matrix3d;

struct AircraftState {
  double V = 20.0;    // airspeed, m/s
  double alpha = 0.0; // rad
  double beta = 0.0;  // rad
  V3 omega = V3::Zero();  // body rates p, q, r (rad/s)
  double phi = 0.0;   // rad
  double theta = 0.0; // rad
  double chi = 0.0;   // rad
  double gamma = 0.0; // rad

  double p() const { return omega(0); }
  double q() const { return omega(1); }
  double r() const { return omega(2); }
};

/// Linear nondimensional aero model; doubles as the truth coefficients and
/// as the structure the learner identifies.
struct AeroCoefficients {
  // lift / side force (full model and drag polar)
  double CL0 = 0.4, CLalpha = 5.0, CYbeta = -0.3;
  double CD0 = 0.035, k_induced = 0.05;
  // rolling moment
  double Clbeta = -0.08, Clp = -0.45, Clr = 0.06, Clda = 0.18;
  // pitching moment
  double Cm0 = 0.0, Cmalpha = -0.82, Cmq = -12.0, Cmde = -1.1;
  // yawing moment
  double Cnbeta = 0.12, Cnp = -0.03, Cnr = -0.12, Cndr = -0.1;
  // hidden destabilization channels (half elevator, inboard flaps)
  double Cmde_hidden = -0.55;
  double Cldf_hidden = 0.08;
};

struct AircraftParams {
  double mass = 5.0;       // kg
  M3 inertia = (M3() << 0.4, 0, 0, 0, 0.6, 0, 0, 0, 0.9).finished();
  double S = 0.5;          // wing area, m^2
  double b = 2.0;          // span, m
  double cbar = 0.3;       // mean chord, m
  double gravity = 9.81;
  double rho_air = 1.225;
  AeroCoefficients aero;

  double qbar(double V) const { return 0.5 * rho_air * V * V; }
};

struct SurfaceDeflections {
  double da = 0.0;  // aileron, rad
  double de = 0.0;  // elevator (commanded pair), rad
  double dr = 0.0;  // rudder, rad
  double hidden = 0.0;  // destabilization channel deflection, rad
};

/// Dimensional aero moments [L; M; N] from the truth coefficients,
/// including the hidden-channel contribution when destabilization is active.
enum class DestabAxis { kNone, kPitch, kRoll };

V3 aero_moments(const AircraftParams& p, const AircraftState& s,
                const SurfaceDeflections& d, DestabAxis destab);

/// Hidden destabilizing surface increment: K_dest * alpha onto the half
/// elevator or K_dest * p onto the inboard flaps. Invisible to the
/// controller and the learner.
double destabilize_feedback(const AircraftState& s, DestabAxis axis, double gain);

/// Gain for a target static margin: the effective C_malpha becomes
/// -static_margin * CLalpha through the hidden elevator channel.
double pitch_destab_gain(const AeroCoefficients& c, double static_margin_target);
/// Gain driving the effective roll damping Clp to the target (0 = neutral).
double roll_destab_gain(const AeroCoefficients& c, double clp_target, double V_ref,
                        double span);

struct AircraftDeriv {
  AircraftState dot;   // field-wise time derivatives
  bool envelope_ok = true;
  std::string violation;
};

enum class TruthModel { kSimplified, kFull };

/// Aircraft equations of motion. The simplified variant evaluates the seven
/// small-angle equations exactly as written (gamma is constant); both
/// variants carry a velocity channel dV/dt = (T - D)/m driven by the hidden
/// throttle loop.
AircraftDeriv aircraft_deriv(const AircraftState& s, const V3& total_moment,
                             const AircraftParams& p, double thrust,
                             TruthModel model);

// ---------------------------------------------------------------------------
// NDI baseline controller
// ---------------------------------------------------------------------------

struct NdiGains {
  double K_chi = 0.2;
  double K_phi = 0.0, K_theta = 0.0, K_beta = 0.0;
  V3 K_omega = V3::Zero();  // diagonal inner-loop gains (p, q, r)
  V3 omega_n = V3::Zero();  // per-axis natural frequency
  double zeta = 0.8;
  bool floored = false;     // an omega_n hit the configured floor
};

struct OuterCmd {
  double phi_cmd = 0.0;
  double theta_cmd = 0.0;
  bool gamma_clamped = false;
};

/// First loop: guidance (chi_cmd, gamma_cmd) to attitude commands, with the
/// roll command saturated to +-45 deg and theta_cmd from the kinematic
/// relation, taking the solution nearest the current pitch angle.
OuterCmd ndi_outer(double chi_cmd, double gamma_cmd, const AircraftState& s,
                   double K_chi, double gravity);

/// Second loop: attitude to body-rate commands.
V3 ndi_middle(double phi_cmd, double theta_cmd, double beta_cmd,
              const AircraftState& s, const NdiGains& g, double gravity);

/// Third loop: desired angular acceleration to moment command,
/// M_cmd = I a_des + omega x I omega - M_hat.
V3 ndi_inner(const V3& accel_des, const V3& omega, const V3& M_hat, const M3& I);

/// Rate-error form, M_cmd = I K_omega (omega_cmd - omega) - (M_hat - omega x I omega).
V3 ndi_inner(const V3& omega_cmd, const V3& omega, const V3& M_hat, const M3& I,
             const V3& K_omega);

/// Table-driven gain schedule from the learned coefficients:
/// roll omega_n = sqrt(|qbar S b / (2 Ixx) Clda|), pitch sqrt(|qbar S cbar /
/// Iyy Cmalpha|), yaw sqrt(|qbar S b / Izz Cnbeta|); K_rate = 2 zeta omega_n,
/// K_angle = omega_n / (2 zeta).
NdiGains gains_from_model(const AeroCoefficients& c, double qbar,
                          const AircraftParams& p, double zeta,
                          double omega_n_floor = 0.5, double K_chi = 0.2);

// ---------------------------------------------------------------------------
// PTI excitation
// ---------------------------------------------------------------------------

struct PtiConfig {
  bool enabled = true;
  double amplitude = 0.03;       // rad per surface
  double base_period = 2.0;      // s; harmonics are multiples of 1/base_period
  int harmonics_per_surface = 4;
  // Surface k uses harmonics {k+1, k+1+3, k+1+6, ...}: disjoint by
  // construction, hence orthogonal over the base period.
};

/// Zero-mean multisine perturbations with Schroeder phasing for the three
/// surfaces (aileron, elevator, rudder).
V3 pti_multisine(double t, const PtiConfig& cfg);

// ---------------------------------------------------------------------------
// Recursive least-squares aero learner
// ---------------------------------------------------------------------------

/// Per-axis RLS with exponential forgetting on the linear regressors
///   roll:  [beta, p_hat, r_hat, da]   -> C_l
///   pitch: [1, alpha, q_hat, de]      -> C_m
///   yaw:   [beta, p_hat, r_hat, dr]   -> C_n
/// The hidden destabilization channel is deliberately absent, so the learned
/// coefficients converge to the effective (destabilized) derivatives.
struct AxisRls {
  Eigen::Vector4d w = Eigen::Vector4d::Zero();
  Eigen::Matrix4d P = 1e6 * Eigen::Matrix4d::Identity();
  // Forgetting-weighted innovation statistics; innov2() scales P into a
  // coefficient variance (sigma^2 P).
  double innov_sum = 0.0;
  double innov_weight = 0.0;

  double innov2() const { return innov_weight > 0.0 ? innov_sum / innov_weight : 1e9; }
};

struct LearnedModel {
  AxisRls roll, pitch, yaw;
  double forgetting = 0.997;
  // Publish when the standard error sqrt(innov2 * P_ii) of each gain-relevant
  // coefficient (Clda, Cmalpha, Cnbeta) is below this tolerance.
  double cov_gate = 0.05;
  double last_publish_time = -1.0;

  // Coefficient snapshot currently used by the NDI inversion.
  AeroCoefficients published;
  bool has_published = false;

  AeroCoefficients to_coefficients(const AeroCoefficients& base) const;
  bool trusted() const;
};

struct RlsSample {
  double alpha, beta, p_hat, q_hat, r_hat;
  double da, de, dr;
  double Cl_obs, Cm_obs, Cn_obs;
};

/// One RLS step on all three axes (Joseph-form covariance update).
/// Non-finite samples are skipped.
void rls_update(LearnedModel& model, const RlsSample& sample);

/// Moment prediction from the published coefficients, split into the
/// state-dependent part (used as M_hat by the inversion) and the per-axis
/// control effectiveness (used to allocate surface commands).
struct MomentModel {
  V3 M_state;          // qbar-scaled state-dependent moments
  V3 control_gain;     // dM/d(surface) per axis
};

MomentModel predict_moments(const AeroCoefficients& c, const AircraftParams& p,
                            const AircraftState& s, double qbar);

/// Gain-publish decision at a model boundary: returns the new gains when the
/// dwell time since the last switch has elapsed and the relative omega_n
/// change exceeds the threshold.
std::optional<NdiGains> model_publish(const LearnedModel& model,
                                      const AeroCoefficients& base, double t,
                                      double t_last_switch, const NdiGains& current,
                                      double tau_d, double qbar,
                                      const AircraftParams& p, double zeta,
                                      double publish_threshold,
                                      double omega_n_floor, double K_chi);

}  // namespace l1ac::l2f
