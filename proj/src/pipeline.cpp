#include "l1ac/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace l1ac::l2f {

namespace {
constexpr double kDeg45 = std::numbers::pi / 4.0;
constexpr double kEnvelopeAngle = 85.0 * std::numbers::pi / 180.0;
}  // namespace

V3 aero_moments(const AircraftParams& p, const AircraftState& s,
                const SurfaceDeflections& d, DestabAxis destab) {
  const auto& c = p.aero;
  const double qb = p.qbar(s.V);
  const double p_hat = s.p() * p.b / (2.0 * s.V);
  const double q_hat = s.q() * p.cbar / (2.0 * s.V);
  const double r_hat = s.r() * p.b / (2.0 * s.V);

  double Cl = c.Clbeta * s.beta + c.Clp * p_hat + c.Clr * r_hat + c.Clda * d.da;
  double Cm = c.Cm0 + c.Cmalpha * s.alpha + c.Cmq * q_hat + c.Cmde * d.de;
  double Cn = c.Cnbeta * s.beta + c.Cnp * p_hat + c.Cnr * r_hat + c.Cndr * d.dr;
  if (destab == DestabAxis::kPitch) Cm += c.Cmde_hidden * d.hidden;
  if (destab == DestabAxis::kRoll) Cl += c.Cldf_hidden * d.hidden;

  return V3(qb * p.S * p.b * Cl, qb * p.S * p.cbar * Cm, qb * p.S * p.b * Cn);
}

double destabilize_feedback(const AircraftState& s, DestabAxis axis, double gain) {
  switch (axis) {
    case DestabAxis::kPitch: return gain * s.alpha;
    case DestabAxis::kRoll: return gain * s.p();
    case DestabAxis::kNone: return 0.0;
  }
  return 0.0;
}

double pitch_destab_gain(const AeroCoefficients& c, double static_margin_target) {
  const double cm_alpha_target = -static_margin_target * c.CLalpha;
  return (cm_alpha_target - c.Cmalpha) / c.Cmde_hidden;
}

double roll_destab_gain(const AeroCoefficients& c, double clp_target, double V_ref,
                        double span) {
  return (clp_target - c.Clp) * span / (2.0 * V_ref * c.Cldf_hidden);
}

AircraftDeriv aircraft_deriv(const AircraftState& s, const V3& total_moment,
                             const AircraftParams& p, double thrust,
                             TruthModel model) {
  AircraftDeriv out;
  if (s.V <= 1.0) {
    out.envelope_ok = false;
    out.violation = "airspeed left the valid envelope";
    return out;
  }
  if (std::abs(s.phi) >= kEnvelopeAngle || std::abs(s.theta) >= kEnvelopeAngle) {
    out.envelope_ok = false;
    out.violation = "attitude left the valid envelope (|phi| or |theta| >= 85 deg)";
    return out;
  }

  const double g = p.gravity;
  const double qb = p.qbar(s.V);
  const double CL = p.aero.CL0 + p.aero.CLalpha * s.alpha;
  const double drag = qb * p.S * (p.aero.CD0 + p.aero.k_induced * CL * CL);

  auto& d = out.dot;
  if (model == TruthModel::kSimplified) {
    d.chi = g / s.V * std::tan(s.phi);
    d.gamma = 0.0;
    d.phi = s.p() + std::tan(s.theta) * (s.q() * std::sin(s.phi) + s.r() * std::cos(s.phi));
    d.beta = -s.r() + g / s.V * std::sin(s.phi);
    d.alpha = s.q() - g / s.V * std::sin(s.phi) * std::tan(s.phi);
    d.theta = s.q() * std::cos(s.phi) - s.r() * std::sin(s.phi);
  } else {
    const double L = qb * p.S * CL;
    const double Y = qb * p.S * p.aero.CYbeta * s.beta;
    const double mu = s.phi;  // bank angle approximated by roll angle
    const double mV = p.mass * s.V;
    d.chi = (L * std::sin(mu) + Y * std::cos(mu) * std::cos(s.beta)) /
            (mV * std::cos(s.gamma));
    d.gamma = (L * std::cos(mu) - Y * std::sin(mu) * std::cos(s.beta) -
               p.mass * g * std::cos(s.gamma)) / mV;
    d.phi = s.p() + std::tan(s.theta) * (s.q() * std::sin(s.phi) + s.r() * std::cos(s.phi));
    d.beta = -std::cos(s.alpha) * s.r() + std::sin(s.alpha) * s.p() +
             (Y * std::cos(s.beta) + p.mass * g * std::cos(s.gamma) * std::sin(mu)) / mV;
    d.alpha = s.q() - std::tan(s.beta) * (std::cos(s.alpha) * s.p() + std::sin(s.alpha) * s.r()) +
              (-L + p.mass * g * std::cos(s.gamma) * std::cos(mu)) /
                  (mV * std::cos(s.beta));
    d.theta = s.q() * std::cos(s.phi) - s.r() * std::sin(s.phi);
  }
  d.omega = p.inertia.ldlt().solve(total_moment - s.omega.cross(p.inertia * s.omega));
  d.V = (thrust - drag) / p.mass;
  return out;
}

OuterCmd ndi_outer(double chi_cmd, double gamma_cmd, const AircraftState& s,
                   double K_chi, double gravity) {
  OuterCmd out;
  out.phi_cmd = std::clamp(std::atan(s.V / gravity * K_chi * (chi_cmd - s.chi)),
                           -kDeg45, kDeg45);

  // z-velocity kinematics: sin(gamma) = a1 sin(theta) - a2 cos(theta) with
  // a1 = cos(alpha) cos(beta), a2 = sin(phi) sin(beta) + cos(phi) sin(alpha)
  // cos(beta); reduces to theta_cmd = gamma_cmd at wings level.
  const double a1 = std::cos(s.alpha) * std::cos(s.beta);
  const double a2 = std::sin(s.phi) * std::sin(s.beta) +
                    std::cos(s.phi) * std::sin(s.alpha) * std::cos(s.beta);
  const double R = std::hypot(a1, a2);
  double sg = std::sin(gamma_cmd);
  if (std::abs(sg) > R) {
    sg = std::copysign(R, sg);
    out.gamma_clamped = true;
  }
  // a1 sin(theta) - a2 cos(theta) = R sin(theta - psi), psi = atan2(a2, a1)
  const double psi = std::atan2(a2, a1);
  const double base = std::asin(R > 0.0 ? sg / R : 0.0);
  auto wrap = [](double x) {
    while (x > std::numbers::pi) x -= 2.0 * std::numbers::pi;
    while (x < -std::numbers::pi) x += 2.0 * std::numbers::pi;
    return x;
  };
  const double cand1 = wrap(base + psi);
  const double cand2 = wrap(std::numbers::pi - base + psi);
  out.theta_cmd =
      std::abs(cand1 - s.theta) <= std::abs(cand2 - s.theta) ? cand1 : cand2;
  return out;
}

V3 ndi_middle(double phi_cmd, double theta_cmd, double beta_cmd,
              const AircraftState& s, const NdiGains& g, double gravity) {
  const double cphi = std::cos(s.phi);
  if (std::abs(cphi) < 1e-3)
    throw std::runtime_error("ndi_middle: cos(phi) too small (outside envelope)");
  V3 cmd;
  cmd(0) = g.K_phi * (phi_cmd - s.phi) -
           std::tan(s.theta) * (s.q() * std::sin(s.phi) + s.r() * std::cos(s.phi));
  cmd(1) = (g.K_theta * (theta_cmd - s.theta) + s.r() * std::sin(s.phi)) / cphi;
  cmd(2) = -g.K_beta * (beta_cmd - s.beta) - gravity / s.V * std::sin(s.phi);
  return cmd;
}

V3 ndi_inner(const V3& accel_des, const V3& omega, const V3& M_hat, const M3& I) {
  return I * accel_des + omega.cross(I * omega) - M_hat;
}

V3 ndi_inner(const V3& omega_cmd, const V3& omega, const V3& M_hat, const M3& I,
             const V3& K_omega) {
  return ndi_inner(V3(K_omega.cwiseProduct(omega_cmd - omega)), omega, M_hat, I);
}

NdiGains gains_from_model(const AeroCoefficients& c, double qbar,
                          const AircraftParams& p, double zeta,
                          double omega_n_floor, double K_chi) {
  if (qbar <= 0.0) throw std::invalid_argument("gains_from_model: qbar must be positive");
  NdiGains g;
  g.zeta = zeta;
  g.K_chi = K_chi;
  const double wn_roll = std::sqrt(std::abs(qbar * p.S * p.b / (2.0 * p.inertia(0, 0)) * c.Clda));
  const double wn_pitch = std::sqrt(std::abs(qbar * p.S * p.cbar / p.inertia(1, 1) * c.Cmalpha));
  const double wn_yaw = std::sqrt(std::abs(qbar * p.S * p.b / p.inertia(2, 2) * c.Cnbeta));
  g.omega_n = V3(wn_roll, wn_pitch, wn_yaw);
  for (int i = 0; i < 3; ++i) {
    if (g.omega_n(i) < omega_n_floor) {
      g.omega_n(i) = omega_n_floor;
      g.floored = true;
    }
  }
  g.K_omega = 2.0 * zeta * g.omega_n;
  g.K_phi = g.omega_n(0) / (2.0 * zeta);
  g.K_theta = g.omega_n(1) / (2.0 * zeta);
  g.K_beta = g.omega_n(2) / (2.0 * zeta);
  return g;
}

V3 pti_multisine(double t, const PtiConfig& cfg) {
  if (!cfg.enabled || cfg.amplitude == 0.0) return V3::Zero();
  const int J = cfg.harmonics_per_surface;
  if (J < 1) throw std::invalid_argument("pti_multisine: need at least one harmonic");
  V3 out = V3::Zero();
  for (int surface = 0; surface < 3; ++surface) {
    double acc = 0.0;
    for (int j = 0; j < J; ++j) {
      const int harmonic = surface + 1 + 3 * j;  // disjoint sets per surface
      const double phase = -std::numbers::pi * j * (j - 1) / J;  // Schroeder
      acc += std::sin(2.0 * std::numbers::pi * harmonic * t / cfg.base_period + phase);
    }
    out(surface) = cfg.amplitude * acc / J;
  }
  return out;
}

AeroCoefficients LearnedModel::to_coefficients(const AeroCoefficients& base) const {
  AeroCoefficients c = base;
  c.Clbeta = roll.w(0);
  c.Clp = roll.w(1);
  c.Clr = roll.w(2);
  c.Clda = roll.w(3);
  c.Cm0 = pitch.w(0);
  c.Cmalpha = pitch.w(1);
  c.Cmq = pitch.w(2);
  c.Cmde = pitch.w(3);
  c.Cnbeta = yaw.w(0);
  c.Cnp = yaw.w(1);
  c.Cnr = yaw.w(2);
  c.Cndr = yaw.w(3);
  return c;
}

bool LearnedModel::trusted() const {
  // Standard error of the gain-relevant coefficients. The raw covariance has
  // an excitation-limited floor under forgetting; scaled by the innovation
  // variance it goes to zero once the model explains the data.
  if (std::min({roll.innov_weight, pitch.innov_weight, yaw.innov_weight}) < 25.0)
    return false;
  const double worst = std::max({std::sqrt(roll.innov2() * roll.P(3, 3)),
                                 std::sqrt(pitch.innov2() * pitch.P(1, 1)),
                                 std::sqrt(yaw.innov2() * yaw.P(0, 0))});
  return worst < cov_gate;
}

namespace {

void axis_rls(AxisRls& ax, const Eigen::Vector4d& phi, double y, double lam) {
  const double denom = lam + phi.dot(ax.P * phi);
  const Eigen::Vector4d K = ax.P * phi / denom;
  const double innov = y - phi.dot(ax.w);
  ax.w += K * innov;
  const Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * phi.transpose();
  ax.P = (IKH * ax.P * IKH.transpose() + lam * K * K.transpose()) / lam;
  ax.P = 0.5 * (ax.P + ax.P.transpose()).eval();
  ax.innov_sum = lam * ax.innov_sum + innov * innov;
  ax.innov_weight = lam * ax.innov_weight + 1.0;
}

}  // namespace

void rls_update(LearnedModel& model, const RlsSample& s) {
  const double vals[] = {s.alpha, s.beta, s.p_hat, s.q_hat, s.r_hat,
                         s.da,    s.de,   s.dr,    s.Cl_obs, s.Cm_obs, s.Cn_obs};
  for (double v : vals)
    if (!std::isfinite(v)) return;  // skip corrupt samples
  axis_rls(model.roll, Eigen::Vector4d(s.beta, s.p_hat, s.r_hat, s.da), s.Cl_obs,
           model.forgetting);
  axis_rls(model.pitch, Eigen::Vector4d(1.0, s.alpha, s.q_hat, s.de), s.Cm_obs,
           model.forgetting);
  axis_rls(model.yaw, Eigen::Vector4d(s.beta, s.p_hat, s.r_hat, s.dr), s.Cn_obs,
           model.forgetting);
}

MomentModel predict_moments(const AeroCoefficients& c, const AircraftParams& p,
                            const AircraftState& s, double qbar) {
  MomentModel mm;
  const double p_hat = s.p() * p.b / (2.0 * s.V);
  const double q_hat = s.q() * p.cbar / (2.0 * s.V);
  const double r_hat = s.r() * p.b / (2.0 * s.V);
  mm.M_state(0) = qbar * p.S * p.b * (c.Clbeta * s.beta + c.Clp * p_hat + c.Clr * r_hat);
  mm.M_state(1) = qbar * p.S * p.cbar * (c.Cm0 + c.Cmalpha * s.alpha + c.Cmq * q_hat);
  mm.M_state(2) = qbar * p.S * p.b * (c.Cnbeta * s.beta + c.Cnp * p_hat + c.Cnr * r_hat);
  mm.control_gain = V3(qbar * p.S * p.b * c.Clda, qbar * p.S * p.cbar * c.Cmde,
                       qbar * p.S * p.b * c.Cndr);
  return mm;
}

std::optional<NdiGains> model_publish(const LearnedModel& model,
                                      const AeroCoefficients& base, double t,
                                      double t_last_switch, const NdiGains& current,
                                      double tau_d, double qbar,
                                      const AircraftParams& p, double zeta,
                                      double publish_threshold,
                                      double omega_n_floor, double K_chi) {
  if (!model.trusted()) return std::nullopt;
  if (t - t_last_switch < tau_d - 1e-9) return std::nullopt;
  const NdiGains cand = gains_from_model(model.to_coefficients(base), qbar, p, zeta,
                                         omega_n_floor, K_chi);
  double rel = 0.0;
  for (int i = 0; i < 3; ++i)
    rel = std::max(rel, std::abs(cand.omega_n(i) - current.omega_n(i)) /
                            std::max(current.omega_n(i), 1e-9));
  if (rel <= publish_threshold) return std::nullopt;
  return cand;
}

}  // namespace l1ac::l2f
