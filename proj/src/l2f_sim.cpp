#include "l1ac/l2f_sim.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace l1ac::l2f {

namespace {

// Continuous-state layout.
enum : Eigen::Index {
  iV = 0, iAlpha, iBeta, iP, iQ, iR, iPhi, iTheta, iChi, iGamma,
  iDa, iDe, iDr, iThrInt, iXhat0,  // xhat occupies 3, then x_f, then u_int(3)
};

AircraftState unpack(const Vec& y) {
  AircraftState s;
  s.V = y(iV);
  s.alpha = y(iAlpha);
  s.beta = y(iBeta);
  s.omega = V3(y(iP), y(iQ), y(iR));
  s.phi = y(iPhi);
  s.theta = y(iTheta);
  s.chi = y(iChi);
  s.gamma = y(iGamma);
  return s;
}

AeroCoefficients scaled_guess(const AeroCoefficients& truth, double scale) {
  AeroCoefficients g = truth;
  g.Clbeta *= scale; g.Clp *= scale; g.Clr *= scale; g.Clda *= scale;
  g.Cm0 *= scale; g.Cmalpha *= scale; g.Cmq *= scale; g.Cmde *= scale;
  g.Cnbeta *= scale; g.Cnp *= scale; g.Cnr *= scale; g.Cndr *= scale;
  return g;
}

model::ModeDefinition rate_mode(const NdiGains& g) {
  model::ModeDefinition md;
  md.A = -g.K_omega.asDiagonal().toDenseMatrix();
  md.B = Mat::Identity(3, 3);
  md.C = Mat::Identity(3, 3);
  md.k = g.K_omega.asDiagonal().toDenseMatrix();
  return md;
}

}  // namespace

sim::Trace run_l2f(const L2fScenario& sc) {
  sim::Schedule sch = sc.sched;
  sch.Ts = sc.l1.Ts;  // the controller owns the adaptation period
  sch.validate();
  const Eigen::Index nf = sc.l1.filter.n_f();
  if (sc.l1.filter.m() != 3)
    throw std::invalid_argument("run_l2f: L1 filter must have three channels");
  const Eigen::Index off_xf = iXhat0 + 3;
  const Eigen::Index off_uint = off_xf + nf;
  const Eigen::Index dim = off_uint + 3;

  const double destab_gain =
      sc.destab == DestabAxis::kPitch
          ? pitch_destab_gain(sc.params.aero, sc.static_margin_target)
          : (sc.destab == DestabAxis::kRoll
                 ? roll_destab_gain(sc.params.aero, sc.clp_target, sc.V_cmd, sc.params.b)
                 : 0.0);

  // Learner prior: the scaled initial guess with wide covariance.
  const AeroCoefficients guess = scaled_guess(sc.params.aero, sc.initial_model_scale);
  LearnedModel learner;
  learner.forgetting = sc.forgetting;
  learner.cov_gate = sc.cov_gate;
  learner.roll.P = sc.rls_p0 * Eigen::Matrix4d::Identity();
  learner.pitch.P = sc.rls_p0 * Eigen::Matrix4d::Identity();
  learner.yaw.P = sc.rls_p0 * Eigen::Matrix4d::Identity();
  learner.roll.w = Eigen::Vector4d(guess.Clbeta, guess.Clp, guess.Clr, guess.Clda);
  learner.pitch.w = Eigen::Vector4d(guess.Cm0, guess.Cmalpha, guess.Cmq, guess.Cmde);
  learner.yaw.w = Eigen::Vector4d(guess.Cnbeta, guess.Cnp, guess.Cnr, guess.Cndr);
  learner.published = guess;
  learner.has_published = true;

  NdiGains gains = gains_from_model(guess, sc.params.qbar(sc.x0.V), sc.params,
                                    sc.zeta, sc.omega_n_floor, sc.K_chi);
  auto kit = std::make_unique<ctrl::ModeKit>(rate_mode(gains), sc.l1.Ts);
  double t_last_switch = 0.0;

  Vec y = Vec::Zero(dim);
  y(iV) = sc.x0.V;
  y(iAlpha) = sc.x0.alpha;
  y(iBeta) = sc.x0.beta;
  y.segment(iP, 3) = sc.x0.omega;
  y(iPhi) = sc.x0.phi;
  y(iTheta) = sc.x0.theta;
  y(iChi) = sc.x0.chi;
  y(iGamma) = sc.x0.gamma;
  y.segment(iXhat0, 3) = sc.x0.omega;

  Vec eta1 = Vec::Zero(3);
  V3 omega_cmd_h = V3::Zero();
  V3 surf_cmd_h = V3::Zero();
  V3 pti_h = V3::Zero();
  V3 u_ad_h = V3::Zero();
  double phi_cmd_h = 0.0, theta_cmd_h = 0.0, beta_cmd_h = 0.0;
  std::uint64_t noise_state = sc.seed ^ 0x6a09e667f3bcc909ULL;

  sim::Trace tr;
  tr.columns = {"t", "switch_event", "publish_event",
                "V", "alpha", "beta", "p", "q", "r", "phi", "theta", "chi", "gamma",
                "da", "de", "dr", "hidden_surface",
                "da_cmd", "de_cmd", "dr_cmd", "pti_a", "pti_e", "pti_r",
                "phi_cmd", "theta_cmd", "beta_cmd", "p_cmd", "q_cmd", "r_cmd",
                "u_ad_0", "u_ad_1", "u_ad_2", "eta1_0", "eta1_1", "eta1_2",
                "xtilde_norm",
                "Cm_alpha_hat", "Cm_de_hat", "Cl_da_hat", "Cn_beta_hat",
                "wn_roll", "wn_pitch", "wn_yaw", "thrust"};
  for (const auto& key : {"xtilde", "eta1", "theta_err", "phi_err"})
    tr.sups[key] = 0.0;

  auto thrust_of = [&](const Vec& yy) {
    const double eV = sc.V_cmd - yy(iV);
    return std::clamp(sc.throttle_kp * eV + yy(iThrInt), 0.0, sc.thrust_max);
  };

  auto deriv = [&](double t, const Vec& yy, bool* envelope_ok,
                   std::string* violation) -> Vec {
    const AircraftState s = unpack(yy);
    SurfaceDeflections d;
    d.da = yy(iDa);
    d.de = yy(iDe);
    d.dr = yy(iDr);
    d.hidden = destabilize_feedback(s, sc.destab, destab_gain);
    const V3 M = aero_moments(sc.params, s, d, sc.destab);
    const double thrust = thrust_of(yy);
    const AircraftDeriv ad = aircraft_deriv(s, M, sc.params, thrust, sc.truth_model);
    if (!ad.envelope_ok) {
      if (envelope_ok) {
        *envelope_ok = false;
        *violation = ad.violation;
      }
      return Vec::Zero(dim);
    }

    Vec dy = Vec::Zero(dim);
    dy(iV) = ad.dot.V;
    dy(iAlpha) = ad.dot.alpha;
    dy(iBeta) = ad.dot.beta;
    dy.segment(iP, 3) = ad.dot.omega;
    dy(iPhi) = ad.dot.phi;
    dy(iTheta) = ad.dot.theta;
    dy(iChi) = ad.dot.chi;
    dy(iGamma) = ad.dot.gamma;

    const V3 cmd_total = surf_cmd_h + pti_h;
    for (int i = 0; i < 3; ++i) {
      double rate = (std::clamp(cmd_total(i), -sc.deflection_limit, sc.deflection_limit) -
                     yy(iDa + i)) / sc.actuator_tau;
      dy(iDa + i) = std::clamp(rate, -sc.rate_limit, sc.rate_limit);
    }
    // Throttle integrator with clamping anti-windup.
    const double eV = sc.V_cmd - yy(iV);
    const double thr_unclamped = sc.throttle_kp * eV + yy(iThrInt);
    dy(iThrInt) = (thr_unclamped > 0.0 && thr_unclamped < sc.thrust_max) ||
                          (thr_unclamped <= 0.0 && eV > 0.0) ||
                          (thr_unclamped >= sc.thrust_max && eV < 0.0)
                      ? sc.throttle_ki * eV
                      : 0.0;

    if (sc.adaptive_enabled) {
      const V3 Kw = gains.K_omega;
      dy.segment(iXhat0, 3) =
          (-Kw.cwiseProduct(yy.segment(iXhat0, 3)) + u_ad_h + eta1).eval();
      const Vec mu = u_ad_h + eta1 - Kw.cwiseProduct(omega_cmd_h).matrix();
      dy.segment(off_xf, nf) =
          sc.l1.filter.A_f * yy.segment(off_xf, nf) + sc.l1.filter.B_f * mu;
      dy.segment(off_uint, 3) =
          sc.l1.filter.C_f * yy.segment(off_xf, nf) + sc.l1.filter.D_f * mu;
    }
    return dy;
  };

  const long long steps = sch.steps_total;
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * sch.h;
    int switch_event = 0, publish_event = 0;

    // Model boundary: refresh the inversion coefficients and, when the dwell
    // gate allows, switch the gain schedule (a mode switch for the L1 loop).
    if (sc.learning_enabled && k % sch.steps_per_model == 0 && k > 0) {
      if (learner.trusted()) {
        learner.published = learner.to_coefficients(guess);
        learner.last_publish_time = t;
        publish_event = 1;
      }
      const double qb = sc.params.qbar(y(iV));
      if (auto next = model_publish(learner, guess, t, t_last_switch, gains, sc.tau_d,
                                    qb, sc.params, sc.zeta, sc.publish_threshold,
                                    sc.omega_n_floor, sc.K_chi)) {
        gains = *next;
        kit = std::make_unique<ctrl::ModeKit>(rate_mode(gains), sc.l1.Ts);
        ctrl::L1State ls{y.segment(iXhat0, 3), eta1, Vec::Zero(0),
                         y.segment(off_uint, 3), y.segment(off_xf, nf)};
        ctrl::on_switch(ls, y.segment(iP, 3), sc.reinit_policy,
                        sc.l1.reinit_noise_sigma, noise_state);
        y.segment(iXhat0, 3) = ls.xhat;
        t_last_switch = t;
        switch_event = 1;
      }
    }

    // L1 sample instant.
    if (sc.adaptive_enabled && k % sch.steps_per_sample == 0) {
      const Vec xtilde = y.segment(iXhat0, 3) - y.segment(iP, 3);
      auto [e1, e2] = kit->adapt_update(xtilde);
      eta1 = e1;
    }

    // Control tick: NDI loops, L1 output hold, surface allocation, PTI.
    if (k % sch.steps_per_control == 0) {
      const AircraftState s = unpack(y);
      if (sc.use_outer_loop) {
        const auto oc = ndi_outer(sc.chi_cmd.eval(t)(0), sc.gamma_cmd.eval(t)(0), s,
                                  gains.K_chi, sc.params.gravity);
        phi_cmd_h = oc.phi_cmd;
        theta_cmd_h = oc.theta_cmd;
      } else {
        phi_cmd_h = sc.phi_cmd.eval(t)(0);
        theta_cmd_h = sc.theta_cmd.eval(t)(0);
      }
      beta_cmd_h = sc.beta_cmd.eval(t)(0);
      omega_cmd_h = ndi_middle(phi_cmd_h, theta_cmd_h, beta_cmd_h, s, gains,
                               sc.params.gravity);

      const double qb = sc.params.qbar(s.V);
      const auto mm = predict_moments(learner.published, sc.params, s, qb);
      V3 accel_des;
      if (sc.adaptive_enabled) {
        u_ad_h = -y.segment(off_uint, 3);
        accel_des = -gains.K_omega.cwiseProduct(s.omega) + V3(u_ad_h);
      } else {
        u_ad_h.setZero();
        accel_des = gains.K_omega.cwiseProduct(omega_cmd_h - s.omega);
      }
      const V3 M_cmd = ndi_inner(accel_des, s.omega, mm.M_state, sc.params.inertia);
      for (int i = 0; i < 3; ++i) {
        const double gain = mm.control_gain(i);
        surf_cmd_h(i) = std::abs(gain) > 1e-9 ? M_cmd(i) / gain : 0.0;
        surf_cmd_h(i) = std::clamp(surf_cmd_h(i), -sc.deflection_limit,
                                   sc.deflection_limit);
      }
      pti_h = pti_multisine(t, sc.pti);

      // Learner sample: exact nondimensional moments from the truth state
      // (the hidden channel is not measured, so its moment is attributed to
      // the visible regressors).
      if (sc.learning_enabled) {
        SurfaceDeflections d;
        d.da = y(iDa);
        d.de = y(iDe);
        d.dr = y(iDr);
        d.hidden = destabilize_feedback(s, sc.destab, destab_gain);
        const V3 M = aero_moments(sc.params, s, d, sc.destab);
        RlsSample smp;
        smp.alpha = s.alpha;
        smp.beta = s.beta;
        smp.p_hat = s.p() * sc.params.b / (2.0 * s.V);
        smp.q_hat = s.q() * sc.params.cbar / (2.0 * s.V);
        smp.r_hat = s.r() * sc.params.b / (2.0 * s.V);
        smp.da = d.da;
        smp.de = d.de;
        smp.dr = d.dr;
        smp.Cl_obs = M(0) / (qb * sc.params.S * sc.params.b);
        smp.Cm_obs = M(1) / (qb * sc.params.S * sc.params.cbar);
        smp.Cn_obs = M(2) / (qb * sc.params.S * sc.params.b);
        rls_update(learner, smp);
      }
    }

    // Record and track sups.
    {
      const AircraftState s = unpack(y);
      tr.sups["xtilde"] = std::max(tr.sups["xtilde"],
                                   (y.segment(iXhat0, 3) - y.segment(iP, 3)).norm());
      tr.sups["eta1"] = std::max(tr.sups["eta1"], eta1.norm());
      tr.sups["theta_err"] = std::max(tr.sups["theta_err"], std::abs(s.theta - theta_cmd_h));
      tr.sups["phi_err"] = std::max(tr.sups["phi_err"], std::abs(s.phi - phi_cmd_h));
      if (k % sch.record_stride == 0 || k == steps) {
        std::vector<double> row;
        row.reserve(tr.columns.size());
        const double hidden = destabilize_feedback(s, sc.destab, destab_gain);
        row.insert(row.end(), {t, double(switch_event), double(publish_event),
                               s.V, s.alpha, s.beta, s.p(), s.q(), s.r(),
                               s.phi, s.theta, s.chi, s.gamma,
                               y(iDa), y(iDe), y(iDr), hidden,
                               surf_cmd_h(0), surf_cmd_h(1), surf_cmd_h(2),
                               pti_h(0), pti_h(1), pti_h(2),
                               phi_cmd_h, theta_cmd_h, beta_cmd_h,
                               omega_cmd_h(0), omega_cmd_h(1), omega_cmd_h(2),
                               u_ad_h(0), u_ad_h(1), u_ad_h(2),
                               eta1(0), eta1(1), eta1(2),
                               (y.segment(iXhat0, 3) - y.segment(iP, 3)).norm(),
                               learner.published.Cmalpha, learner.published.Cmde,
                               learner.published.Clda, learner.published.Cnbeta,
                               gains.omega_n(0), gains.omega_n(1), gains.omega_n(2),
                               thrust_of(y)});
        tr.rows.push_back(std::move(row));
      }
    }
    if (k == steps) break;

    // RK4 step with envelope checking on the first stage.
    bool ok = true;
    std::string why;
    const double h = sch.h;
    const Vec k1 = deriv(t, y, &ok, &why);
    if (ok) {
      const Vec k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1, &ok, &why);
      if (ok) {
        const Vec k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2, &ok, &why);
        if (ok) {
          const Vec k4 = deriv(t + h, y + h * k3, &ok, &why);
          if (ok) y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
      }
    }
    if (!ok || !y.allFinite()) {
      tr.aborted = true;
      tr.abort_time = t + h;
      tr.abort_reason = why.empty() ? "non-finite state" : why;
      break;
    }
  }
  return tr;
}

double effective_cm_alpha(const L2fScenario& sc, const AircraftState& at) {
  const double eps = 1e-6;
  auto cm_at = [&](double alpha) {
    AircraftState s = at;
    s.alpha = alpha;
    SurfaceDeflections d;
    d.hidden = destabilize_feedback(s, sc.destab, sc.destab == DestabAxis::kPitch
                                        ? pitch_destab_gain(sc.params.aero,
                                                            sc.static_margin_target)
                                        : 0.0);
    const V3 M = aero_moments(sc.params, s, d, sc.destab);
    return M(1) / (sc.params.qbar(s.V) * sc.params.S * sc.params.cbar);
  };
  return (cm_at(at.alpha + eps) - cm_at(at.alpha - eps)) / (2.0 * eps);
}

double roll_subsidence_eig(const L2fScenario& sc, const AircraftState& at) {
  const double eps = 1e-6;
  const double gain = sc.destab == DestabAxis::kRoll
                          ? roll_destab_gain(sc.params.aero, sc.clp_target, sc.V_cmd,
                                             sc.params.b)
                          : 0.0;
  auto pdot_at = [&](double p) {
    AircraftState s = at;
    s.omega(0) = p;
    SurfaceDeflections d;
    d.hidden = destabilize_feedback(s, sc.destab, gain);
    const V3 M = aero_moments(sc.params, s, d, sc.destab);
    const V3 wd = sc.params.inertia.ldlt().solve(M - s.omega.cross(sc.params.inertia * s.omega));
    return wd(0);
  };
  return (pdot_at(at.p() + eps) - pdot_at(at.p() - eps)) / (2.0 * eps);
}

}  // namespace l1ac::l2f
