#include "l1ac/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace l1ac::config {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

double num(const json& j, const std::string& key, double fallback,
           const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

bool flag(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return j[key].get<bool>();
}

la::Mat mat_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(where + ": expected a matrix (array of arrays)");
  const std::size_t rows = j.size(), cols = j[0].size();
  la::Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(where + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(where + ": non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  if (!m.allFinite()) throw ConfigError(where + ": non-finite entry");
  return m;
}

la::Vec vec_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || j[0].is_array())
    throw ConfigError(where + ": expected a flat array");
  la::Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

sim::CommandProfile profile_of(const json& j, Eigen::Index m, const std::string& where) {
  check_keys(j, {"type", "amplitude", "t_start", "period", "width"}, where);
  sim::CommandProfile p;
  const std::string type = j.value("type", "constant");
  if (type == "constant") p.kind = sim::CommandProfile::Kind::kConstant;
  else if (type == "step") p.kind = sim::CommandProfile::Kind::kStep;
  else if (type == "square") p.kind = sim::CommandProfile::Kind::kSquare;
  else if (type == "sine") p.kind = sim::CommandProfile::Kind::kSine;
  else if (type == "doublet") p.kind = sim::CommandProfile::Kind::kDoublet;
  else throw ConfigError(where + ".type: unknown profile '" + type + "'");
  if (j.contains("amplitude")) {
    if (j["amplitude"].is_number()) {
      p.amplitude = la::Vec::Constant(m, j["amplitude"].get<double>());
    } else {
      p.amplitude = vec_of(j["amplitude"], where + ".amplitude");
      if (p.amplitude.size() != m)
        throw ConfigError(where + ".amplitude: expected " + std::to_string(m) + " entries");
    }
  } else {
    p.amplitude = la::Vec::Zero(m);
  }
  p.t_start = num(j, "t_start", 0.0, where);
  p.period = num(j, "period", 4.0, where);
  p.width = num(j, "width", 1.0, where);
  if (p.period <= 0.0 || p.width <= 0.0)
    throw ConfigError(where + ": period and width must be positive");
  return p;
}

sim::CommandProfile zero_profile(Eigen::Index m) {
  sim::CommandProfile p;
  p.amplitude = la::Vec::Zero(m);
  return p;
}

model::PolytopeTrajectory traj_of(const json& j, const std::vector<la::Mat>& vertices,
                                  Eigen::Index rows, Eigen::Index cols,
                                  const std::string& where, std::uint64_t seed) {
  check_keys(j, {"family", "p0", "p1", "freq_hz", "phase", "t_start", "t_ramp",
                 "noise_terms", "bandwidth_hz"}, where);
  model::PolytopeTrajectory tr;
  const std::string fam = j.value("family", "constant");
  using F = model::PolytopeTrajectory::Family;
  if (fam == "constant") tr.family = F::kConstant;
  else if (fam == "sinusoid") tr.family = F::kSinusoid;
  else if (fam == "ramp_hold") tr.family = F::kRampHold;
  else if (fam == "filtered_noise") tr.family = F::kFilteredNoise;
  else throw ConfigError(where + ".family: unknown family '" + fam + "'");

  auto endpoint = [&](const char* key, const la::Mat& fallback) {
    if (!j.contains(key)) return fallback;
    const bool nested = j[key].is_array() && !j[key].empty() && j[key][0].is_array();
    la::Mat p = nested ? mat_of(j[key], where + "." + key)
                       : la::Mat(vec_of(j[key], where + "." + key));
    if (p.rows() != rows || p.cols() != cols)
      throw ConfigError(where + "." + std::string(key) + ": wrong dimensions");
    if (model::polytope_distance(vertices, p) > 1e-7)
      throw ConfigError(where + "." + std::string(key) + ": outside the vertex polytope");
    return p;
  };
  tr.p0 = endpoint("p0", la::Mat::Zero(rows, cols));
  tr.p1 = endpoint("p1", tr.p0);
  tr.freq_hz = num(j, "freq_hz", 0.5, where);
  tr.phase = num(j, "phase", 0.0, where);
  tr.t_start = num(j, "t_start", 0.0, where);
  tr.t_ramp = std::max(num(j, "t_ramp", 1.0, where), 1e-9);
  tr.noise_terms = static_cast<int>(num(j, "noise_terms", 8, where));
  tr.noise_bandwidth_hz = num(j, "bandwidth_hz", 2.0, where);
  tr.seed = seed;
  return tr;
}

ctrl::FilterRealization filter_of(const json& j, Eigen::Index m, const std::string& where) {
  check_keys(j, {"gain", "Af", "Bf", "Cf", "Df"}, where);
  if (j.contains("gain")) {
    if (j.size() != 1) throw ConfigError(where + ": 'gain' excludes state-space entries");
    const double k = j["gain"].get<double>();
    if (k < 0.0) throw ConfigError(where + ".gain: must be nonnegative");
    return ctrl::FilterRealization::constant_gain(k, m);
  }
  ctrl::FilterRealization f;
  f.A_f = mat_of(j.at("Af"), where + ".Af");
  f.B_f = mat_of(j.at("Bf"), where + ".Bf");
  f.C_f = mat_of(j.at("Cf"), where + ".Cf");
  f.D_f = mat_of(j.at("Df"), where + ".Df");
  const Eigen::Index nf = f.A_f.rows();
  if (f.A_f.cols() != nf || f.B_f.rows() != nf || f.B_f.cols() != m ||
      f.C_f.rows() != m || f.C_f.cols() != nf || f.D_f.rows() != m || f.D_f.cols() != m)
    throw ConfigError(where + ": inconsistent filter dimensions");
  if (!f.is_minimal())
    throw ConfigError(where + ": filter realization not minimal");
  return f;
}

ctrl::ReinitPolicy policy_of(const json& j, const std::string& where) {
  const std::string p = j.value("reinit_policy", "measured");
  if (p == "measured") return ctrl::ReinitPolicy::kMeasured;
  if (p == "measured_plus_noise") return ctrl::ReinitPolicy::kMeasuredPlusNoise;
  if (p == "none") return ctrl::ReinitPolicy::kNone;
  throw ConfigError(where + ".reinit_policy: unknown policy '" + p + "'");
}

void parse_schedule(const json& root, sim::Schedule& sch) {
  if (!root.contains("schedule")) return;
  const json& j = root["schedule"];
  check_keys(j, {"h", "horizon", "control_rate_hz", "model_rate_hz", "zoh_control",
                 "record_stride"}, "schedule");
  sch.horizon = num(j, "horizon", sch.horizon, "schedule");
  sch.control_rate_hz = num(j, "control_rate_hz", sch.control_rate_hz, "schedule");
  sch.model_rate_hz = num(j, "model_rate_hz", sch.model_rate_hz, "schedule");
  sch.zoh_control = flag(j, "zoh_control", sch.zoh_control, "schedule");
  sch.record_stride = static_cast<int>(num(j, "record_stride", sch.record_stride, "schedule"));
  sch.h = num(j, "h", sch.h, "schedule");
}

void parse_certificates(const json& root, Scenario& sc) {
  if (!root.contains("certificates")) return;
  const json& j = root["certificates"];
  check_keys(j, {"a", "a_star", "delta0_target", "strict_norm_bounds", "nu_floor",
                 "alpha_steps", "empirical_margin", "theta_bound", "d_bound",
                 "omega_spread", "r_bound"}, "certificates");
  auto& o = sc.cert_opts;
  o.a = num(j, "a", o.a, "certificates");
  o.a_star = num(j, "a_star", o.a_star, "certificates");
  o.delta0_target = num(j, "delta0_target", o.delta0_target, "certificates");
  o.strict_norm_bounds = flag(j, "strict_norm_bounds", o.strict_norm_bounds, "certificates");
  o.nu_floor = num(j, "nu_floor", o.nu_floor, "certificates");
  o.alpha_steps = static_cast<int>(num(j, "alpha_steps", o.alpha_steps, "certificates"));
  o.empirical_margin = num(j, "empirical_margin", o.empirical_margin, "certificates");
  sc.rate_theta_bound = num(j, "theta_bound", sc.rate_theta_bound, "certificates");
  sc.rate_d_bound = num(j, "d_bound", sc.rate_d_bound, "certificates");
  sc.rate_omega_spread = num(j, "omega_spread", sc.rate_omega_spread, "certificates");
  sc.rate_r_bound = num(j, "r_bound", sc.rate_r_bound, "certificates");
}

void parse_linear(const json& root, Scenario& sc) {
  const json& jp = root.at("plant");
  check_keys(jp, {"modes", "x0"}, "plant");
  if (!jp.contains("modes") || !jp["modes"].is_array() || jp["modes"].empty())
    throw ConfigError("plant.modes: expected a nonempty array");
  auto& lin = sc.linear;
  for (std::size_t i = 0; i < jp["modes"].size(); ++i) {
    const json& jm = jp["modes"][i];
    const std::string where = "plant.modes[" + std::to_string(i) + "]";
    check_keys(jm, {"A", "B", "C", "k"}, where);
    model::ModeDefinition md;
    md.A = mat_of(jm.at("A"), where + ".A");
    md.B = mat_of(jm.at("B"), where + ".B");
    md.C = mat_of(jm.at("C"), where + ".C");
    md.k = mat_of(jm.at("k"), where + ".k");
    lin.modes.modes.push_back(std::move(md));
  }
  const Eigen::Index n = lin.modes.n(), m = lin.modes.m();
  lin.x0 = jp.contains("x0") ? vec_of(jp["x0"], "plant.x0") : la::Vec::Zero(n);
  if (lin.x0.size() != n) throw ConfigError("plant.x0: expected " + std::to_string(n) + " entries");

  const json& ju = root.at("uncertainty");
  check_keys(ju, {"theta_vertices", "d_vertices", "omega_vertices", "theta_traj",
                  "d_traj", "omega_modes"}, "uncertainty");
  for (const auto& v : ju.at("theta_vertices"))
    lin.sets.theta_vertices.push_back(mat_of(v, "uncertainty.theta_vertices"));
  for (const auto& v : ju.at("d_vertices"))
    lin.sets.d_vertices.push_back(vec_of(v, "uncertainty.d_vertices"));
  for (const auto& v : ju.at("omega_vertices"))
    lin.sets.omega_vertices.push_back(mat_of(v, "uncertainty.omega_vertices"));

  std::vector<la::Mat> d_as_mats(lin.sets.d_vertices.begin(), lin.sets.d_vertices.end());
  lin.uncertainty.theta =
      ju.contains("theta_traj")
          ? traj_of(ju["theta_traj"], lin.sets.theta_vertices, n, m,
                    "uncertainty.theta_traj", lin.seed ^ 0x1111)
          : model::PolytopeTrajectory::constant(la::Mat::Zero(n, m));
  lin.uncertainty.d = ju.contains("d_traj")
                          ? traj_of(ju["d_traj"], d_as_mats, m, 1,
                                    "uncertainty.d_traj", lin.seed ^ 0x2222)
                          : model::PolytopeTrajectory::constant(la::Mat::Zero(m, 1));
  if (ju.contains("omega_modes")) {
    for (const auto& v : ju["omega_modes"])
      lin.uncertainty.omega_per_mode.push_back(mat_of(v, "uncertainty.omega_modes"));
    if (lin.uncertainty.omega_per_mode.size() != lin.modes.count())
      throw ConfigError("uncertainty.omega_modes: one omega per mode required");
    for (const auto& w : lin.uncertainty.omega_per_mode)
      if (model::polytope_distance(lin.sets.omega_vertices, w) > 1e-7)
        throw ConfigError("uncertainty.omega_modes: a mode omega lies outside Omega");
  } else {
    lin.uncertainty.omega_per_mode.assign(lin.modes.count(), la::Mat::Identity(m, m));
  }

  if (root.contains("switching")) {
    const json& js = root["switching"];
    check_keys(js, {"initial_mode", "times", "modes"}, "switching");
    lin.signal.initial_mode = static_cast<int>(num(js, "initial_mode", 0, "switching"));
    if (js.contains("times") != js.contains("modes"))
      throw ConfigError("switching: 'times' and 'modes' must appear together");
    if (js.contains("times")) {
      const la::Vec times = vec_of(js["times"], "switching.times");
      const la::Vec modes = vec_of(js["modes"], "switching.modes");
      if (times.size() != modes.size())
        throw ConfigError("switching: times and modes differ in length");
      for (Eigen::Index i = 0; i < times.size(); ++i)
        lin.signal.events.push_back({times(i), static_cast<int>(modes(i))});
    }
  }

  const json jc = root.contains("controller") ? root["controller"] : json::object();
  check_keys(jc, {"enabled", "Ts", "filter", "reinit_policy", "reinit_noise_sigma",
                  "meas_noise_sigma"}, "controller");
  lin.l1.Ts = num(jc, "Ts", 0.005, "controller");
  lin.l1.filter = jc.contains("filter") ? filter_of(jc["filter"], m, "controller.filter")
                                        : ctrl::FilterRealization::constant_gain(25.0, m);
  lin.l1.reinit_policy = policy_of(jc, "controller");
  lin.l1.reinit_noise_sigma = num(jc, "reinit_noise_sigma", 0.0, "controller");
  lin.l1.meas_noise_sigma = num(jc, "meas_noise_sigma", 0.0, "controller");

  if (root.contains("commands")) {
    const json& jcmd = root["commands"];
    check_keys(jcmd, {"r"}, "commands");
    lin.rcmd = jcmd.contains("r") ? profile_of(jcmd["r"], m, "commands.r")
                                  : zero_profile(m);
  } else {
    lin.rcmd = zero_profile(m);
  }

  lin.sched.h = std::min(lin.l1.Ts / 10.0, 0.001);
  parse_schedule(root, lin.sched);
  if (root.contains("outputs")) {
    const json& jo = root["outputs"];
    check_keys(jo, {"divergence_limit"}, "outputs");
    lin.divergence_limit = num(jo, "divergence_limit", lin.divergence_limit, "outputs");
  }
  lin.strict_norm_bounds = sc.cert_opts.strict_norm_bounds;
}

void parse_aero(const json& j, l2f::AeroCoefficients& c, const std::string& where) {
  check_keys(j, {"CL0", "CLalpha", "CYbeta", "CD0", "k_induced",
                 "Clbeta", "Clp", "Clr", "Clda",
                 "Cm0", "Cmalpha", "Cmq", "Cmde",
                 "Cnbeta", "Cnp", "Cnr", "Cndr",
                 "Cmde_hidden", "Cldf_hidden"}, where);
  c.CL0 = num(j, "CL0", c.CL0, where);
  c.CLalpha = num(j, "CLalpha", c.CLalpha, where);
  c.CYbeta = num(j, "CYbeta", c.CYbeta, where);
  c.CD0 = num(j, "CD0", c.CD0, where);
  c.k_induced = num(j, "k_induced", c.k_induced, where);
  c.Clbeta = num(j, "Clbeta", c.Clbeta, where);
  c.Clp = num(j, "Clp", c.Clp, where);
  c.Clr = num(j, "Clr", c.Clr, where);
  c.Clda = num(j, "Clda", c.Clda, where);
  c.Cm0 = num(j, "Cm0", c.Cm0, where);
  c.Cmalpha = num(j, "Cmalpha", c.Cmalpha, where);
  c.Cmq = num(j, "Cmq", c.Cmq, where);
  c.Cmde = num(j, "Cmde", c.Cmde, where);
  c.Cnbeta = num(j, "Cnbeta", c.Cnbeta, where);
  c.Cnp = num(j, "Cnp", c.Cnp, where);
  c.Cnr = num(j, "Cnr", c.Cnr, where);
  c.Cndr = num(j, "Cndr", c.Cndr, where);
  c.Cmde_hidden = num(j, "Cmde_hidden", c.Cmde_hidden, where);
  c.Cldf_hidden = num(j, "Cldf_hidden", c.Cldf_hidden, where);
}

void parse_aircraft(const json& root, Scenario& sc) {
  auto& ac = sc.aircraft;
  const json& ja = root.at("aircraft");
  check_keys(ja, {"truth_model", "params", "x0", "actuators", "velocity_loop"},
             "aircraft");
  const std::string tm = ja.value("truth_model", "simplified");
  if (tm == "simplified") ac.truth_model = l2f::TruthModel::kSimplified;
  else if (tm == "full") ac.truth_model = l2f::TruthModel::kFull;
  else throw ConfigError("aircraft.truth_model: expected 'simplified' or 'full'");

  if (ja.contains("params")) {
    const json& jp = ja["params"];
    check_keys(jp, {"mass", "inertia", "S", "b", "cbar", "rho_air", "gravity", "aero"},
               "aircraft.params");
    ac.params.mass = num(jp, "mass", ac.params.mass, "aircraft.params");
    ac.params.S = num(jp, "S", ac.params.S, "aircraft.params");
    ac.params.b = num(jp, "b", ac.params.b, "aircraft.params");
    ac.params.cbar = num(jp, "cbar", ac.params.cbar, "aircraft.params");
    ac.params.rho_air = num(jp, "rho_air", ac.params.rho_air, "aircraft.params");
    ac.params.gravity = num(jp, "gravity", ac.params.gravity, "aircraft.params");
    if (jp.contains("inertia")) {
      const la::Vec I = vec_of(jp["inertia"], "aircraft.params.inertia");
      if (I.size() != 3) throw ConfigError("aircraft.params.inertia: expected 3 entries");
      ac.params.inertia = I.asDiagonal();
    }
    if (jp.contains("aero")) parse_aero(jp["aero"], ac.params.aero, "aircraft.params.aero");
    if (ac.params.mass <= 0.0 || ac.params.S <= 0.0 || ac.params.b <= 0.0 ||
        ac.params.cbar <= 0.0)
      throw ConfigError("aircraft.params: geometry and mass must be positive");
  }
  if (ja.contains("x0")) {
    const json& jx = ja["x0"];
    check_keys(jx, {"V", "alpha", "beta", "p", "q", "r", "phi", "theta", "chi", "gamma"},
               "aircraft.x0");
    ac.x0.V = num(jx, "V", ac.x0.V, "aircraft.x0");
    ac.x0.alpha = num(jx, "alpha", 0.0, "aircraft.x0");
    ac.x0.beta = num(jx, "beta", 0.0, "aircraft.x0");
    ac.x0.omega = l2f::V3(num(jx, "p", 0.0, "aircraft.x0"), num(jx, "q", 0.0, "aircraft.x0"),
                          num(jx, "r", 0.0, "aircraft.x0"));
    ac.x0.phi = num(jx, "phi", 0.0, "aircraft.x0");
    ac.x0.theta = num(jx, "theta", 0.0, "aircraft.x0");
    ac.x0.chi = num(jx, "chi", 0.0, "aircraft.x0");
    ac.x0.gamma = num(jx, "gamma", 0.0, "aircraft.x0");
  }
  if (ja.contains("actuators")) {
    const json& jact = ja["actuators"];
    check_keys(jact, {"tau", "deflection_limit", "rate_limit"}, "aircraft.actuators");
    ac.actuator_tau = num(jact, "tau", ac.actuator_tau, "aircraft.actuators");
    ac.deflection_limit = num(jact, "deflection_limit", ac.deflection_limit, "aircraft.actuators");
    ac.rate_limit = num(jact, "rate_limit", ac.rate_limit, "aircraft.actuators");
    if (ac.actuator_tau <= 0.0) throw ConfigError("aircraft.actuators.tau: must be positive");
  }
  if (ja.contains("velocity_loop")) {
    const json& jv = ja["velocity_loop"];
    check_keys(jv, {"V_cmd", "kp", "ki", "thrust_max"}, "aircraft.velocity_loop");
    ac.V_cmd = num(jv, "V_cmd", ac.V_cmd, "aircraft.velocity_loop");
    ac.throttle_kp = num(jv, "kp", ac.throttle_kp, "aircraft.velocity_loop");
    ac.throttle_ki = num(jv, "ki", ac.throttle_ki, "aircraft.velocity_loop");
    ac.thrust_max = num(jv, "thrust_max", ac.thrust_max, "aircraft.velocity_loop");
  }

  if (root.contains("ndi")) {
    const json& jn = root["ndi"];
    check_keys(jn, {"zeta", "K_chi", "omega_n_floor", "initial_model_scale"}, "ndi");
    ac.zeta = num(jn, "zeta", ac.zeta, "ndi");
    ac.K_chi = num(jn, "K_chi", ac.K_chi, "ndi");
    ac.omega_n_floor = num(jn, "omega_n_floor", ac.omega_n_floor, "ndi");
    ac.initial_model_scale = num(jn, "initial_model_scale", ac.initial_model_scale, "ndi");
    if (ac.zeta <= 0.0) throw ConfigError("ndi.zeta: must be positive");
  }
  if (root.contains("learner")) {
    const json& jl = root["learner"];
    check_keys(jl, {"enabled", "forgetting", "cov_gate", "publish_threshold", "tau_d",
                    "p0"}, "learner");
    ac.learning_enabled = flag(jl, "enabled", ac.learning_enabled, "learner");
    ac.forgetting = num(jl, "forgetting", ac.forgetting, "learner");
    ac.cov_gate = num(jl, "cov_gate", ac.cov_gate, "learner");
    ac.publish_threshold = num(jl, "publish_threshold", ac.publish_threshold, "learner");
    ac.tau_d = num(jl, "tau_d", ac.tau_d, "learner");
    ac.rls_p0 = num(jl, "p0", ac.rls_p0, "learner");
    if (ac.forgetting <= 0.0 || ac.forgetting > 1.0)
      throw ConfigError("learner.forgetting: expected a value in (0, 1]");
  }
  if (root.contains("pti")) {
    const json& jpti = root["pti"];
    check_keys(jpti, {"enabled", "amplitude", "base_period", "harmonics_per_surface"},
               "pti");
    ac.pti.enabled = flag(jpti, "enabled", ac.pti.enabled, "pti");
    ac.pti.amplitude = num(jpti, "amplitude", ac.pti.amplitude, "pti");
    ac.pti.base_period = num(jpti, "base_period", ac.pti.base_period, "pti");
    ac.pti.harmonics_per_surface =
        static_cast<int>(num(jpti, "harmonics_per_surface", ac.pti.harmonics_per_surface, "pti"));
    if (ac.pti.base_period <= 0.0) throw ConfigError("pti.base_period: must be positive");
  }
  if (root.contains("destabilize")) {
    const json& jd = root["destabilize"];
    check_keys(jd, {"axis", "static_margin_target", "clp_target"}, "destabilize");
    const std::string axis = jd.value("axis", "pitch");
    if (axis == "pitch") ac.destab = l2f::DestabAxis::kPitch;
    else if (axis == "roll") ac.destab = l2f::DestabAxis::kRoll;
    else throw ConfigError("destabilize.axis: expected 'pitch' or 'roll'");
    ac.static_margin_target = num(jd, "static_margin_target", ac.static_margin_target,
                                  "destabilize");
    ac.clp_target = num(jd, "clp_target", ac.clp_target, "destabilize");
  }

  const json jc = root.contains("controller") ? root["controller"] : json::object();
  check_keys(jc, {"enabled", "Ts", "filter", "reinit_policy", "reinit_noise_sigma"},
             "controller");
  ac.adaptive_enabled = flag(jc, "enabled", true, "controller");
  ac.l1.Ts = num(jc, "Ts", 0.005, "controller");
  ac.l1.filter = jc.contains("filter") ? filter_of(jc["filter"], 3, "controller.filter")
                                       : ctrl::FilterRealization::constant_gain(20.0, 3);
  ac.reinit_policy = jc.contains("reinit_policy") ? policy_of(jc, "controller")
                                                  : ctrl::ReinitPolicy::kNone;
  ac.l1.reinit_noise_sigma = num(jc, "reinit_noise_sigma", 0.0, "controller");

  if (root.contains("commands")) {
    const json& jcmd = root["commands"];
    check_keys(jcmd, {"use_outer_loop", "theta_cmd", "phi_cmd", "beta_cmd", "chi_cmd",
                      "gamma_cmd"}, "commands");
    ac.use_outer_loop = flag(jcmd, "use_outer_loop", false, "commands");
    auto scalar_profile = [&](const char* key) {
      return jcmd.contains(key) ? profile_of(jcmd[key], 1, std::string("commands.") + key)
                                : zero_profile(1);
    };
    ac.theta_cmd = scalar_profile("theta_cmd");
    ac.phi_cmd = scalar_profile("phi_cmd");
    ac.beta_cmd = scalar_profile("beta_cmd");
    ac.chi_cmd = scalar_profile("chi_cmd");
    ac.gamma_cmd = scalar_profile("gamma_cmd");
  } else {
    ac.theta_cmd = zero_profile(1);
    ac.phi_cmd = zero_profile(1);
    ac.beta_cmd = zero_profile(1);
    ac.chi_cmd = zero_profile(1);
    ac.gamma_cmd = zero_profile(1);
  }

  ac.sched.h = 0.001;
  parse_schedule(root, ac.sched);
}

}  // namespace

Scenario parse(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"plant", "aircraft", "uncertainty", "switching", "controller",
                    "commands", "ndi", "learner", "pti", "destabilize", "schedule",
                    "certificates", "outputs", "seed", "description"}, "config");
  Scenario sc;
  sc.raw = root;
  sc.hash = sim::fnv1a_hex(text);
  parse_certificates(root, sc);

  const bool has_plant = root.contains("plant");
  const bool has_aircraft = root.contains("aircraft");
  if (has_plant == has_aircraft)
    throw ConfigError("config: exactly one of 'plant' or 'aircraft' is required");
  sc.is_aircraft = has_aircraft;
  const std::uint64_t seed =
      root.contains("seed") ? root["seed"].get<std::uint64_t>() : 0;
  if (has_plant) {
    if (!root.contains("uncertainty"))
      throw ConfigError("config: linear scenarios require an 'uncertainty' section");
    sc.linear.seed = seed;
    parse_linear(root, sc);
  } else {
    for (const char* key : {"uncertainty", "switching"})
      if (root.contains(key))
        throw ConfigError(std::string("config: '") + key +
                          "' applies to linear scenarios only");
    sc.aircraft.seed = seed;
    parse_aircraft(root, sc);
  }
  return sc;
}

Scenario load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

sim::LinearScenario rate_loop_scenario(const Scenario& sc) {
  if (!sc.is_aircraft)
    throw ConfigError("rate_loop_scenario: aircraft scenario required");
  const auto& ac = sc.aircraft;
  const double qb = ac.params.qbar(ac.V_cmd);

  // Effective truth coefficients include the hidden destabilization channel.
  l2f::AeroCoefficients eff = ac.params.aero;
  if (ac.destab == l2f::DestabAxis::kPitch)
    eff.Cmalpha = -ac.static_margin_target * eff.CLalpha;
  if (ac.destab == l2f::DestabAxis::kRoll) eff.Clp = ac.clp_target;

  l2f::AeroCoefficients guess = ac.params.aero;
  const double s = ac.initial_model_scale;
  guess.Clda *= s;
  guess.Cmalpha *= s;
  guess.Cnbeta *= s;

  sim::LinearScenario lin;
  for (const auto& coeffs : {guess, eff}) {
    const auto g = l2f::gains_from_model(coeffs, qb, ac.params, ac.zeta,
                                         ac.omega_n_floor, ac.K_chi);
    model::ModeDefinition md;
    md.A = (-g.K_omega).asDiagonal().toDenseMatrix();
    md.B = la::Mat::Identity(3, 3);
    md.C = la::Mat::Identity(3, 3);
    md.k = g.K_omega.asDiagonal().toDenseMatrix();
    lin.modes.modes.push_back(std::move(md));
  }

  const double tb = sc.rate_theta_bound;
  lin.sets.theta_vertices = {tb * la::Mat::Identity(3, 3), -tb * la::Mat::Identity(3, 3)};
  const double db = sc.rate_d_bound;
  for (int mask = 0; mask < 8; ++mask) {
    la::Vec d(3);
    for (int i = 0; i < 3; ++i) d(i) = (mask >> i) & 1 ? db : -db;
    lin.sets.d_vertices.push_back(d);
  }
  const double ws = sc.rate_omega_spread;
  lin.sets.omega_vertices = {(1.0 - ws) * la::Mat::Identity(3, 3),
                             (1.0 + ws) * la::Mat::Identity(3, 3)};

  lin.uncertainty.theta = model::PolytopeTrajectory::constant(la::Mat::Zero(3, 3));
  lin.uncertainty.d = model::PolytopeTrajectory::constant(la::Mat::Zero(3, 1));
  lin.uncertainty.omega_per_mode.assign(2, la::Mat::Identity(3, 3));

  lin.signal.initial_mode = 0;
  lin.signal.events.push_back({2.0, 1});
  lin.l1 = ac.l1;
  lin.x0 = la::Vec::Zero(3);
  lin.rcmd.kind = sim::CommandProfile::Kind::kSquare;
  lin.rcmd.amplitude = la::Vec::Constant(3, sc.rate_r_bound);
  lin.rcmd.period = 4.0;
  lin.sched = ac.sched;
  lin.sched.horizon = std::max(lin.sched.horizon, 10.0);
  lin.seed = ac.seed;
  lin.strict_norm_bounds = sc.cert_opts.strict_norm_bounds;
  return lin;
}

}  // namespace l1ac::config
