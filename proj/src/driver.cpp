#include "l1ac/driver.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "l1ac/svg.hpp"

namespace l1ac::driver {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json mat_json(const la::Mat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

fs::path ensure_out_dir(const CommonOptions& opts) {
  const fs::path dir = opts.out_dir.value_or("out");
  fs::create_directories(dir);
  return dir;
}

config::Scenario load_with_overrides(const std::string& path, const CommonOptions& opts) {
  config::Scenario sc = config::load(path);
  if (opts.seed) {
    sc.linear.seed = *opts.seed;
    sc.aircraft.seed = *opts.seed;
  }
  if (opts.strict_norm_bounds) {
    sc.cert_opts.strict_norm_bounds = true;
    sc.linear.strict_norm_bounds = true;
  }
  return sc;
}

int config_fail(const std::exception& e) {
  std::cerr << "config error: " << e.what() << "\n";
  return 1;
}

void stamp(sim::Trace& tr, const config::Scenario& sc) {
  tr.config_hash = sc.hash;
  tr.tool_version = kVersion;
}

json summary_json(const config::Scenario& sc, const sim::Trace& tr,
                  std::uint64_t seed, int exit_code) {
  json s;
  s["tool_version"] = kVersion;
  s["config_hash"] = sc.hash;
  s["seed"] = seed;
  s["aborted"] = tr.aborted;
  if (tr.aborted) {
    s["abort_reason"] = tr.abort_reason;
    s["abort_time"] = tr.abort_time;
  }
  s["sups"] = sups_to_json(tr);
  s["rows"] = tr.rows.size();
  if (!tr.warnings.empty()) s["warnings"] = tr.warnings;
  s["exit_code"] = exit_code;
  return s;
}

void emit_plots(const config::Scenario& sc, const sim::Trace& tr, const fs::path& dir) {
  using svg::Series;
  if (sc.is_aircraft) {
    svg::plot_columns(tr, {{"theta", "theta"}, {"theta_cmd", "theta_cmd"}},
                      "Pitch angle vs command", (dir / "plot_pitch.svg").string());
    svg::plot_columns(tr, {{"adaptive input (pitch)", "u_ad_1"}, {"theta", "theta"}},
                      "Adaptive input vs pitch angle", (dir / "plot_adaptive.svg").string());
    svg::plot_columns(tr, {{"phi", "phi"}, {"phi_cmd", "phi_cmd"}},
                      "Roll angle vs command", (dir / "plot_roll.svg").string());
  } else {
    const Eigen::Index n = sc.linear.modes.n();
    std::vector<Series> st;
    for (Eigen::Index i = 0; i < n; ++i) {
      st.push_back({"x_" + std::to_string(i), "x_" + std::to_string(i)});
      if (std::find(tr.columns.begin(), tr.columns.end(), "xref_" + std::to_string(i)) !=
          tr.columns.end())
        st.push_back({"xref_" + std::to_string(i), "xref_" + std::to_string(i)});
    }
    svg::plot_columns(tr, st, "States vs reference system", (dir / "plot_states.svg").string());
    svg::plot_columns(tr, {{"u_0", "u_0"}, {"eta1_0", "eta1_0"}},
                      "Control input and matched estimate", (dir / "plot_input.svg").string());
    svg::plot_columns(tr, {{"prediction error", "xtilde_norm"}},
                      "Prediction error norm", (dir / "plot_xtilde.svg").string());
  }
}

}  // namespace

json sups_to_json(const sim::Trace& tr) {
  json s;
  for (const auto& [k, v] : tr.sups) s[k] = v;
  return s;
}

json certificate_to_json(const cert::CertificateReport& rep) {
  json j;
  j["feasible"] = rep.feasible;
  if (!rep.feasible) j["infeasible_reason"] = rep.infeasible_reason;
  j["lambda"] = rep.lambda;
  j["mu"] = rep.mu;
  j["lambda_ideal"] = rep.lambda_ideal;
  j["mu_ideal"] = rep.mu_ideal;
  j["a"] = rep.a;
  j["a_star"] = rep.a_star;
  j["tau_d"] = rep.tau_d;
  j["Ts"] = rep.Ts;
  j["alpha_bar_1"] = rep.alphas.a1;
  j["alpha_bar_2"] = rep.alphas.a2;
  j["alpha_bar_3"] = rep.alphas.a3;
  j["D_theta"] = rep.bounds.D_theta;
  j["D_d"] = rep.bounds.D_d;
  j["D_omega"] = rep.bounds.D_omega;
  j["D_omega_norm"] = rep.bounds.D_omega_norm;
  j["strict_norm_bounds"] = rep.strict_norm_bounds;
  j["lambda_Q"] = rep.lambda_Q;
  j["mu_Q"] = rep.mu_Q;
  j["nu"] = rep.nu;
  j["nu_used"] = rep.nu_used;
  j["g"] = rep.g;
  j["kappa_gamma"] = rep.kappa_gamma;
  j["kappa_validated"] = rep.kappa_validated;
  j["kappa_used"] = rep.kappa_used;
  j["kappa_discrepancy"] = rep.kappa_discrepancy;
  j["Lambda_Fbar"] = rep.Lambda_Fbar;
  j["mu_singularity_handled"] = rep.mu_singularity_handled;
  j["rho_r"] = rep.rho_r;
  j["rho_ur"] = rep.rho_ur;
  j["rho_r_empirical"] = rep.rho_r_empirical;
  j["rho_ur_empirical"] = rep.rho_ur_empirical;
  j["rho_r_analytic"] = rep.rho_r_analytic;
  j["rho_ur_analytic"] = rep.rho_ur_analytic;
  j["rho_analytic_available"] = rep.rho_analytic_available;
  j["delta0"] = rep.delta0;
  j["delta1"] = rep.delta1;
  j["delta2"] = rep.delta2;
  j["delta0_min"] = rep.delta0_min;
  j["rho"] = rep.rho;
  j["rho_u"] = rep.rho_u;
  j["eq17_satisfied"] = rep.eq17_satisfied;
  j["eq17_lhs"] = rep.eq17_lhs;
  j["max_Ts"] = rep.max_Ts;
  j["sample_bound"] = rep.sample_bound;
  j["paper_model_cadence_compatible"] = rep.tau_d <= 0.2 + 1e-12;
  json pl = json::array(), pbl = json::array(), ql = json::array(), rl = json::array(),
       sl = json::array();
  for (const auto& P : rep.P_list) pl.push_back(mat_json(P));
  for (const auto& P : rep.Pbar_list) pbl.push_back(mat_json(P));
  for (const auto& s : rep.schur) {
    ql.push_back(mat_json(s.Q));
    rl.push_back(mat_json(s.R));
    sl.push_back(mat_json(s.S));
  }
  j["P_list"] = std::move(pl);
  j["Pbar_list"] = std::move(pbl);
  j["Q_list"] = std::move(ql);
  j["R_list"] = std::move(rl);
  j["S_list"] = std::move(sl);
  return j;
}

json theorem1_to_json(const cert::Theorem1Report& rep) {
  json j;
  j["ts_condition_satisfied"] = rep.ts_condition_satisfied;
  if (!rep.ts_condition_satisfied)
    j["note"] = "Ts condition unsatisfied; bounds not guaranteed";
  j["all_pass"] = rep.all_pass;
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json e;
    e["name"] = c.name;
    e["bound"] = c.bound;
    e["observed"] = c.observed;
    e["margin"] = c.margin;
    e["pass"] = c.pass;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  return j;
}

cert::CertificateReport certify_scenario(const config::Scenario& sc) {
  return sc.is_aircraft ? cert::certify(config::rate_loop_scenario(sc), sc.cert_opts)
                        : cert::certify(sc.linear, sc.cert_opts);
}

int cmd_simulate(const std::string& config_path, const CommonOptions& opts) {
  config::Scenario sc;
  try {
    sc = load_with_overrides(config_path, opts);
  } catch (const std::exception& e) {
    return config_fail(e);
  }
  try {
    const fs::path dir = ensure_out_dir(opts);
    sim::Trace tr;
    std::uint64_t seed = 0;
    if (sc.is_aircraft) {
      seed = sc.aircraft.seed;
      tr = l2f::run_l2f(sc.aircraft);
    } else {
      seed = sc.linear.seed;
      const auto report = model::validate_scenario(sc.linear.modes, sc.linear.sets,
                                                   sc.linear.signal, sc.linear.l1.Ts, 0.0);
      if (!report.ok()) {
        std::cerr << "scenario validation failed:\n" << report.to_string();
        return 1;
      }
      tr = sim::run_scenario(sc.linear);
    }
    stamp(tr, sc);
    const int code = tr.aborted ? 2 : 0;
    tr.write_csv((dir / "trace.csv").string());
    write_file(dir / "summary.json", summary_json(sc, tr, seed, code).dump(2) + "\n");
    if (opts.plot) emit_plots(sc, tr, dir);
    if (tr.aborted)
      std::cerr << "simulation aborted at t=" << tr.abort_time << ": " << tr.abort_reason
                << "\n";
    return code;
  } catch (const config::ConfigError& e) {
    return config_fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_certify(const std::string& config_path, const CommonOptions& opts) {
  config::Scenario sc;
  try {
    sc = load_with_overrides(config_path, opts);
  } catch (const std::exception& e) {
    return config_fail(e);
  }
  try {
    const auto rep = certify_scenario(sc);
    json j = certificate_to_json(rep);
    j["config_hash"] = sc.hash;
    j["tool_version"] = kVersion;
    std::cout << j.dump(2) << "\n";
    if (opts.out_dir) {
      const fs::path dir = ensure_out_dir(opts);
      write_file(dir / "certificate.json", j.dump(2) + "\n");
    }
    if (!rep.feasible) {
      std::cerr << "certificate infeasible: " << rep.infeasible_reason << "\n";
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

int compare_linear(const config::Scenario& sc, const CommonOptions& opts) {
  const auto cert_rep = cert::certify(sc.linear, sc.cert_opts);
  const fs::path dir = ensure_out_dir(opts);
  if (!cert_rep.feasible) {
    std::cerr << "certificate infeasible: " << cert_rep.infeasible_reason << "\n";
    write_file(dir / "report.json", certificate_to_json(cert_rep).dump(2) + "\n");
    return 3;
  }
  auto validation = model::validate_scenario(sc.linear.modes, sc.linear.sets,
                                             sc.linear.signal, sc.linear.l1.Ts,
                                             cert_rep.tau_d);
  sim::Trace tr = sim::run_comparison(sc.linear);
  sim::Trace mut = tr;
  stamp(mut, sc);
  mut.write_csv((dir / "trace.csv").string());
  if (opts.plot) emit_plots(sc, mut, dir);

  const auto t1 = cert::theorem1_report(cert_rep, tr);
  json j;
  j["certificate"] = certificate_to_json(cert_rep);
  j["theorem1"] = theorem1_to_json(t1);
  j["dwell_satisfied"] = validation.ok();
  if (!validation.ok()) j["dwell_violations"] = validation.to_string();
  j["config_hash"] = sc.hash;
  j["tool_version"] = kVersion;
  j["aborted"] = tr.aborted;
  std::cout << j.dump(2) << "\n";
  write_file(dir / "report.json", j.dump(2) + "\n");
  if (tr.aborted) return 2;
  const bool guaranteed = t1.ts_condition_satisfied && validation.ok();
  return (guaranteed && t1.all_pass) ? 0 : 3;
}

int compare_aircraft(const config::Scenario& sc, const CommonOptions& opts) {
  const fs::path dir = ensure_out_dir(opts);
  l2f::L2fScenario base = sc.aircraft;
  base.adaptive_enabled = false;
  base.learning_enabled = false;
  l2f::L2fScenario with_l1 = sc.aircraft;
  with_l1.adaptive_enabled = true;

  sim::Trace tr_base = l2f::run_l2f(base);
  sim::Trace tr_l1 = l2f::run_l2f(with_l1);
  stamp(tr_base, sc);
  stamp(tr_l1, sc);
  tr_base.write_csv((dir / "trace_baseline.csv").string());
  tr_l1.write_csv((dir / "trace_with_l1.csv").string());
  if (opts.plot) emit_plots(sc, tr_l1, dir);

  const double horizon = sc.aircraft.sched.horizon;
  const double w0 = std::min(5.0, horizon);
  json j;
  j["baseline_only"] = {{"theta_excursion_first5", tr_base.max_abs_diff("theta", "theta_cmd", 0.0, w0)},
                        {"aborted", tr_base.aborted},
                        {"abort_time", tr_base.abort_time}};
  int publishes = 0, switches = 0;
  {
    const auto cp = tr_l1.col("publish_event");
    const auto cs = tr_l1.col("switch_event");
    for (const auto& row : tr_l1.rows) {
      publishes += row[cp] > 0.5;
      switches += row[cs] > 0.5;
    }
  }
  j["with_l1"] = {{"theta_excursion_first5", tr_l1.max_abs_diff("theta", "theta_cmd", 0.0, w0)},
                  {"eta1_rms_first5", std::hypot(tr_l1.rms("eta1_0", 0, w0),
                                                 std::hypot(tr_l1.rms("eta1_1", 0, w0),
                                                            tr_l1.rms("eta1_2", 0, w0)))},
                  {"eta1_rms_last5", std::hypot(tr_l1.rms("eta1_0", horizon - w0, horizon),
                                                std::hypot(tr_l1.rms("eta1_1", horizon - w0, horizon),
                                                           tr_l1.rms("eta1_2", horizon - w0, horizon)))},
                  {"publish_events", publishes},
                  {"switch_events", switches},
                  {"aborted", tr_l1.aborted}};
  j["config_hash"] = sc.hash;
  j["tool_version"] = kVersion;
  std::cout << j.dump(2) << "\n";
  write_file(dir / "report.json", j.dump(2) + "\n");
  return tr_l1.aborted ? 2 : 0;
}

}  // namespace

int cmd_compare(const std::string& config_path, const CommonOptions& opts) {
  config::Scenario sc;
  try {
    sc = load_with_overrides(config_path, opts);
  } catch (const std::exception& e) {
    return config_fail(e);
  }
  try {
    return sc.is_aircraft ? compare_aircraft(sc, opts) : compare_linear(sc, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const std::string& config_path, int n_runs, const CommonOptions& opts) {
  config::Scenario sc;
  try {
    sc = load_with_overrides(config_path, opts);
    if (sc.is_aircraft)
      throw config::ConfigError("sweep applies to linear scenarios");
  } catch (const std::exception& e) {
    return config_fail(e);
  }
  try {
    const auto cert_rep = cert::certify(sc.linear, sc.cert_opts);
    const auto result = sim::monte_carlo_sweep(sc.linear, n_runs, sc.linear.seed);
    json j;
    j["n_runs"] = n_runs;
    j["seed"] = sc.linear.seed;
    j["worst"] = json::object();
    for (const auto& [k, v] : result.worst) j["worst"][k] = v;
    // distributional sups: median and 90th percentile per bound quantity
    j["percentiles"] = json::object();
    for (const auto& [k, _] : result.worst) {
      std::vector<double> vals;
      vals.reserve(result.per_run_sups.size());
      for (const auto& sups : result.per_run_sups) vals.push_back(sups.at(k));
      std::sort(vals.begin(), vals.end());
      auto at_frac = [&vals](double f) {
        return vals[std::min(vals.size() - 1,
                             static_cast<std::size_t>(f * (vals.size() - 1) + 0.5))];
      };
      j["percentiles"][k] = {{"p50", at_frac(0.5)}, {"p90", at_frac(0.9)}};
    }

    int violations = 0;
    if (cert_rep.feasible) {
      for (const auto& sups : result.per_run_sups) {
        const bool bad = sups.at("xtilde") >= cert_rep.delta0 ||
                         sups.at("e") > cert_rep.delta1 ||
                         sups.at("eu") > cert_rep.delta2 ||
                         sups.at("x") > cert_rep.rho || sups.at("u") > cert_rep.rho_u;
        violations += bad;
      }
      j["bounds"] = {{"delta0", cert_rep.delta0},
                     {"delta1", cert_rep.delta1},
                     {"delta2", cert_rep.delta2},
                     {"rho", cert_rep.rho},
                     {"rho_u", cert_rep.rho_u}};
      j["violations"] = violations;
    } else {
      j["certificate_infeasible"] = cert_rep.infeasible_reason;
    }
    j["config_hash"] = sc.hash;
    j["tool_version"] = kVersion;
    std::cout << j.dump(2) << "\n";
    if (opts.out_dir) {
      const fs::path dir = ensure_out_dir(opts);
      write_file(dir / "sweep.json", j.dump(2) + "\n");
    }
    return (cert_rep.feasible && violations > 0) ? 3 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_bounds(const std::string& config_path, const std::string& ts_spec,
               const CommonOptions& opts) {
  config::Scenario sc;
  try {
    sc = load_with_overrides(config_path, opts);
  } catch (const std::exception& e) {
    return config_fail(e);
  }
  try {
    const sim::LinearScenario lin =
        sc.is_aircraft ? config::rate_loop_scenario(sc) : sc.linear;
    const auto rep = cert::certify(lin, sc.cert_opts);
    if (!rep.feasible) {
      std::cerr << "certificate infeasible: " << rep.infeasible_reason << "\n";
      return 3;
    }
    std::vector<double> ts_values;
    if (ts_spec.empty()) {
      ts_values.push_back(lin.l1.Ts);
    } else {
      double lo, hi;
      int count;
      if (std::sscanf(ts_spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 ||
          lo <= 0.0 || hi < lo || count < 1)
        throw config::ConfigError("--ts-sweep expects lo:hi:n with 0 < lo <= hi");
      for (int i = 0; i < count; ++i)
        ts_values.push_back(count == 1 ? lo
                                       : lo * std::pow(hi / lo, double(i) / (count - 1)));
    }

    // Ts-independent pieces of the delta chain.
    const double c1 = rep.delta1_factor;
    const double dfb = rep.delta0 > 0.0
                           ? (rep.delta2 - rep.delta2_factor * rep.delta1) / rep.delta0
                           : 0.0;
    const double c2 = rep.delta2_factor * c1 + dfb;
    const double Dw = rep.strict_norm_bounds ? rep.bounds.D_omega_norm : rep.bounds.D_omega;

    json table = json::array();
    std::printf("%12s %14s %12s %12s %12s\n", "Ts", "eq17_lhs", "delta0", "delta1",
                "delta2");
    for (double ts : ts_values) {
      const auto ab = cert::alpha_bars(lin.modes, ts, sc.cert_opts.alpha_steps);
      const double K = (ab.a1 + ab.a2 + 1.0) * ab.a3;
      const double s = K * (Dw * c2 + rep.bounds.D_theta * c1);
      json row;
      row["Ts"] = ts;
      if (s < 1.0) {
        const double d0min =
            K * (Dw * rep.rho_ur + rep.bounds.D_theta * rep.rho_r + rep.bounds.D_d) /
            (1.0 - s);
        const double d0 = sc.cert_opts.delta0_target > 0.0 ? sc.cert_opts.delta0_target
                                                           : 1.05 * d0min;
        const double d1 = c1 * d0, d2 = c2 * d0;
        const double lhs = K * (Dw * (rep.rho_ur + d2) + rep.bounds.D_theta * (rep.rho_r + d1) +
                                rep.bounds.D_d);
        row["eq17_lhs"] = lhs;
        row["delta0"] = d0;
        row["delta1"] = d1;
        row["delta2"] = d2;
        row["satisfied"] = lhs < d0;
        std::printf("%12.6g %14.6g %12.6g %12.6g %12.6g\n", ts, lhs, d0, d1, d2);
      } else {
        row["satisfied"] = false;
        row["note"] = "no feasible delta0 at this Ts";
        std::printf("%12.6g %14s\n", ts, "infeasible");
      }
      table.push_back(std::move(row));
    }
    json j;
    j["table"] = std::move(table);
    j["config_hash"] = sc.hash;
    j["tool_version"] = kVersion;
    if (opts.out_dir) {
      const fs::path dir = ensure_out_dir(opts);
      write_file(dir / "bounds.json", j.dump(2) + "\n");
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

nlohmann::json run_simulate_json(const config::Scenario& sc, sim::Trace& out_trace) {
  if (sc.is_aircraft) {
    out_trace = l2f::run_l2f(sc.aircraft);
  } else {
    out_trace = sim::run_comparison(sc.linear);
  }
  out_trace.config_hash = sc.hash;
  out_trace.tool_version = kVersion;
  return summary_json(sc, out_trace, sc.is_aircraft ? sc.aircraft.seed : sc.linear.seed,
                      out_trace.aborted ? 2 : 0);
}

}  // namespace l1ac::driver
