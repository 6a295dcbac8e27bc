#include <CLI11.hpp>

#include "l1ac/driver.hpp"

// l1ac: simulate, certify and stress the switched L1 adaptive control
// architecture from scenario configs. Exit codes: 0 clean, 1 config error,
// 2 envelope abort, 3 certificate infeasible / bounds not guaranteed.

int main(int argc, char** argv) {
  CLI::App app{"switched L1 adaptive control toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  l1ac::driver::CommonOptions opts;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool with_out = true) {
    cmd->add_option("config", config_path, "scenario config (JSON)")->required();
    if (with_out) cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_flag("--plot", opts.plot, "emit SVG line charts");
    cmd->add_flag("--strict-norm-bounds", opts.strict_norm_bounds,
                  "use max ||I - omega|| instead of |trace(omega - I)| in bounds");
  };

  auto* sim = app.add_subcommand("simulate", "run a scenario, write trace.csv + summary.json");
  add_common(sim);
  auto* cer = app.add_subcommand("certify", "compute the stability/performance certificate");
  add_common(cer);
  auto* cmp = app.add_subcommand("compare",
                                 "co-simulate against the reference system and check the "
                                 "performance bounds (aircraft: paired baseline/adaptive runs)");
  add_common(cmp);
  auto* swp = app.add_subcommand("sweep", "Monte Carlo sweep over uncertainty realizations");
  int n_runs = 100;
  swp->add_option("--runs", n_runs, "number of runs")->capture_default_str();
  add_common(swp);
  auto* bnd = app.add_subcommand("bounds", "sampling-time / bound tables");
  std::string ts_spec;
  bnd->add_option("--ts-sweep", ts_spec, "Ts sweep as lo:hi:n (log-spaced)");
  add_common(bnd);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) opts.seed = seed;

  if (sim->parsed()) return l1ac::driver::cmd_simulate(config_path, opts);
  if (cer->parsed()) return l1ac::driver::cmd_certify(config_path, opts);
  if (cmp->parsed()) return l1ac::driver::cmd_compare(config_path, opts);
  if (swp->parsed()) return l1ac::driver::cmd_sweep(config_path, n_runs, opts);
  if (bnd->parsed()) return l1ac::driver::cmd_bounds(config_path, ts_spec, opts);
  return 1;
}
