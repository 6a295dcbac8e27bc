#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "l1ac/config.hpp"

// Command implementations shared by the CLI and the python bindings.
// Exit codes: 0 clean, 1 config error, 2 envelope abort, 3 certificate
// infeasible.

namespace l1ac::driver {

inline constexpr const char* kVersion = "0.1.0";

struct CommonOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool plot = false;
  bool strict_norm_bounds = false;
};

nlohmann::json certificate_to_json(const cert::CertificateReport& rep);
nlohmann::json theorem1_to_json(const cert::Theorem1Report& rep);
nlohmann::json sups_to_json(const sim::Trace& tr);

/// Run the scenario (plant + controller for linear, the full stack for
/// aircraft), write trace.csv and summary.json under out_dir.
int cmd_simulate(const std::string& config_path, const CommonOptions& opts);

/// Emit the certificate report (stdout + certificate.json when out_dir set).
int cmd_certify(const std::string& config_path, const CommonOptions& opts);

/// Linear: co-simulate with the reference/ideal systems and check the five
/// performance bounds. Aircraft: paired baseline-only / with-adaptation runs.
int cmd_compare(const std::string& config_path, const CommonOptions& opts);

/// Monte Carlo sweep over uncertainty realizations.
int cmd_sweep(const std::string& config_path, int n_runs, const CommonOptions& opts);

/// Sampling-time/bounds table; ts_spec is "lo:hi:n" (log-spaced) or empty
/// for the scenario Ts only.
int cmd_bounds(const std::string& config_path, const std::string& ts_spec,
               const CommonOptions& opts);

// Shared helpers (also used by tests and bindings).
nlohmann::json run_simulate_json(const config::Scenario& sc, sim::Trace& out_trace);
cert::CertificateReport certify_scenario(const config::Scenario& sc);

}  // namespace l1ac::driver
