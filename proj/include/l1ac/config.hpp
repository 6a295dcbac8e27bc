#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "l1ac/certificates.hpp"
#include "l1ac/l2f_sim.hpp"
#include "l1ac/sim.hpp"

// Scenario configuration: JSON documents with a strict schema (unknown keys
// rejected, dimensions cross-checked before any computation).

namespace l1ac::config {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct Scenario {
  nlohmann::json raw;
  std::string hash;         // FNV-1a of the raw config text
  bool is_aircraft = false;

  sim::LinearScenario linear;
  l2f::L2fScenario aircraft;
  cert::CertificateOptions cert_opts;

  // Rate-loop uncertainty envelope for certifying aircraft scenarios.
  double rate_theta_bound = 1.5;
  double rate_d_bound = 3.0;
  double rate_omega_spread = 0.15;
  double rate_r_bound = 1.5;
};

/// Parse + validate a config document. Throws ConfigError with a
/// human-readable message naming the offending key.
Scenario parse(const std::string& text);

/// Load from disk (the error message names the path).
Scenario load(const std::string& path);

/// Linear-scenario view of an aircraft scenario's rate loop (modes from the
/// initial-guess and effective-truth gain schedules), used by certify.
sim::LinearScenario rate_loop_scenario(const Scenario& sc);

}  // namespace l1ac::config
