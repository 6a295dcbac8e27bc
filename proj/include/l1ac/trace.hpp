#pragma once

#include <map>
#include <string>
#include <vector>

namespace l1ac::sim {

/// Uniformly sampled co-simulation record plus running sup norms and abort
/// diagnostics. Columns are fixed per scenario kind and documented in the
/// README; the CSV serialization carries a manifest line with the config
/// hash so outputs are traceable to their inputs.
struct Trace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> sups;
  std::string config_hash;
  std::string tool_version;
  bool aborted = false;
  std::string abort_reason;
  double abort_time = 0.0;
  std::vector<std::string> warnings;

  std::size_t col(const std::string& name) const;
  double value(std::size_t row, const std::string& name) const {
    return rows[row][col(name)];
  }

  /// Max of |column| over rows with t in [t0, t1].
  double max_abs(const std::string& name, double t0, double t1) const;
  /// RMS of a column over rows with t in [t0, t1].
  double rms(const std::string& name, double t0, double t1) const;
  /// Max over rows of |a - b| with t in [t0, t1].
  double max_abs_diff(const std::string& a, const std::string& b, double t0,
                      double t1) const;

  void write_csv(const std::string& path) const;
  std::string csv_string() const;
};

struct Schedule {
  double h = 0.0005;            // integration step
  double Ts = 0.005;            // adaptation period
  double control_rate_hz = 50;  // control tick rate (zoh mode)
  double model_rate_hz = 5;     // learned-model publish cadence
  double horizon = 10.0;
  bool zoh_control = false;
  int record_stride = 1;

  // Integer step counts; valid after validate().
  long long steps_total = 0;
  long long steps_per_sample = 0;
  long long steps_per_control = 0;
  long long steps_per_model = 0;

  /// Enforces the grid alignment invariants (Ts, control and model periods
  /// all integer multiples of h). Throws on violation.
  void validate();
};

/// FNV-1a hash of raw bytes, hex-encoded; used for config hashes and the
/// trace determinism checks.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace l1ac::sim
