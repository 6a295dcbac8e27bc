#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "l1ac/controller.hpp"
#include "l1ac/model.hpp"
#include "l1ac/refsys.hpp"
#include "l1ac/trace.hpp"

// Deterministic fixed-step co-simulation of plant, L1 controller, reference
// and ideal systems on one clock. Adaptation, switching and model publishes
// land exactly on integration grid points (enforced by Schedule::validate).

namespace l1ac::sim {

using la::Mat;
using la::Vec;

/// Piecewise reference command r(t), m-dimensional.
struct CommandProfile {
  enum class Kind { kConstant, kStep, kSquare, kSine, kDoublet };
  Kind kind = Kind::kConstant;
  Vec amplitude;       // m
  double t_start = 0.0;
  double period = 4.0;   // square/sine
  double width = 1.0;    // doublet half-width
  Vec eval(double t) const;
};

struct LinearScenario {
  model::ModeSet modes;
  model::UncertaintySets sets;
  model::SwitchingSignal signal;
  model::UncertaintyTrajectory uncertainty;
  ctrl::L1Config l1;
  CommandProfile rcmd;
  Vec x0;
  Schedule sched;
  std::uint64_t seed = 0;
  bool strict_norm_bounds = false;
  double divergence_limit = 1e6;

  // Diagnostics for the annihilation check: co-integrate the zeta1/zeta2
  // decomposition of the prediction error and record zeta1 at sample points.
  bool diagnostics = false;

  // Optional fault injection for the re-initialization transient study:
  // at the switch with this index, set xhat = x + error_norm * unit vector.
  std::optional<std::pair<int, double>> inject_reinit_error;
};

struct RunOptions {
  bool with_reference = true;
  bool with_ideal = true;
};

/// Full co-simulation; records states, inputs, estimates, event markers and
/// running sups ("xtilde", "e", "eu", "x", "u", "xref", "uref",
/// "zeta1_at_samples", "xtilde_at_samples", "reinit_error").
Trace run_comparison(const LinearScenario& sc, const RunOptions& opt = {});

/// Plant + controller only (reference/ideal columns omitted).
Trace run_scenario(const LinearScenario& sc);

struct SweepResult {
  std::vector<std::map<std::string, double>> per_run_sups;
  std::map<std::string, double> worst;
};

/// Monte Carlo over uncertainty realizations: theta/d trajectories between
/// random hull points, omega at random hull points, all derived
/// deterministically from the master seed. Runs fan out across threads; the
/// aggregation is by run index, so results are seed-deterministic.
SweepResult monte_carlo_sweep(const LinearScenario& sc, int n_runs,
                              std::uint64_t seed, int n_threads = 0);

/// Deterministic per-run seed derivation (splitmix64 stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Draw a uniformly weighted random point of the convex hull of vertices.
Mat random_hull_point(const std::vector<Mat>& vertices, std::uint64_t& state);

/// Randomized copy of the scenario's uncertainty realization (used by the
/// sweep; exposed for tests).
model::UncertaintyTrajectory randomize_uncertainty(const model::UncertaintySets& sets,
                                                   std::size_t n_modes,
                                                   std::uint64_t seed);

}  // namespace l1ac::sim
