#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l1ac/linalg.hpp"

// Switched uncertain plant: mode family {(A_i, B_i, C_i, k_i)}, vertex
// polytopes for (theta, d, omega), switching signals and the true-uncertainty
// trajectories driving a simulation. Immutable after construction.

namespace l1ac::model {

using la::Mat;
using la::Vec;

struct ModeDefinition {
  Mat A;  // n x n
  Mat B;  // n x m, full column rank
  Mat C;  // m x n
  Mat k;  // m x m feedforward gain

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
};

struct ModeSet {
  std::vector<ModeDefinition> modes;

  Eigen::Index n() const { return modes.front().A.rows(); }
  Eigen::Index m() const { return modes.front().B.cols(); }
  std::size_t count() const { return modes.size(); }
  const ModeDefinition& operator[](std::size_t i) const { return modes[i]; }
};

struct UncertaintySets {
  std::vector<Mat> theta_vertices;  // n x m each
  std::vector<Vec> d_vertices;      // m each
  std::vector<Mat> omega_vertices;  // m x m each

  Mat theta_centroid() const;
  Vec d_centroid() const;
  Mat omega_centroid() const;
};

struct UncertaintyBounds {
  double D_theta = 0.0;        // max ||theta|| over vertices
  double D_d = 0.0;            // max ||d|| over vertices
  double D_omega = 0.0;        // max |trace(omega - I)| over vertices
  double D_omega_norm = 0.0;   // max ||I - omega|| over vertices (strict variant)

  // Bracket value D_omega*rho_u + D_theta*rho + D_d, with the omega metric
  // selected by the strict_norm_bounds flag.
  double bracket(double rho_u, double rho, bool strict_norm) const {
    const double dw = strict_norm ? D_omega_norm : D_omega;
    return dw * rho_u + D_theta * rho + D_d;
  }
};

struct SwitchEvent {
  double t = 0.0;
  int mode = 0;
};

struct SwitchingSignal {
  int initial_mode = 0;
  std::vector<SwitchEvent> events;  // strictly increasing times, t > 0

  int mode_at(double t) const;
};

/// Parameterized trajectory inside a polytope given by vertices. All families
/// move along the segment [p0, p1] (both validated against the polytope), so
/// membership is guaranteed by construction; filtered noise additionally
/// clips its mixing weight to [0, 1].
struct PolytopeTrajectory {
  enum class Family { kConstant, kSinusoid, kRampHold, kFilteredNoise };

  Family family = Family::kConstant;
  Mat p0;            // value at weight 0 (constant family uses p0 only)
  Mat p1;            // value at weight 1
  double freq_hz = 0.5;
  double phase = 0.0;
  double t_start = 0.0;   // ramp start
  double t_ramp = 1.0;    // ramp duration
  // filtered noise: sum of sinusoids with seeded random phases, clipped
  std::uint64_t seed = 0;
  int noise_terms = 8;
  double noise_bandwidth_hz = 2.0;

  Mat eval(double t) const;

  static PolytopeTrajectory constant(const Mat& value);
};

struct UncertaintyTrajectory {
  PolytopeTrajectory theta;          // values are n x m
  PolytopeTrajectory d;              // values are m x 1
  std::vector<Mat> omega_per_mode;   // constant m x m per mode

  Mat theta_at(double t) const { return theta.eval(t); }
  Vec d_at(double t) const { return Vec(d.eval(t)); }
  const Mat& omega_for(int mode) const { return omega_per_mode.at(static_cast<std::size_t>(mode)); }
};

/// Plant derivative, Ax + B(omega u + theta^T x + d).
Vec plant_deriv(const ModeDefinition& mode, const Vec& x, const Vec& u,
                const Mat& theta, const Vec& d, const Mat& omega);

UncertaintyBounds uncertainty_bounds(const UncertaintySets& sets);

/// Euclidean distance from a point to the convex hull of the vertex list
/// (vertices and point flattened to vectors). Frank-Wolfe on the simplex;
/// adequate for the small vertex counts used here.
double polytope_distance(const std::vector<Mat>& vertices, const Mat& point,
                         int max_iters = 4000);

struct Violation {
  std::string what;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Structural checks: rank of B, uniform dimensions, switch times on the Ts
/// grid, dwell gaps, omega diagonal dominance, 0 in Theta, 0 in Delta,
/// I in Omega. Report-style; never throws.
ValidationReport validate_scenario(const ModeSet& modes, const UncertaintySets& sets,
                                   const SwitchingSignal& signal, double Ts,
                                   double tau_d);

/// Pointwise membership of a trajectory in its polytope on a uniform grid
/// (100 points per second). Validation aid, not a proof.
bool trajectory_in_polytope(const PolytopeTrajectory& traj,
                            const std::vector<Mat>& vertices, double horizon,
                            double tol = 1e-7);

}  // namespace l1ac::model
