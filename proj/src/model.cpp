#include "l1ac/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace l1ac::model {

namespace {

Mat mean_of(const std::vector<Mat>& vs) {
  Mat acc = Mat::Zero(vs.front().rows(), vs.front().cols());
  for (const auto& v : vs) acc += v;
  return acc / static_cast<double>(vs.size());
}

// splitmix64, used to derive deterministic per-trajectory phases.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

}  // namespace

Mat UncertaintySets::theta_centroid() const { return mean_of(theta_vertices); }
Mat UncertaintySets::omega_centroid() const { return mean_of(omega_vertices); }
Vec UncertaintySets::d_centroid() const {
  Vec acc = Vec::Zero(d_vertices.front().size());
  for (const auto& v : d_vertices) acc += v;
  return acc / static_cast<double>(d_vertices.size());
}

int SwitchingSignal::mode_at(double t) const {
  int m = initial_mode;
  for (const auto& ev : events) {
    if (ev.t <= t) m = ev.mode;
    else break;
  }
  return m;
}

PolytopeTrajectory PolytopeTrajectory::constant(const Mat& value) {
  PolytopeTrajectory tr;
  tr.family = Family::kConstant;
  tr.p0 = value;
  tr.p1 = value;
  return tr;
}

Mat PolytopeTrajectory::eval(double t) const {
  switch (family) {
    case Family::kConstant:
      return p0;
    case Family::kSinusoid: {
      const double w = 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * freq_hz * t + phase));
      return p0 + w * (p1 - p0);
    }
    case Family::kRampHold: {
      double w = (t - t_start) / t_ramp;
      w = std::clamp(w, 0.0, 1.0);
      return p0 + w * (p1 - p0);
    }
    case Family::kFilteredNoise: {
      // Spectrally shaped noise: fixed random sinusoids, analytic in t so the
      // reference system sees identical inputs at RK4 stage times. The mixing
      // weight is clipped to [0,1], which clips the value to the segment.
      std::uint64_t s = seed ^ 0x5851f42d4c957f2dULL;
      double raw = 0.0;
      for (int k = 0; k < noise_terms; ++k) {
        const double f = noise_bandwidth_hz * (k + 1) / noise_terms;
        const double ph = 2.0 * std::numbers::pi * unit_from_bits(splitmix64(s));
        raw += std::sin(2.0 * std::numbers::pi * f * t + ph);
      }
      raw /= std::sqrt(static_cast<double>(noise_terms));
      const double w = std::clamp(0.5 + 0.5 * raw, 0.0, 1.0);
      return p0 + w * (p1 - p0);
    }
  }
  return p0;
}

Vec plant_deriv(const ModeDefinition& mode, const Vec& x, const Vec& u,
                const Mat& theta, const Vec& d, const Mat& omega) {
  const Eigen::Index n = mode.n(), m = mode.m();
  if (x.size() != n || u.size() != m || theta.rows() != n || theta.cols() != m ||
      d.size() != m || omega.rows() != m || omega.cols() != m)
    throw std::invalid_argument("plant_deriv: dimension mismatch");
  return mode.A * x + mode.B * (omega * u + theta.transpose() * x + d);
}

UncertaintyBounds uncertainty_bounds(const UncertaintySets& sets) {
  if (sets.theta_vertices.empty() || sets.d_vertices.empty() || sets.omega_vertices.empty())
    throw std::invalid_argument("uncertainty_bounds: empty vertex list");
  UncertaintyBounds b;
  for (const auto& th : sets.theta_vertices)
    b.D_theta = std::max(b.D_theta, th.jacobiSvd().singularValues()(0));
  for (const auto& d : sets.d_vertices) b.D_d = std::max(b.D_d, d.norm());
  for (const auto& w : sets.omega_vertices) {
    const Mat diff = w - Mat::Identity(w.rows(), w.cols());
    b.D_omega = std::max(b.D_omega, std::abs(diff.trace()));
    b.D_omega_norm = std::max(b.D_omega_norm, diff.jacobiSvd().singularValues()(0));
  }
  return b;
}

double polytope_distance(const std::vector<Mat>& vertices, const Mat& point,
                         int max_iters) {
  const Eigen::Index dim = point.size();
  const std::size_t k = vertices.size();
  Mat V(dim, static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j)
    V.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vec>(vertices[j].data(), dim);
  const Vec p = Eigen::Map<const Vec>(point.data(), dim);

  Vec lambda = Vec::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
  Vec x = V * lambda;
  for (int it = 0; it < max_iters; ++it) {
    const Vec grad = V.transpose() * (x - p);
    Eigen::Index best;
    grad.minCoeff(&best);
    const Vec dir = V.col(best) - x;
    const double denom = dir.squaredNorm();
    if (denom < 1e-30) break;
    double step = -dir.dot(x - p) / denom;
    step = std::clamp(step, 0.0, 1.0);
    x += step * dir;
    if (step * std::sqrt(denom) < 1e-14) break;
  }
  return (x - p).norm();
}

namespace {

bool strictly_diag_dominant(const Mat& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (j != i) off += std::abs(w(i, j));
    if (std::abs(w(i, i)) <= off) return false;
  }
  return true;
}

bool multiple_of(double t, double Ts, double tol = 1e-9) {
  const double r = std::remainder(t, Ts);
  return std::abs(r) <= tol * std::max(1.0, std::abs(t));
}

}  // namespace

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  if (ok()) {
    os << "ok";
  } else {
    for (const auto& v : violations) os << v.what << "\n";
  }
  return os.str();
}

ValidationReport validate_scenario(const ModeSet& modes, const UncertaintySets& sets,
                                   const SwitchingSignal& signal, double Ts,
                                   double tau_d) {
  ValidationReport rep;
  auto add = [&rep](std::string s) { rep.violations.push_back({std::move(s)}); };

  if (modes.modes.empty()) {
    add("mode set is empty");
    return rep;
  }
  const Eigen::Index n = modes.n(), m = modes.m();
  for (std::size_t i = 0; i < modes.count(); ++i) {
    const auto& md = modes[i];
    std::ostringstream tag;
    tag << "mode " << i << ": ";
    if (md.A.rows() != n || md.A.cols() != n || md.B.rows() != n || md.B.cols() != m ||
        md.C.rows() != m || md.C.cols() != n || md.k.rows() != m || md.k.cols() != m) {
      add(tag.str() + "inconsistent dimensions");
      continue;
    }
    if (!md.A.allFinite() || !md.B.allFinite() || !md.C.allFinite() || !md.k.allFinite())
      add(tag.str() + "non-finite entries");
    Eigen::JacobiSVD<Mat> svd(md.B);
    const auto& sv = svd.singularValues();
    const double thresh = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < sv.size(); ++j)
      if (sv(j) > thresh) ++rank;
    if (rank < m) add(tag.str() + "B not full column rank (Assumption 1)");
  }

  for (const auto& th : sets.theta_vertices)
    if (th.rows() != n || th.cols() != m) add("theta vertex has wrong dimensions");
  for (const auto& d : sets.d_vertices)
    if (d.size() != m) add("d vertex has wrong dimensions");
  for (const auto& w : sets.omega_vertices) {
    if (w.rows() != m || w.cols() != m) add("omega vertex has wrong dimensions");
    else if (!strictly_diag_dominant(w))
      add("omega vertex not strictly diagonally dominant (Assumption 1)");
  }

  const double memb_tol = 1e-7;
  if (!sets.theta_vertices.empty() &&
      polytope_distance(sets.theta_vertices, Mat::Zero(n, m)) > memb_tol)
    add("0 not contained in Theta");
  if (!sets.d_vertices.empty()) {
    std::vector<Mat> dm(sets.d_vertices.begin(), sets.d_vertices.end());
    if (polytope_distance(dm, Mat::Zero(m, 1)) > memb_tol)
      add("0 not contained in Delta");
  }
  if (!sets.omega_vertices.empty() &&
      polytope_distance(sets.omega_vertices, Mat::Identity(m, m)) > memb_tol)
    add("identity not contained in Omega");

  if (Ts <= 0.0) add("Ts must be positive");
  double prev_t = 0.0;
  for (const auto& ev : signal.events) {
    std::ostringstream tag;
    tag << "switch at t=" << ev.t << ": ";
    if (ev.t <= prev_t) add(tag.str() + "times not strictly increasing");
    if (ev.mode < 0 || ev.mode >= static_cast<int>(modes.count()))
      add(tag.str() + "mode index out of range");
    if (Ts > 0.0 && !multiple_of(ev.t, Ts))
      add(tag.str() + "not a multiple of Ts (Assumption 3)");
    if (tau_d > 0.0 && ev.t - prev_t < tau_d - 1e-12) {
      std::ostringstream os;
      os << tag.str() << "dwell gap " << (ev.t - prev_t) << " below tau_d=" << tau_d;
      add(os.str());
    }
    prev_t = ev.t;
  }
  return rep;
}

bool trajectory_in_polytope(const PolytopeTrajectory& traj,
                            const std::vector<Mat>& vertices, double horizon,
                            double tol) {
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon * 100.0)));
  for (int i = 0; i <= steps; ++i) {
    const double t = horizon * i / steps;
    if (polytope_distance(vertices, traj.eval(t)) > tol) return false;
  }
  return true;
}

}  // namespace l1ac::model
