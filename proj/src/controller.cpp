#include "l1ac/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace l1ac::ctrl {

FilterRealization FilterRealization::constant_gain(double k_lpf, Eigen::Index m) {
  FilterRealization f;
  f.A_f = Mat::Zero(0, 0);
  f.B_f = Mat::Zero(0, m);
  f.C_f = Mat::Zero(m, 0);
  f.D_f = k_lpf * Mat::Identity(m, m);
  return f;
}

bool FilterRealization::is_minimal(double tol) const {
  const Eigen::Index nf = n_f(), mm = m();
  if (nf == 0) return true;
  // Kalman rank tests on the controllability/observability matrices.
  Mat ctrb(nf, nf * mm), obsv(nf * mm, nf);
  Mat Ak = Mat::Identity(nf, nf);
  for (Eigen::Index k = 0; k < nf; ++k) {
    ctrb.middleCols(k * mm, mm) = Ak * B_f;
    obsv.middleRows(k * mm, mm) = C_f * Ak;
    Ak = A_f * Ak;
  }
  auto rank_of = [tol](const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol * sv(0)) ++r;
    return r;
  };
  return rank_of(ctrb) == nf && rank_of(obsv) == nf;
}

ModeKit::ModeKit(const ModeDefinition& mode, double Ts) : mode_(mode) {
  const Eigen::Index n = mode.n(), m = mode.m();
  B_perp_ = la::bperp(mode.B);
  Mat Bvee(n, n);
  Bvee.leftCols(m) = mode.B;
  if (n > m) Bvee.rightCols(n - m) = B_perp_;
  lu_Bvee_.compute(Bvee);

  const Mat phi = la::expm(mode.A, -Ts) - Mat::Identity(n, n);
  lu_phi_.compute(phi);
  // Singular values of e^{-A Ts} - I: sigma_min at the floating-point noise
  // floor means A has an eigenvalue at (or numerically at) zero; 1/sigma_min
  // is the error-amplification of the adaptive law.
  Eigen::JacobiSVD<Mat> svd(phi);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  degenerate_ = smin <= 1e4 * std::numeric_limits<double>::epsilon() * std::max(1.0, smax);
  cond_estimate_ = degenerate_ ? std::numeric_limits<double>::infinity() : 1.0 / smin;
}

std::pair<Vec, Vec> ModeKit::adapt_update(const Vec& xtilde) const {
  const Eigen::Index n = mode_.n(), m = mode_.m();
  if (xtilde.size() != n) throw std::invalid_argument("adapt_update: dimension mismatch");
  if (degenerate_)
    throw std::runtime_error(
        "adapt_update: degenerate sampling (e^{-A Ts} - I numerically singular; "
        "A has an eigenvalue at 0 or Ts is too small)");
  const Vec y = lu_phi_.solve(xtilde);
  const Vec w = lu_Bvee_.solve(mode_.A * y);
  return {w.head(m), w.tail(n - m)};
}

Vec predictor_deriv(const ModeKit& kit, const L1State& s, const Vec& u) {
  const auto& mode = kit.mode();
  const Eigen::Index n = mode.n(), m = mode.m();
  if (s.xhat.size() != n || u.size() != m || s.eta1.size() != m ||
      s.eta2.size() != n - m)
    throw std::invalid_argument("predictor_deriv: dimension mismatch");
  Vec dx = mode.A * s.xhat + mode.B * (u + s.eta1);
  if (n > m) dx += kit.B_perp() * s.eta2;
  return dx;
}

ControlDeriv control_deriv(const L1State& s, const FilterRealization& f,
                           const Mat& k_gain, const Vec& r) {
  ControlDeriv out;
  out.u = -s.u_int;
  const Vec mu = out.u + s.eta1 - k_gain * r;
  out.x_f_dot = f.A_f * s.x_f + f.B_f * mu;
  out.u_int_dot = f.C_f * s.x_f + f.D_f * mu;
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double std_normal(std::uint64_t& state) {
  // Box-Muller on splitmix64 output; deterministic across platforms.
  const double u1 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  const double u2 = static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double on_switch(L1State& s, const Vec& x_measured, ReinitPolicy policy,
                 double noise_sigma, std::uint64_t& noise_state) {
  switch (policy) {
    case ReinitPolicy::kNone:
      return (s.xhat - x_measured).norm();
    case ReinitPolicy::kMeasured:
      s.xhat = x_measured;
      return 0.0;
    case ReinitPolicy::kMeasuredPlusNoise: {
      Vec eps(x_measured.size());
      for (Eigen::Index i = 0; i < eps.size(); ++i)
        eps(i) = noise_sigma * std_normal(noise_state);
      s.xhat = x_measured + eps;
      return eps.norm();
    }
  }
  return 0.0;
}

}  // namespace l1ac::ctrl
