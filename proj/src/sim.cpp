#include "l1ac/sim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace l1ac::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_rand(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
}

double sample_noise(std::uint64_t& state) {
  // standard normal via Box-Muller on the deterministic stream
  const double u1 = std::max(unit_rand(state), 1e-300);
  const double u2 = unit_rand(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Patches only the theta-dependent blocks of a prebuilt Abar; omega and the
// filter blocks are fixed per mode.
struct RefBuilder {
  refsys::ClosedLoopMatrices cm;
  Eigen::Index n, m, nf;
  Mat B, Bf, Df, A;

  RefBuilder() = default;
  RefBuilder(const model::ModeDefinition& mode, const Mat& omega,
             const ctrl::FilterRealization& f) {
    n = mode.n();
    m = mode.m();
    nf = f.n_f();
    B = mode.B;
    Bf = f.B_f;
    Df = f.D_f;
    A = mode.A;
    cm = refsys::build_closedloop_matrices(mode, Mat::Zero(n, m), omega, f);
  }

  void set_theta(const Mat& theta) {
    cm.Abar.topLeftCorner(n, n) = A + B * theta.transpose();
    cm.Abar.block(n, 0, nf, n) = Bf * theta.transpose();
    cm.Abar.block(n + nf, 0, m, n) = Df * theta.transpose();
  }
};

}  // namespace

Vec CommandProfile::eval(double t) const {
  switch (kind) {
    case Kind::kConstant:
      return amplitude;
    case Kind::kStep:
      return t >= t_start ? amplitude : Vec(Vec::Zero(amplitude.size()));
    case Kind::kSquare: {
      if (t < t_start) return Vec::Zero(amplitude.size());
      const double phase = std::fmod(t - t_start, period);
      return phase < 0.5 * period ? amplitude : Vec(-amplitude);
    }
    case Kind::kSine:
      return amplitude * std::sin(2.0 * std::numbers::pi * (t - t_start) / period);
    case Kind::kDoublet: {
      if (t < t_start) return Vec::Zero(amplitude.size());
      if (t < t_start + width) return amplitude;
      if (t < t_start + 2.0 * width) return Vec(-amplitude);
      return Vec::Zero(amplitude.size());
    }
  }
  return amplitude;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xa0761d6478bd642fULL + index * 0xe7037ed1a0b428dbULL);
  return splitmix64(s);
}

Mat random_hull_point(const std::vector<Mat>& vertices, std::uint64_t& state) {
  // Dirichlet(1) weights: uniform over the simplex of vertex mixtures.
  std::vector<double> w(vertices.size());
  double total = 0.0;
  for (auto& wi : w) {
    wi = -std::log(std::max(unit_rand(state), 1e-300));
    total += wi;
  }
  Mat p = Mat::Zero(vertices.front().rows(), vertices.front().cols());
  for (std::size_t i = 0; i < vertices.size(); ++i)
    p += (w[i] / total) * vertices[i];
  return p;
}

model::UncertaintyTrajectory randomize_uncertainty(const model::UncertaintySets& sets,
                                                   std::size_t n_modes,
                                                   std::uint64_t seed) {
  std::uint64_t st = seed ^ 0x2545f4914f6cdd1dULL;
  model::UncertaintyTrajectory out;
  out.theta.family = model::PolytopeTrajectory::Family::kSinusoid;
  out.theta.p0 = random_hull_point(sets.theta_vertices, st);
  out.theta.p1 = random_hull_point(sets.theta_vertices, st);
  out.theta.freq_hz = 0.1 + 1.4 * unit_rand(st);
  out.theta.phase = 2.0 * std::numbers::pi * unit_rand(st);

  std::vector<Mat> dm(sets.d_vertices.begin(), sets.d_vertices.end());
  out.d.family = model::PolytopeTrajectory::Family::kSinusoid;
  out.d.p0 = random_hull_point(dm, st);
  out.d.p1 = random_hull_point(dm, st);
  out.d.freq_hz = 0.2 + 1.8 * unit_rand(st);
  out.d.phase = 2.0 * std::numbers::pi * unit_rand(st);

  out.omega_per_mode.clear();
  for (std::size_t i = 0; i < n_modes; ++i)
    out.omega_per_mode.push_back(random_hull_point(sets.omega_vertices, st));
  return out;
}

namespace {

class LinearEngine {
 public:
  LinearEngine(const LinearScenario& sc, const RunOptions& opt) : sc_(sc), opt_(opt) {
    n_ = sc.modes.n();
    m_ = sc.modes.m();
    nf_ = sc.l1.filter.n_f();
    sched_ = sc.sched;
    sched_.Ts = sc.l1.Ts;  // the controller owns the adaptation period
    sched_.validate();

    for (std::size_t i = 0; i < sc.modes.count(); ++i) {
      kits_.emplace_back(sc.modes[i], sc.l1.Ts);
      if (kits_.back().condition_estimate() > sc.l1.cond_warn_threshold) {
        std::ostringstream os;
        os << "adaptive-law solve for mode " << i << " is ill-conditioned (1/sigma_min = "
           << kits_.back().condition_estimate() << "); consider a larger Ts";
        warnings_.push_back(os.str());
      }
    }

    // Switch events mapped to integration step indices (Assumption 3 grid).
    for (const auto& ev : sc.signal.events) {
      const double ratio = ev.t / sched_.h;
      const long long k = std::llround(ratio);
      if (std::abs(ratio - static_cast<double>(k)) > 1e-6 ||
          k % sched_.steps_per_sample != 0)
        throw std::invalid_argument("switch time not on the Ts grid");
      switch_steps_.emplace_back(k, ev.mode);
    }

    off_x_ = 0;
    off_xhat_ = n_;
    off_xf_ = 2 * n_;
    off_uint_ = off_xf_ + nf_;
    dim_ = off_uint_ + m_;
    if (opt.with_reference) {
      off_ref_ = dim_;
      dim_ += n_ + nf_ + m_;
    }
    if (opt.with_ideal) {
      off_id_ = dim_;
      dim_ += n_;
    }
    if (sc.diagnostics) {
      off_z1_ = dim_;
      dim_ += n_;
      off_z2_ = dim_;
      dim_ += n_;
    }
  }

  Trace run() {
    Trace tr;
    tr.warnings = warnings_;
    build_columns(tr);
    for (const auto& key :
         {"xtilde", "x", "u", "xref", "uref", "e", "eu", "eta1",
          "xtilde_at_samples", "zeta1_at_samples", "zeta_mismatch",
          "reinit_error"})
      tr.sups[key] = 0.0;

    Vec y = Vec::Zero(dim_);
    y.segment(off_x_, n_) = sc_.x0;
    y.segment(off_xhat_, n_) = sc_.x0;
    if (opt_.with_reference) y.segment(off_ref_, n_) = sc_.x0;
    if (opt_.with_ideal) y.segment(off_id_, n_) = sc_.x0;

    mode_ = sc_.signal.initial_mode;
    eta1_ = Vec::Zero(m_);
    eta2_ = Vec::Zero(n_ - m_);
    u_held_ = Vec::Zero(m_);
    omega_ = sc_.uncertainty.omega_for(mode_);
    if (opt_.with_reference) ref_builder_ = RefBuilder(sc_.modes[mode_], omega_, sc_.l1.filter);
    std::uint64_t noise_state = sc_.seed ^ 0x9e3779b97f4a7c15ULL;
    int switch_count = 0;

    for (long long k = 0;; ++k) {
      const double t = static_cast<double>(k) * sched_.h;

      if (k % sched_.steps_per_sample == 0) {
        // Diagnostics first, against the pre-switch prediction error: the
        // annihilation property concerns zeta1 just before the reset.
        if (sc_.diagnostics && k > 0) {
          const Vec xtilde_pre = y.segment(off_xhat_, n_) - y.segment(off_x_, n_);
          tr.sups["zeta1_at_samples"] = std::max(tr.sups["zeta1_at_samples"],
                                                 y.segment(off_z1_, n_).norm());
          const Vec mism = xtilde_pre - y.segment(off_z1_, n_) - y.segment(off_z2_, n_);
          tr.sups["zeta_mismatch"] = std::max(tr.sups["zeta_mismatch"], mism.norm());
        }
        // Switch next: the new mode's matrices are used at this sample.
        for (const auto& [step, mode] : switch_steps_) {
          if (step == k) {
            mode_ = mode;
            omega_ = sc_.uncertainty.omega_for(mode_);
            if (opt_.with_reference)
              ref_builder_ = RefBuilder(sc_.modes[mode_], omega_, sc_.l1.filter);
            ctrl::L1State ls{y.segment(off_xhat_, n_), eta1_, eta2_,
                             y.segment(off_uint_, m_), y.segment(off_xf_, nf_)};
            double err;
            if (sc_.inject_reinit_error && sc_.inject_reinit_error->first == switch_count) {
              Vec dir = Vec::Ones(n_).normalized();
              ls.xhat = y.segment(off_x_, n_) + sc_.inject_reinit_error->second * dir;
              err = sc_.inject_reinit_error->second;
            } else {
              err = ctrl::on_switch(ls, y.segment(off_x_, n_), sc_.l1.reinit_policy,
                                    sc_.l1.reinit_noise_sigma, noise_state);
            }
            y.segment(off_xhat_, n_) = ls.xhat;
            tr.sups["reinit_error"] = std::max(tr.sups["reinit_error"], err);
            last_event_ = 1;
            ++switch_count;
          }
        }

        Vec xtilde = y.segment(off_xhat_, n_) - y.segment(off_x_, n_);
        if (sc_.l1.meas_noise_sigma > 0.0) {
          for (Eigen::Index i = 0; i < n_; ++i)
            xtilde(i) += sc_.l1.meas_noise_sigma * sample_noise(noise_state);
        }
        tr.sups["xtilde_at_samples"] =
            std::max(tr.sups["xtilde_at_samples"], xtilde.norm());
        std::tie(eta1_, eta2_) = kits_[mode_].adapt_update(xtilde);
        if (sc_.diagnostics) {
          y.segment(off_z1_, n_) = xtilde;
          y.segment(off_z2_, n_).setZero();
        }
      }

      if (sched_.zoh_control && k % sched_.steps_per_control == 0)
        u_held_ = -y.segment(off_uint_, m_);

      update_sups(tr, t, y);
      if (k % sched_.record_stride == 0 || k == sched_.steps_total)
        record(tr, t, y);
      last_event_ = 0;
      if (k == sched_.steps_total) break;

      rk4_step(t, y);

      if (!y.allFinite() || y.segment(off_x_, n_).norm() > sc_.divergence_limit) {
        tr.aborted = true;
        tr.abort_time = t + sched_.h;
        tr.abort_reason = "state divergence or non-finite values";
        break;
      }
    }
    return tr;
  }

 private:
  void build_columns(Trace& tr) const {
    auto add_block = [&tr](const std::string& base, Eigen::Index count) {
      for (Eigen::Index i = 0; i < count; ++i)
        tr.columns.push_back(base + "_" + std::to_string(i));
    };
    tr.columns = {"t", "mode", "event"};
    add_block("x", n_);
    add_block("xhat", n_);
    add_block("u", m_);
    add_block("eta1", m_);
    add_block("eta2", n_ - m_);
    add_block("r", m_);
    tr.columns.push_back("xtilde_norm");
    if (opt_.with_reference) {
      add_block("xref", n_);
      add_block("uref", m_);
      tr.columns.push_back("e_norm");
      tr.columns.push_back("eu_norm");
    }
    if (opt_.with_ideal) {
      add_block("xid", n_);
      add_block("uid", m_);
    }
    if (sc_.diagnostics) {
      tr.columns.push_back("zeta1_norm");
      tr.columns.push_back("zeta2_norm");
    }
  }

  Vec control_u(const Vec& y) const {
    return sched_.zoh_control ? u_held_ : Vec(-y.segment(off_uint_, m_));
  }

  Vec deriv(double t, const Vec& y) {
    const auto& mode = sc_.modes[mode_];
    const Mat theta = sc_.uncertainty.theta_at(t);
    const Vec d = sc_.uncertainty.d_at(t);
    const Vec r = sc_.rcmd.eval(t);
    const Vec u = control_u(y);

    Vec dy(dim_);
    dy.segment(off_x_, n_) =
        mode.A * y.segment(off_x_, n_) +
        mode.B * (omega_ * u + theta.transpose() * y.segment(off_x_, n_) + d);
    dy.segment(off_xhat_, n_) = mode.A * y.segment(off_xhat_, n_) + mode.B * (u + eta1_);
    if (n_ > m_) dy.segment(off_xhat_, n_) += kits_[mode_].B_perp() * eta2_;

    const Vec mu = u + eta1_ - mode.k * r;
    dy.segment(off_xf_, nf_) =
        sc_.l1.filter.A_f * y.segment(off_xf_, nf_) + sc_.l1.filter.B_f * mu;
    dy.segment(off_uint_, m_) =
        sc_.l1.filter.C_f * y.segment(off_xf_, nf_) + sc_.l1.filter.D_f * mu;

    if (opt_.with_reference) {
      ref_builder_.set_theta(theta);
      dy.segment(off_ref_, n_ + nf_ + m_) = refsys::reference_deriv(
          y.segment(off_ref_, n_ + nf_ + m_), ref_builder_.cm, d, r);
    }
    if (opt_.with_ideal)
      dy.segment(off_id_, n_) = refsys::ideal_deriv(y.segment(off_id_, n_), mode, r);

    if (sc_.diagnostics) {
      dy.segment(off_z1_, n_) = mode.A * y.segment(off_z1_, n_) + mode.B * eta1_;
      if (n_ > m_) dy.segment(off_z1_, n_) += kits_[mode_].B_perp() * eta2_;
      const Mat Im = Mat::Identity(m_, m_);
      dy.segment(off_z2_, n_) =
          mode.A * y.segment(off_z2_, n_) +
          mode.B * ((Im - omega_) * u -
                    (theta.transpose() * y.segment(off_x_, n_) + d));
    }
    return dy;
  }

  void rk4_step(double t, Vec& y) {
    const double h = sched_.h;
    const Vec k1 = deriv(t, y);
    const Vec k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = deriv(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  void update_sups(Trace& tr, double t, const Vec& y) const {
    auto bump = [&tr](const char* key, double v) {
      auto& s = tr.sups[key];
      if (v > s) s = v;
    };
    const Vec u = control_u(y);
    bump("x", y.segment(off_x_, n_).norm());
    bump("u", u.norm());
    bump("xtilde", (y.segment(off_xhat_, n_) - y.segment(off_x_, n_)).norm());
    bump("eta1", eta1_.norm());
    if (opt_.with_reference) {
      const Vec xbar = y.segment(off_ref_, n_ + nf_ + m_);
      const Vec uref = refsys::reference_output(xbar, ref_builder_.cm);
      bump("xref", xbar.head(n_).norm());
      bump("uref", uref.norm());
      bump("e", (xbar.head(n_) - y.segment(off_x_, n_)).norm());
      bump("eu", (uref - u).norm());
    }
  }

  void record(Trace& tr, double t, const Vec& y) const {
    std::vector<double> row;
    row.reserve(tr.columns.size());
    const Vec u = control_u(y);
    const Vec r = sc_.rcmd.eval(t);
    row.push_back(t);
    row.push_back(static_cast<double>(mode_));
    row.push_back(static_cast<double>(last_event_));
    for (Eigen::Index i = 0; i < n_; ++i) row.push_back(y(off_x_ + i));
    for (Eigen::Index i = 0; i < n_; ++i) row.push_back(y(off_xhat_ + i));
    for (Eigen::Index i = 0; i < m_; ++i) row.push_back(u(i));
    for (Eigen::Index i = 0; i < m_; ++i) row.push_back(eta1_(i));
    for (Eigen::Index i = 0; i < n_ - m_; ++i) row.push_back(eta2_(i));
    for (Eigen::Index i = 0; i < m_; ++i) row.push_back(r(i));
    row.push_back((y.segment(off_xhat_, n_) - y.segment(off_x_, n_)).norm());
    if (opt_.with_reference) {
      const Vec xbar = y.segment(off_ref_, n_ + nf_ + m_);
      const Vec uref = refsys::reference_output(xbar, ref_builder_.cm);
      for (Eigen::Index i = 0; i < n_; ++i) row.push_back(xbar(i));
      for (Eigen::Index i = 0; i < m_; ++i) row.push_back(uref(i));
      row.push_back((xbar.head(n_) - y.segment(off_x_, n_)).norm());
      row.push_back((uref - u).norm());
    }
    if (opt_.with_ideal) {
      const auto& mode = sc_.modes[mode_];
      for (Eigen::Index i = 0; i < n_; ++i) row.push_back(y(off_id_ + i));
      const Vec uid = mode.k * r;
      for (Eigen::Index i = 0; i < m_; ++i) row.push_back(uid(i));
    }
    if (sc_.diagnostics) {
      row.push_back(y.segment(off_z1_, n_).norm());
      row.push_back(y.segment(off_z2_, n_).norm());
    }
    tr.rows.push_back(std::move(row));
  }

  const LinearScenario& sc_;
  RunOptions opt_;
  Schedule sched_;
  Eigen::Index n_ = 0, m_ = 0, nf_ = 0, dim_ = 0;
  Eigen::Index off_x_ = 0, off_xhat_ = 0, off_xf_ = 0, off_uint_ = 0;
  Eigen::Index off_ref_ = 0, off_id_ = 0, off_z1_ = 0, off_z2_ = 0;
  std::vector<ctrl::ModeKit> kits_;
  std::vector<std::string> warnings_;
  std::vector<std::pair<long long, int>> switch_steps_;
  int mode_ = 0;
  int last_event_ = 0;
  Vec eta1_, eta2_, u_held_;
  Mat omega_;
  RefBuilder ref_builder_;
};

}  // namespace

Trace run_comparison(const LinearScenario& sc, const RunOptions& opt) {
  LinearEngine eng(sc, opt);
  return eng.run();
}

Trace run_scenario(const LinearScenario& sc) {
  return run_comparison(sc, RunOptions{false, false});
}

SweepResult monte_carlo_sweep(const LinearScenario& sc, int n_runs,
                              std::uint64_t seed, int n_threads) {
  if (n_runs < 1) throw std::invalid_argument("monte_carlo_sweep: n_runs must be >= 1");
  SweepResult out;
  out.per_run_sups.resize(static_cast<std::size_t>(n_runs));

  if (n_threads <= 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, n_runs);

  auto work = [&](int first, int stride) {
    for (int r = first; r < n_runs; r += stride) {
      LinearScenario run_sc = sc;
      run_sc.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
      run_sc.uncertainty =
          randomize_uncertainty(sc.sets, sc.modes.count(), run_sc.seed);
      Trace tr = run_comparison(run_sc);
      out.per_run_sups[static_cast<std::size_t>(r)] = tr.sups;
    }
  };

  if (n_threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work, i, n_threads);
    for (auto& th : pool) th.join();
  }

  for (const auto& sups : out.per_run_sups)
    for (const auto& [key, value] : sups) {
      auto& w = out.worst[key];
      if (value > w) w = value;
    }
  return out;
}

}  // namespace l1ac::sim
