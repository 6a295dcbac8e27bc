#include "l1ac/refsys.hpp"

#include <complex>
#include <stdexcept>

namespace l1ac::refsys {

ClosedLoopMatrices build_closedloop_matrices(const ModeDefinition& mode,
                                             const Mat& theta, const Mat& omega,
                                             const FilterRealization& filter) {
  const Eigen::Index n = mode.n(), m = mode.m(), nf = filter.n_f();
  if (theta.rows() != n || theta.cols() != m || omega.rows() != m || omega.cols() != m ||
      filter.m() != m)
    throw std::invalid_argument("build_closedloop_matrices: dimension mismatch");

  const Eigen::Index dim = n + nf + m;
  ClosedLoopMatrices cm;
  cm.Abar = Mat::Zero(dim, dim);
  cm.Abar.topLeftCorner(n, n) = mode.A + mode.B * theta.transpose();
  cm.Abar.topRightCorner(n, m) = -mode.B * omega;
  cm.Abar.block(n, 0, nf, n) = filter.B_f * theta.transpose();
  cm.Abar.block(n, n, nf, nf) = filter.A_f;
  cm.Abar.block(n, n + nf, nf, m) = -filter.B_f * omega;
  cm.Abar.block(n + nf, 0, m, n) = filter.D_f * theta.transpose();
  cm.Abar.block(n + nf, n, m, nf) = filter.C_f;
  cm.Abar.bottomRightCorner(m, m) = -filter.D_f * omega;

  cm.Bbar = Mat::Zero(dim, m);
  cm.Bbar.topRows(n) = mode.B;
  cm.Bbar.middleRows(n, nf) = filter.B_f;
  cm.Bbar.bottomRows(m) = filter.D_f;

  cm.Ebar = Mat::Zero(dim, m);
  cm.Ebar.middleRows(n, nf) = -filter.B_f * mode.k;
  cm.Ebar.bottomRows(m) = -filter.D_f * mode.k;

  cm.Cbar = Mat::Zero(m, dim);
  cm.Cbar.rightCols(m) = -Mat::Identity(m, m);
  return cm;
}

Vec reference_deriv(const Vec& xbar, const ClosedLoopMatrices& cm, const Vec& d,
                    const Vec& r) {
  if (xbar.size() != cm.dim()) throw std::invalid_argument("reference_deriv: bad state size");
  return cm.Abar * xbar + cm.Bbar * d + cm.Ebar * r;
}

Vec ideal_deriv(const Vec& x_id, const ModeDefinition& mode, const Vec& r) {
  return mode.A * x_id + mode.B * (mode.k * r);
}

Eigen::MatrixXcd loop_filter_response(const FilterRealization& f, const Mat& omega,
                                      double w) {
  using CMat = Eigen::MatrixXcd;
  const Eigen::Index m = f.m(), nf = f.n_f();
  const std::complex<double> s(0.0, w);
  CMat D0(m, m);
  if (nf > 0) {
    CMat sI = s * CMat::Identity(nf, nf);
    D0 = f.C_f.cast<std::complex<double>>() *
             (sI - f.A_f.cast<std::complex<double>>()).partialPivLu().solve(
                 f.B_f.cast<std::complex<double>>()) +
         f.D_f.cast<std::complex<double>>();
  } else {
    D0 = f.D_f.cast<std::complex<double>>();
  }
  const CMat wc = omega.cast<std::complex<double>>();
  return wc * (s * CMat::Identity(m, m) + D0 * wc).partialPivLu().solve(D0);
}

}  // namespace l1ac::refsys
