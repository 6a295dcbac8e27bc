#include "l1ac/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace l1ac::la {

namespace {

void require_square(const Mat& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": matrix must be square and non-empty");
}

void require_finite(const Mat& A, const char* who) {
  if (!A.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

}  // namespace

Mat expm(const Mat& A, double t) {
  require_square(A, "expm");
  require_finite(A, "expm");
  if (!std::isfinite(t)) throw std::invalid_argument("expm: non-finite time");

  const Eigen::Index n = A.rows();
  Mat M = A * t;

  // Pade(13) coefficients.
  static const double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    M /= std::pow(2.0, squarings);
  }

  const Mat I = Mat::Identity(n, n);
  const Mat M2 = M * M;
  const Mat M4 = M2 * M2;
  const Mat M6 = M4 * M2;

  const Mat U = M * (M6 * (b[13] * M6 + b[11] * M4 + b[9] * M2) +
                     b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * I);
  const Mat V = M6 * (b[12] * M6 + b[10] * M4 + b[8] * M2) +
                b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * I;

  Mat E = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) E = E * E;
  return E;
}

Mat pinv(const Mat& B) {
  require_finite(B, "pinv");
  if (B.size() == 0) throw std::invalid_argument("pinv: empty matrix");
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) throw std::invalid_argument("pinv: zero matrix");
  const double thresh =
      static_cast<double>(std::max(B.rows(), B.cols())) *
      std::numeric_limits<double>::epsilon() * sv(0);
  Vec inv_sv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) inv_sv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Mat bperp(const Mat& B) {
  require_finite(B, "bperp");
  const Eigen::Index n = B.rows(), m = B.cols();
  if (m > n) throw std::invalid_argument("bperp: more columns than rows");
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double thresh =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
      (sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  if (rank < m) throw std::invalid_argument("bperp: rank-deficient input");
  return svd.matrixU().rightCols(n - m);
}

Mat lyap_solve(const Mat& A, const Mat& Q) {
  require_square(A, "lyap_solve");
  require_square(Q, "lyap_solve");
  if (A.rows() != Q.rows()) throw std::invalid_argument("lyap_solve: dimension mismatch");
  if (!is_spd(Q)) throw std::invalid_argument("lyap_solve: Q not symmetric positive definite");
  if (max_real_eig(A) >= 0.0)
    throw std::runtime_error("lyap_solve: no stabilizing solution (A not Hurwitz)");

  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  const Eigen::Index n = A.rows();
  Mat K = Mat::Zero(n * n, n * n);
  const Mat At = A.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    K.block(i * n, i * n, n, n) += At;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        K(i * n + k, j * n + k) += At(i, j);

  Vec q(n * n);
  for (Eigen::Index j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
  Vec p = K.partialPivLu().solve(q);
  Mat P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
  P = 0.5 * (P + P.transpose().eval());
  return P;
}

double gev_max(const Mat& P, const Mat& Q) {
  require_square(P, "gev_max");
  if (P.rows() != Q.rows() || Q.rows() != Q.cols())
    throw std::invalid_argument("gev_max: dimension mismatch");
  if (!is_spd(P) || !is_spd(Q)) throw std::invalid_argument("gev_max: inputs must be SPD");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(P, Q, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw std::runtime_error("gev_max: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

double gev_min(const Mat& M, const Mat& P) {
  require_square(M, "gev_min");
  if (M.rows() != P.rows() || P.rows() != P.cols())
    throw std::invalid_argument("gev_min: dimension mismatch");
  if (!is_symmetric(M) || !is_spd(P))
    throw std::invalid_argument("gev_min: M must be symmetric, P SPD");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(M, P, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw std::runtime_error("gev_min: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

double max_real_eig(const Mat& A) {
  require_square(A, "max_real_eig");
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_symmetric(const Mat& A, double tol) {
  if (A.rows() != A.cols()) return false;
  const double scale = std::max(1.0, A.norm());
  return (A - A.transpose()).norm() <= tol * scale;
}

bool is_spd(const Mat& A, double tol) {
  if (!is_symmetric(A, tol)) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

Mat spd_sqrt(const Mat& P) {
  require_square(P, "spd_sqrt");
  if (!is_spd(P)) throw std::invalid_argument("spd_sqrt: input not SPD");
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace l1ac::la
