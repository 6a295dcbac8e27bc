#pragma once

#include <Eigen/Dense>

// Dense linear-algebra primitives shared by every other component.
// All functions are pure and thread-safe.

namespace l1ac::la {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Matrix exponential e^{A t} via Pade(13) with scaling and squaring.
/// The adaptive law inverts (e^{-A Ts} - I) for small Ts, so this is the
/// most accuracy-critical primitive in the library.
Mat expm(const Mat& A, double t = 1.0);

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// max(rows,cols) * eps * sigma_max are treated as zero.
Mat pinv(const Mat& B);

/// Orthonormal basis of the null space of B^T for a full-column-rank
/// n x m matrix B with m <= n. Returns an n x (n-m) matrix; empty when
/// m == n. Throws if B is rank deficient.
Mat bperp(const Mat& B);

/// Solve A^T P + P A = -Q for symmetric positive definite Q and Hurwitz A.
/// Throws "no stabilizing solution" when A is not Hurwitz.
Mat lyap_solve(const Mat& A, const Mat& Q);

/// Smallest mu with P <= mu Q for SPD P, Q (largest generalized eigenvalue).
double gev_max(const Mat& P, const Mat& Q);

/// Smallest generalized eigenvalue of the SPD pencil (M, P): largest lambda
/// with M >= lambda P. M must be symmetric, P SPD.
double gev_min(const Mat& M, const Mat& P);

/// Largest real part over the eigenvalues of a (generally non-symmetric) A.
double max_real_eig(const Mat& A);

bool is_symmetric(const Mat& A, double tol = 1e-10);
bool is_spd(const Mat& A, double tol = 1e-10);

/// Principal square root of an SPD matrix.
Mat spd_sqrt(const Mat& P);

}  // namespace l1ac::la
