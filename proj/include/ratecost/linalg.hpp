#pragma once

#include <Eigen/Dense>

namespace ratecost {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

// Singular values above rel_tol * sigma_max count toward the rank.
inline constexpr double kRankTolerance = 1e-9;

int numerical_rank(const Matrix& m, double rel_tol = kRankTolerance);

// Symmetric with all eigenvalues >= -tol * max(1, |lambda_max|).
bool is_psd(const Matrix& m, double tol = 1e-10);

Matrix symmetrize(const Matrix& m);

double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);

// Spectral square root and its inverse of a symmetric PSD matrix.
Matrix sqrt_psd(const Matrix& sym);
Matrix inv_sqrt_pd(const Matrix& sym);

// log|det m| via partial-pivot LU; -inf when singular.
double log_abs_det(const Matrix& m);

// [B AB ... A^{n-1}B]
Matrix controllability_matrix(const Matrix& A, const Matrix& B);

// [C; CA; ...; CA^{n-1}] (rank equals that of [C' A'C' ...]).
Matrix observability_matrix(const Matrix& A, const Matrix& C);

}  // namespace linalg
}  // namespace ratecost
