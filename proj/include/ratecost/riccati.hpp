#pragma once

#include "ratecost/linalg.hpp"
#include "ratecost/sysmodel.hpp"

namespace ratecost {

struct RiccatiOptions {
    // Stop when |X_{k+1} - X_k|_F < tolerance * max(1, |X_k|_F).
    double tolerance = 1e-12;
    int max_iterations = 100000;
};

// Steady-state LQR Riccati solution:
//   S = Q + A'(S - M)A,  M = S B (R + B'SB)^{-1} B'S,  L = (R + B'SB)^{-1} B'S.
struct ControlRiccati {
    Matrix S;
    Matrix M;
    Matrix L;
    int iterations = 0;
    double residual = 0.0;
    // R + B'SB was singular and the pseudoinverse was used.
    bool pseudo_inverse = false;

    // R + B'SB at the solution.
    Matrix gain_weight(const Matrix& B, const Matrix& R) const { return R + B.transpose() * S * B; }
};

// Steady-state Kalman filter quantities.
struct FilterRiccati {
    Matrix P;      // a-priori error covariance
    Matrix K;      // gain
    Matrix Sigma;  // a-posteriori error covariance
    Matrix N;      // covariance of the estimate's innovation K(CPC' + Sigma_W)K'
    Matrix innovation_covariance;  // CPC' + Sigma_W
    int iterations = 0;
    double residual = 0.0;
};

ControlRiccati solve_control(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                             const RiccatiOptions& options = {});
ControlRiccati solve_control(const LinearPlant& plant, const RiccatiOptions& options = {});

// Iterates P <- A(P - PC'(CPC' + Sigma_W)^{-1}CP)A' + Sigma_V from P0.
FilterRiccati solve_filter(const Matrix& A, const Matrix& C, const Matrix& sigma_v,
                           const Matrix& sigma_w, const Matrix& P0,
                           const RiccatiOptions& options = {});

// Requires Gaussian process, observation and initial-state noise.
FilterRiccati solve_filter(const LinearPlant& plant, const RiccatiOptions& options = {});

// tr(Sigma_V S) when filter is null, tr(Sigma_V S) + tr(Sigma A'MA) otherwise.
double b_min(const LinearPlant& plant, const ControlRiccati& control,
             const FilterRiccati* filter = nullptr);

}  // namespace ratecost
