#include "ratecost/riccati.hpp"

#include <cmath>

#include "ratecost/errors.hpp"

namespace ratecost {

namespace {

// Solves G X = rhs, falling back to the pseudoinverse when G is singular.
Matrix solve_gain(const Matrix& G, const Matrix& rhs, bool& pseudo) {
    Eigen::LDLT<Matrix> ldlt(G);
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    const bool singular = ldlt.info() != Eigen::Success ||
                          ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * scale;
    if (!singular) {
        return ldlt.solve(rhs);
    }
    pseudo = true;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(G);
    cod.setThreshold(1e-12);
    return cod.solve(rhs);
}

void require_finite(const Matrix& X, const char* what, int iteration) {
    if (!X.allFinite()) {
        throw ConvergenceError(std::string(what) + " diverged", std::nan(""), iteration);
    }
}

}  // namespace

ControlRiccati solve_control(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                             const RiccatiOptions& options) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
        R.rows() != B.cols() || R.cols() != B.cols()) {
        throw InvalidInstance("solve_control: inconsistent dimensions");
    }

    ControlRiccati out;
    Matrix S = linalg::symmetrize(Q);
    double change = 0.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Matrix BtS = B.transpose() * S;
        const Matrix G = R + BtS * B;
        bool pseudo = false;
        const Matrix L = solve_gain(G, BtS, pseudo);
        const Matrix M = BtS.transpose() * L;
        Matrix next = linalg::symmetrize(Q + A.transpose() * (S - M) * A);
        require_finite(next, "control Riccati iteration", it);
        change = (next - S).norm();
        const double scale = std::max(1.0, S.norm());
        S = std::move(next);
        if (change < options.tolerance * scale) {
            ++it;
            break;
        }
    }
    if (it >= options.max_iterations && change >= options.tolerance * std::max(1.0, S.norm())) {
        throw ConvergenceError("control Riccati iteration did not converge", change, it);
    }

    const Matrix BtS = B.transpose() * S;
    const Matrix G = R + BtS * B;
    bool pseudo = false;
    out.L = solve_gain(G, BtS, pseudo);
    out.M = linalg::symmetrize(BtS.transpose() * out.L);
    out.S = S;
    out.pseudo_inverse = pseudo;
    out.iterations = it;
    out.residual = (S - (Q + A.transpose() * (S - out.M) * A)).norm();
    return out;
}

ControlRiccati solve_control(const LinearPlant& plant, const RiccatiOptions& options) {
    check_dimensions(plant);
    return solve_control(plant.A, plant.B, plant.Q, plant.R, options);
}

FilterRiccati solve_filter(const Matrix& A, const Matrix& C, const Matrix& sigma_v,
                           const Matrix& sigma_w, const Matrix& P0,
                           const RiccatiOptions& options) {
    const Eigen::Index n = A.rows();
    const Eigen::Index k = C.rows();
    if (A.cols() != n || C.cols() != n || sigma_v.rows() != n || sigma_v.cols() != n ||
        sigma_w.rows() != k || sigma_w.cols() != k || P0.rows() != n || P0.cols() != n) {
        throw InvalidInstance("solve_filter: inconsistent dimensions");
    }

    auto innovation = [&](const Matrix& P) { return Matrix(C * P * C.transpose() + sigma_w); };
    auto gain = [&](const Matrix& P) {
        bool pseudo = false;
        // K' = (CPC' + Sigma_W)^{-1} C P
        return Matrix(solve_gain(innovation(P), C * P, pseudo).transpose());
    };

    Matrix P = linalg::symmetrize(P0);
    double change = 0.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Matrix K = gain(P);
        Matrix next = linalg::symmetrize(A * (P - K * C * P) * A.transpose() + sigma_v);
        require_finite(next, "filter Riccati iteration", it);
        change = (next - P).norm();
        const double scale = std::max(1.0, P.norm());
        P = std::move(next);
        if (change < options.tolerance * scale) {
            ++it;
            break;
        }
    }
    if (it >= options.max_iterations && change >= options.tolerance * std::max(1.0, P.norm())) {
        throw ConvergenceError("filter Riccati iteration did not converge", change, it);
    }

    FilterRiccati out;
    out.P = P;
    out.innovation_covariance = linalg::symmetrize(innovation(P));
    out.K = gain(P);
    out.N = linalg::symmetrize(out.K * out.innovation_covariance * out.K.transpose());
    out.Sigma = linalg::symmetrize(P - out.N);
    out.iterations = it;
    const Matrix rhs = A * P * A.transpose() -
                       A * out.K * out.innovation_covariance * out.K.transpose() * A.transpose() +
                       sigma_v;
    out.residual = (P - rhs).norm();
    return out;
}

FilterRiccati solve_filter(const LinearPlant& plant, const RiccatiOptions& options) {
    check_dimensions(plant);
    if (!plant.noise_w) {
        throw InvalidInstance("solve_filter: plant has no observation noise");
    }
    const bool gaussian = plant.noise_v.family() == NoiseFamily::gaussian &&
                          plant.noise_w->family() == NoiseFamily::gaussian &&
                          (!plant.noise_x1 || plant.noise_x1->family() == NoiseFamily::gaussian);
    if (!gaussian) {
        throw Unsupported("filter requires Gaussian noises");
    }
    const Matrix P0 = plant.noise_x1 ? plant.noise_x1->covariance() : plant.noise_v.covariance();
    return solve_filter(plant.A, plant.C, plant.noise_v.covariance(), plant.noise_w->covariance(),
                        P0, options);
}

double b_min(const LinearPlant& plant, const ControlRiccati& control, const FilterRiccati* filter) {
    double out = (plant.noise_v.covariance() * control.S).trace();
    if (filter != nullptr) {
        out += (filter->Sigma * plant.A.transpose() * control.M * plant.A).trace();
    }
    return out;
}

}  // namespace ratecost
