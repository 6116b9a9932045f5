#include "ratecost/linalg.hpp"

#include <cmath>
#include <limits>

namespace ratecost::linalg {

int numerical_rank(const Matrix& m, double rel_tol) {
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    const double threshold = rel_tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > threshold) {
            ++rank;
        }
    }
    return rank;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool is_psd(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    if (m.size() == 0) {
        return true;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double top = std::max(1.0, std::abs(ev.maxCoeff()));
    return ev.minCoeff() >= -tol * top;
}

double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Matrix sqrt_psd(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym));
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix inv_sqrt_pd(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym));
    Vector ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double log_abs_det(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::PartialPivLU<Matrix> lu(m);
    const Matrix& u = lu.matrixLU();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double d = std::abs(u(i, i));
        if (d == 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        acc += std::log(d);
    }
    return acc;
}

Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    Matrix out(n, n * m);
    Matrix block = B;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.middleCols(i * m, m) = block;
        block = A * block;
    }
    return out;
}

Matrix observability_matrix(const Matrix& A, const Matrix& C) {
    const Eigen::Index n = A.rows();
    const Eigen::Index k = C.rows();
    Matrix out(n * k, n);
    Matrix block = C;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.middleRows(i * k, k) = block;
        block = block * A;
    }
    return out;
}

}  // namespace ratecost::linalg
