#include "ratecost/sysmodel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ratecost/errors.hpp"

namespace ratecost {

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

Matrix checked_basis(const Matrix& basis, Eigen::Index n) {
    if (basis.rows() != n || basis.cols() != n) {
        throw InvalidInstance("noise basis must be " + std::to_string(n) + "x" +
                              std::to_string(n));
    }
    const Matrix gram = basis.transpose() * basis;
    if ((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9) {
        throw InvalidInstance("noise basis must be orthogonal");
    }
    return basis;
}

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

std::string to_string(NoiseFamily family) {
    switch (family) {
        case NoiseFamily::gaussian: return "gaussian";
        case NoiseFamily::laplace: return "laplace";
        case NoiseFamily::uniform: return "uniform";
    }
    return "unknown";
}

NoiseFamily parse_noise_family(const std::string& name) {
    if (name == "gaussian" || name == "normal") return NoiseFamily::gaussian;
    if (name == "laplace") return NoiseFamily::laplace;
    if (name == "uniform") return NoiseFamily::uniform;
    throw InvalidInstance("unknown noise family '" + name + "'");
}

double scalar_entropy(NoiseFamily family, double variance) {
    if (!(variance > 0.0)) {
        throw Unsupported("entropy power zero / not supported: singular covariance");
    }
    switch (family) {
        case NoiseFamily::gaussian:
            return 0.5 * std::log(kTwoPiE * variance);
        case NoiseFamily::laplace: {
            // variance = 2 b^2, h = 1 + ln(2b)
            const double b = std::sqrt(variance / 2.0);
            return 1.0 + std::log(2.0 * b);
        }
        case NoiseFamily::uniform: {
            // variance = w^2 / 12, h = ln w
            const double width = std::sqrt(12.0 * variance);
            return std::log(width);
        }
    }
    return 0.0;
}

NoiseModel::NoiseModel(NoiseFamily family, Matrix basis, Vector variances)
    : family_(family), basis_(std::move(basis)), variances_(std::move(variances)) {
    if (variances_.size() == 0) {
        throw InvalidInstance("noise dimension must be positive");
    }
    if ((variances_.array() < 0.0).any()) {
        throw InvalidInstance("noise variances must be nonnegative");
    }
    covariance_ = basis_ * variances_.asDiagonal() * basis_.transpose();
}

NoiseModel NoiseModel::gaussian(const Matrix& covariance) {
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
        throw InvalidInstance("covariance must be square, got " + shape(covariance));
    }
    if (!linalg::is_psd(covariance)) {
        throw InvalidInstance("covariance must be symmetric positive semidefinite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(covariance));
    NoiseModel out(NoiseFamily::gaussian, es.eigenvectors(), es.eigenvalues().cwiseMax(0.0));
    out.covariance_ = linalg::symmetrize(covariance);
    return out;
}

NoiseModel NoiseModel::laplace(const Vector& variances, const Matrix& basis) {
    return NoiseModel(NoiseFamily::laplace, checked_basis(basis, variances.size()), variances);
}

NoiseModel NoiseModel::laplace(const Vector& variances) {
    return laplace(variances, Matrix::Identity(variances.size(), variances.size()));
}

NoiseModel NoiseModel::uniform(const Vector& variances, const Matrix& basis) {
    return NoiseModel(NoiseFamily::uniform, checked_basis(basis, variances.size()), variances);
}

NoiseModel NoiseModel::uniform(const Vector& variances) {
    return uniform(variances, Matrix::Identity(variances.size(), variances.size()));
}

NoiseModel NoiseModel::make(NoiseFamily family, const Matrix& covariance,
                            const std::optional<Matrix>& basis) {
    if (family == NoiseFamily::gaussian) {
        return gaussian(covariance);
    }
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
        throw InvalidInstance("covariance must be square, got " + shape(covariance));
    }
    const Eigen::Index n = covariance.rows();
    const Matrix U = basis ? checked_basis(*basis, n) : Matrix::Identity(n, n);
    const Matrix in_basis = U.transpose() * covariance * U;
    Matrix off = in_basis;
    off.diagonal().setZero();
    const double scale = std::max(1.0, in_basis.cwiseAbs().maxCoeff());
    if (off.cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw InvalidInstance(to_string(family) +
                              " noise requires a covariance that is diagonal in the supplied basis");
    }
    return NoiseModel(family, U, in_basis.diagonal());
}

bool NoiseModel::singular() const { return (variances_.array() <= 0.0).any(); }

double NoiseModel::differential_entropy() const {
    double h = 0.0;
    for (Eigen::Index j = 0; j < variances_.size(); ++j) {
        h += scalar_entropy(family_, variances_(j));
    }
    // Orthogonal change of basis preserves differential entropy.
    return h;
}

double NoiseModel::entropy_power() const {
    const double h = differential_entropy();
    return std::exp(2.0 * h / dim()) / kTwoPiE;
}

double NoiseModel::projected_entropy_power(const Matrix& G) const {
    if (G.cols() != dim() || G.rows() == 0 || G.rows() > dim()) {
        throw InvalidInstance("projection of shape " + shape(G) + " incompatible with noise of dim " +
                              std::to_string(dim()));
    }
    const Eigen::Index l = G.rows();
    if (family_ == NoiseFamily::gaussian) {
        const Matrix cov = G * covariance_ * G.transpose();
        const double logdet = linalg::log_abs_det(cov);
        if (!std::isfinite(logdet)) {
            throw Unsupported("entropy power zero / not supported: projected covariance is singular");
        }
        return std::exp(logdet / static_cast<double>(l));
    }
    const Matrix mix = G * basis_;
    const double scale = mix.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < mix.cols(); ++j) {
        if (mix.col(j).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            support.push_back(j);
        }
    }
    if (static_cast<Eigen::Index>(support.size()) != l) {
        throw Unsupported("entropy power of a mixed projection of " + to_string(family_) +
                          " noise has no closed form");
    }
    Matrix block(l, l);
    double h = 0.0;
    for (Eigen::Index c = 0; c < l; ++c) {
        block.col(c) = mix.col(support[c]);
        h += scalar_entropy(family_, variances_(support[c]));
    }
    const double logdet = linalg::log_abs_det(block);
    if (!std::isfinite(logdet)) {
        throw Unsupported("entropy power zero / not supported: projection is rank deficient");
    }
    h += logdet;
    return std::exp(2.0 * h / static_cast<double>(l)) / kTwoPiE;
}

std::optional<Regularity> NoiseModel::regularity() const {
    if (singular()) {
        return std::nullopt;
    }
    switch (family_) {
        case NoiseFamily::gaussian:
            // Convolution rule with a zero shift: (4/s E|B|, 3/s) with E|B| = 0.
            return Regularity{0.0, 3.0 / variances_.minCoeff()};
        case NoiseFamily::laplace: {
            // |grad f| = f |(sign(z_j)/b_j)_j| away from the coordinate planes.
            double acc = 0.0;
            for (Eigen::Index j = 0; j < variances_.size(); ++j) {
                const double b = std::sqrt(variances_(j) / 2.0);
                acc += 1.0 / (b * b);
            }
            return Regularity{std::sqrt(acc), 0.0};
        }
        case NoiseFamily::uniform:
            return std::nullopt;
    }
    return std::nullopt;
}

Vector NoiseModel::sample(std::mt19937_64& rng) const {
    const Eigen::Index n = variances_.size();
    Vector z(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double var = variances_(j);
        if (var <= 0.0) {
            z(j) = 0.0;
            continue;
        }
        switch (family_) {
            case NoiseFamily::gaussian: {
                std::normal_distribution<double> dist(0.0, std::sqrt(var));
                z(j) = dist(rng);
                break;
            }
            case NoiseFamily::laplace: {
                std::uniform_real_distribution<double> dist(-0.5, 0.5);
                const double u = dist(rng);
                const double b = std::sqrt(var / 2.0);
                z(j) = -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
                break;
            }
            case NoiseFamily::uniform: {
                std::uniform_real_distribution<double> dist(-0.5, 0.5);
                z(j) = dist(rng) * std::sqrt(12.0 * var);
                break;
            }
        }
    }
    return basis_ * z;
}

bool LinearPlant::fully_observed() const {
    return !noise_w.has_value() && C.rows() == A.rows() && C.cols() == A.rows() &&
           C.isIdentity(0.0);
}

LinearPlant LinearPlant::fully_observed_plant(Matrix A, Matrix B, Matrix Q, Matrix R,
                                              NoiseModel noise_v,
                                              std::optional<NoiseModel> noise_x1) {
    const Eigen::Index n = A.rows();
    return LinearPlant{std::move(A), std::move(B), Matrix::Identity(n, n), std::move(Q),
                       std::move(R), std::move(noise_v), std::nullopt, std::move(noise_x1)};
}

void check_dimensions(const LinearPlant& p) {
    std::ostringstream err;
    const Eigen::Index n = p.A.rows();
    if (n == 0 || p.A.cols() != n) {
        err << "A must be square and nonempty, got " << shape(p.A) << "; ";
    }
    if (p.B.rows() != n || p.B.cols() == 0) {
        err << "B must be " << n << "xm with m>=1, got " << shape(p.B) << "; ";
    }
    if (p.C.cols() != n || p.C.rows() == 0) {
        err << "C must be kx" << n << " with k>=1, got " << shape(p.C) << "; ";
    }
    if (p.Q.rows() != n || p.Q.cols() != n) {
        err << "Q must be " << n << "x" << n << ", got " << shape(p.Q) << "; ";
    }
    if (p.R.rows() != p.B.cols() || p.R.cols() != p.B.cols()) {
        err << "R must be " << p.B.cols() << "x" << p.B.cols() << ", got " << shape(p.R) << "; ";
    }
    if (p.noise_v.dim() != n) {
        err << "process noise has dim " << p.noise_v.dim() << ", expected " << n << "; ";
    }
    if (p.noise_w && p.noise_w->dim() != p.C.rows()) {
        err << "observation noise has dim " << p.noise_w->dim() << ", expected " << p.C.rows()
            << "; ";
    }
    if (p.noise_x1 && p.noise_x1->dim() != n) {
        err << "initial-state noise has dim " << p.noise_x1->dim() << ", expected " << n << "; ";
    }
    const std::string msg = err.str();
    if (!msg.empty()) {
        throw InvalidInstance("dimension mismatch: " + msg.substr(0, msg.size() - 2));
    }
}

ValidationReport validate(const LinearPlant& plant) {
    check_dimensions(plant);
    ValidationReport report;
    const int n = plant.n();

    report.rank_B = linalg::numerical_rank(plant.B);
    const int ctrb_rank = linalg::numerical_rank(linalg::controllability_matrix(plant.A, plant.B));
    report.controllable = ctrb_rank == n;
    if (!report.controllable) {
        report.messages.push_back("(A, B) not controllable: rank [B AB ... A^{n-1}B] = " +
                                  std::to_string(ctrb_rank) + " < n = " + std::to_string(n));
    }

    const int obsv_rank = linalg::numerical_rank(linalg::observability_matrix(plant.A, plant.C));
    report.observable = obsv_rank == n;
    if (!report.observable) {
        report.messages.push_back("(A, C) not observable: observability rank = " +
                                  std::to_string(obsv_rank) + " < n = " + std::to_string(n));
    }

    const bool q_ok = linalg::is_psd(plant.Q);
    const bool r_ok = linalg::is_psd(plant.R);
    report.psd_ok = q_ok && r_ok;
    if (!q_ok) report.messages.push_back("Q is not symmetric positive semidefinite");
    if (!r_ok) report.messages.push_back("R is not symmetric positive semidefinite");

    if (!plant.noise_w && !plant.C.isIdentity(0.0)) {
        report.messages.push_back("observation noise absent but C is not the identity");
    }
    return report;
}

}  // namespace ratecost
