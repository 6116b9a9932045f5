#include "ratecost/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "ratecost/errors.hpp"

namespace ratecost::bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<std::pair<BoundKind, const char*>, 12> kKindNames{{
    {BoundKind::thm1, "thm1"},
    {BoundKind::thm3, "thm3"},
    {BoundKind::thm4, "thm4"},
    {BoundKind::thm5, "thm5"},
    {BoundKind::thm7, "thm7"},
    {BoundKind::thm8, "thm8"},
    {BoundKind::slb_thm9, "slb_thm9"},
    {BoundKind::slb_thm11, "slb_thm11"},
    {BoundKind::slb_thm12, "slb_thm12"},
    {BoundKind::upper_thm2, "upper_thm2"},
    {BoundKind::upper_thm6, "upper_thm6"},
    {BoundKind::unstable_floor, "unstable_floor"},
}};

double require_feasible(double b, double bm) {
    if (!(b > bm)) {
        throw InfeasibleCost(b, bm);
    }
    return b - bm;
}

double fully_observed_b_min(const LinearPlant& plant, const ControlRiccati& control) {
    return (plant.noise_v.covariance() * control.S).trace();
}

void require_gaussian(const LinearPlant& plant, const char* who) {
    const bool ok = plant.noise_v.family() == NoiseFamily::gaussian &&
                    (!plant.noise_w || plant.noise_w->family() == NoiseFamily::gaussian) &&
                    (!plant.noise_x1 || plant.noise_x1->family() == NoiseFamily::gaussian);
    if (!ok) {
        throw Unsupported(std::string(who) + " requires Gaussian noises");
    }
}

// log of inf_{1<=i<=i_max} (det(L A^i X A^i' L') / denom)^{1/(2im)}, where
// log_denom = log denom.
//
// Z_i = (A')^i L' is carried as Q_i R_i with Q_i orthonormal (n x m): each
// step re-factors A' Q_{i-1} and accumulates log|det R|, so that
// det(Z_i' X Z_i) = det(R_i)^2 det(Q_i' X Q_i) stays accurate even when the
// powers of A become numerically rank deficient.
struct LogInfimum {
    double log_a = kInf;
    int argmin = 0;
    bool converged = false;
};

LogInfimum infimum_over_powers(const Matrix& A, const Matrix& L, const Matrix& X,
                               double log_denom, int i_max) {
    if (i_max < 1) {
        throw InvalidInstance("i_max must be >= 1");
    }
    const Eigen::Index n = A.rows();
    const Eigen::Index mi = L.rows();
    const double m = static_cast<double>(mi);
    LogInfimum out;

    auto factor = [&](const Matrix& z, Matrix& q) {
        Eigen::HouseholderQR<Matrix> qr(z);
        q = qr.householderQ() * Matrix::Identity(n, mi);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < mi; ++k) {
            acc += std::log(std::abs(qr.matrixQR()(k, k)));
        }
        return acc;
    };

    Matrix Q;
    double log_det_r = factor(L.transpose(), Q);
    double prev = std::nan("");
    double last = std::nan("");
    for (int i = 1; i <= i_max; ++i) {
        log_det_r += factor(A.transpose() * Q, Q);
        if (std::isinf(log_det_r) && log_det_r < 0.0) {
            out.log_a = -kInf;
            out.argmin = i;
            out.converged = true;
            return out;
        }
        const double log_inner = 2.0 * log_det_r + linalg::log_abs_det(Q.transpose() * X * Q);
        const double term = (log_inner - log_denom) / (2.0 * i * m);
        if (term < out.log_a) {
            out.log_a = term;
            out.argmin = i;
        }
        prev = last;
        last = term;
    }
    if (i_max == 1) {
        out.converged = false;
    } else if (std::isinf(last) && std::isinf(prev)) {
        out.converged = true;
    } else {
        const double a_last = std::exp(last);
        const double a_prev = std::exp(prev);
        out.converged = std::abs(a_last - a_prev) <= 1e-9 * std::max(1.0, a_last);
    }
    return out;
}

double log_det_checked(const Matrix& m, const char* what) {
    const double v = linalg::log_abs_det(m);
    if (!std::isfinite(v)) {
        throw InvalidInstance(std::string(what) + " is singular");
    }
    return v;
}

// m/2 log(a^2 / |det A|^{2/m} + x) + log|det A|, in log-space for a.
double lowrank_rate(double log_det_a, double log_a, double m, double x) {
    if (!std::isfinite(log_det_a)) {
        return -kInf;
    }
    const double first = std::exp(2.0 * log_a - 2.0 * log_det_a / m);
    return log_det_a + 0.5 * m * std::log(first + x);
}

}  // namespace

std::string to_string(BoundKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

BoundKind parse_bound_kind(const std::string& name) {
    for (const auto& [k, n] : kKindNames) {
        if (name == n) return k;
    }
    throw InvalidInstance("unknown bound '" + name + "'");
}

// ---------------------------------------------------------------------------
// ProjectionSpec

Matrix ProjectionSpec::pi() const {
    const Eigen::Index n = J.rows();
    Matrix out = Matrix::Zero(n, ell);
    out.topRows(ell).setIdentity();
    return out;
}

Matrix ProjectionSpec::selector() const {
    Eigen::FullPivLU<Matrix> lu(J);
    return lu.inverse().topRows(ell);
}

double ProjectionSpec::a_prime(const Matrix& A) const {
    if (ell == 0) {
        return 1.0;
    }
    const Matrix block = selector() * A * J * pi();
    return std::exp(linalg::log_abs_det(block) / ell);
}

double ProjectionSpec::mu_prime() const {
    if (ell == 0) {
        return 1.0;
    }
    double acc = 0.0;
    for (int i = 0; i < ell; ++i) {
        if (lambda(i) <= 0.0) {
            return 0.0;
        }
        acc += std::log(lambda(i));
    }
    return std::exp(acc / ell);
}

void check_projection(const ProjectionSpec& proj, const Matrix& M) {
    const Eigen::Index n = M.rows();
    if (proj.J.rows() != n || proj.J.cols() != n) {
        throw InvalidInstance("projection: J must be n x n");
    }
    if (proj.ell < 0 || proj.ell > n) {
        throw InvalidInstance("projection: ell must lie in [0, n]");
    }
    if (linalg::numerical_rank(proj.J) != n) {
        throw InvalidInstance("projection: J must be invertible");
    }
    if (proj.lambda.size() != n || (proj.lambda.array() < 0.0).any()) {
        throw InvalidInstance("projection: Lambda must be a nonnegative diagonal of length n");
    }
    const Matrix slack = proj.J.transpose() * M * proj.J - Matrix(proj.lambda.asDiagonal());
    if (!linalg::is_psd(linalg::symmetrize(slack), 1e-9)) {
        throw InvalidInstance("projection: inadmissible Lambda (J'MJ - Lambda not PSD)");
    }
}

int count_unstable(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, false);
    int count = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i)) >= 1.0) ++count;
    }
    return count;
}

double unstable_floor(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, false);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double mag = std::abs(es.eigenvalues()(i));
        if (mag >= 1.0) acc += std::log(mag);
    }
    return acc;
}

ProjectionSpec make_projection(const Matrix& A, const Matrix& M, int ell,
                               const std::optional<Vector>& lambda) {
    const Eigen::Index n = A.rows();
    if (ell < 0 || ell > n) {
        throw InvalidInstance("projection: ell must lie in [0, n]");
    }
    ProjectionSpec proj;
    proj.ell = ell;
    proj.J = Matrix::Identity(n, n);

    if (ell > 0 && ell < n) {
        Eigen::EigenSolver<Matrix> es(A, false);
        std::vector<double> mags;
        for (Eigen::Index i = 0; i < n; ++i) mags.push_back(std::abs(es.eigenvalues()(i)));
        std::sort(mags.begin(), mags.end(), std::greater<>());
        if (!(mags[ell - 1] > mags[ell] * (1.0 + 1e-9))) {
            throw InvalidInstance("projection: eigenvalue magnitudes do not separate at ell = " +
                                  std::to_string(ell));
        }

        // Orthogonal iteration converges to the dominant invariant subspace at
        // rate |lambda_{ell+1}| / |lambda_ell|.
        std::mt19937_64 rng(0x5eed);
        std::normal_distribution<double> normal;
        Matrix Q(n, ell);
        for (Eigen::Index i = 0; i < Q.size(); ++i) Q.data()[i] = normal(rng);
        Q = Eigen::HouseholderQR<Matrix>(Q).householderQ() * Matrix::Identity(n, ell);
        const double a_norm = std::max(1e-300, A.norm());
        bool done = false;
        for (int it = 0; it < 200000 && !done; ++it) {
            Matrix next = A * Q;
            next = Eigen::HouseholderQR<Matrix>(next).householderQ() * Matrix::Identity(n, ell);
            Q = next;
            const Matrix AQ = A * Q;
            const double leak = (AQ - Q * (Q.transpose() * AQ)).norm();
            done = leak <= 1e-13 * a_norm;
        }
        if (!done) {
            throw ConvergenceError("projection: invariant subspace iteration did not converge",
                                   std::nan(""), 200000);
        }
        Eigen::HouseholderQR<Matrix> full(Q);
        Matrix basis = full.householderQ();
        basis.leftCols(ell) = Q;
        proj.J = basis;
    }

    if (lambda) {
        proj.lambda = *lambda;
    } else {
        const double floor = std::max(0.0, linalg::min_eigenvalue(proj.J.transpose() * M * proj.J));
        proj.lambda = Vector::Constant(n, floor);
    }
    check_projection(proj, M);
    return proj;
}

// ---------------------------------------------------------------------------
// Fully observed.

double thm1_lower(const LinearPlant& plant, const ControlRiccati& control,
                  double noise_entropy_power, double b) {
    const double d = require_feasible(b, fully_observed_b_min(plant, control));
    const double n = plant.n();
    const double log_det_a = linalg::log_abs_det(plant.A);
    if (!std::isfinite(log_det_a)) {
        return -kInf;
    }
    const double m_root = std::exp(linalg::log_abs_det(control.M) / n);
    return log_det_a + 0.5 * n * std::log1p(noise_entropy_power * m_root / (d / n));
}

double thm3_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const ProjectionSpec& proj, double b) {
    const double d = require_feasible(b, fully_observed_b_min(plant, control));
    check_projection(proj, control.M);
    if (proj.ell == 0) {
        return 0.0;
    }
    const double l = proj.ell;
    const double a_prime = proj.a_prime(plant.A);
    if (a_prime == 0.0) {
        return -kInf;
    }
    const double n_proj = plant.noise_v.projected_entropy_power(proj.selector());
    return l * std::log(a_prime) + 0.5 * l * std::log1p(proj.mu_prime() * n_proj / (d / l));
}

InfimumBound thm4_lower(const LinearPlant& plant, const ControlRiccati& control, double b,
                        int i_max) {
    const double d = require_feasible(b, fully_observed_b_min(plant, control));
    const double n = plant.n();
    const double m = plant.m();
    const Matrix& sigma_v = plant.noise_v.covariance();
    const Matrix& L = control.L;
    if (linalg::numerical_rank(L) != plant.m()) {
        throw InvalidInstance("thm4 requires rank L = m");
    }
    const double log_det_sigma = log_det_checked(sigma_v, "Sigma_V");
    const double log_det_llt = log_det_checked(L * L.transpose(), "LL'");
    const LogInfimum inf =
        infimum_over_powers(plant.A, L, sigma_v, log_det_sigma + log_det_llt, i_max);

    const Matrix G = control.gain_weight(plant.B, plant.R);
    const double mu = std::exp((linalg::log_abs_det(G) + log_det_llt) / m);
    const double noise_term = std::exp((n / m) * std::log(plant.noise_v.entropy_power()));

    InfimumBound out;
    out.a = std::exp(inf.log_a);
    out.argmin = inf.argmin;
    out.converged = inf.converged;
    out.rate_nats = lowrank_rate(linalg::log_abs_det(plant.A), inf.log_a, m,
                                 mu * noise_term * m / d);
    return out;
}

// ---------------------------------------------------------------------------
// Partially observed.

double thm5_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const FilterRiccati& filter, double b) {
    require_gaussian(plant, "thm5");
    const double d = require_feasible(b, b_min(plant, control, &filter));
    const double n = plant.n();
    const double log_det_a = linalg::log_abs_det(plant.A);
    if (!std::isfinite(log_det_a)) {
        return -kInf;
    }
    const double nm_root =
        std::exp((linalg::log_abs_det(filter.N) + linalg::log_abs_det(control.M)) / n);
    return log_det_a + 0.5 * n * std::log1p(nm_root / (d / n));
}

double thm7_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const FilterRiccati& filter, const ProjectionSpec& proj, double b) {
    require_gaussian(plant, "thm7");
    const double d = require_feasible(b, b_min(plant, control, &filter));
    check_projection(proj, control.M);
    if (proj.ell == 0) {
        return 0.0;
    }
    const double l = proj.ell;
    const double a_prime = proj.a_prime(plant.A);
    if (a_prime == 0.0) {
        return -kInf;
    }
    const Matrix G = proj.selector();
    const double eta_prime = std::exp(linalg::log_abs_det(G * filter.N * G.transpose()) / l);
    return l * std::log(a_prime) + 0.5 * l * std::log1p(eta_prime * proj.mu_prime() / (d / l));
}

InfimumBound thm8_lower(const LinearPlant& plant, const ControlRiccati& control,
                        const FilterRiccati& filter, double b, int i_max) {
    require_gaussian(plant, "thm8");
    const int n = plant.n();
    const int m = plant.m();
    const int k = plant.k();
    if (!(m <= k && k <= n)) {
        throw InvalidInstance("thm8 requires m <= k <= n");
    }
    const double d = require_feasible(b, b_min(plant, control, &filter));
    const Matrix& L = control.L;
    const Matrix& K = filter.K;
    const Matrix& cov = filter.innovation_covariance;
    const double log_det_cov = log_det_checked(cov, "CPC' + Sigma_W");
    const double log_det_llt = log_det_checked(L * L.transpose(), "LL'");
    const double log_det_ktk = log_det_checked(K.transpose() * K, "K'K");

    const Matrix X = K * cov * K.transpose();
    const LogInfimum inf =
        infimum_over_powers(plant.A, L, X, log_det_cov + log_det_llt + log_det_ktk, i_max);

    const double md = m;
    const double eta = std::exp((log_det_cov + log_det_ktk) / md);
    const Matrix G = control.gain_weight(plant.B, plant.R);
    const double mu = std::exp((linalg::log_abs_det(G) + log_det_llt) / md);

    InfimumBound out;
    out.a = std::exp(inf.log_a);
    out.argmin = inf.argmin;
    out.converged = inf.converged;
    out.rate_nats = lowrank_rate(linalg::log_abs_det(plant.A), inf.log_a, md, eta * mu * md / d);
    return out;
}

// ---------------------------------------------------------------------------
// Causal Shannon lower bounds.

double causal_slb(double a, double w, double noise_entropy_power, int n, double d) {
    if (!(d > 0.0)) {
        throw std::domain_error("causal_slb: distortion must be positive");
    }
    if (a < 0.0 || w < 0.0 || n < 1) {
        throw InvalidInstance("causal_slb: requires a >= 0, w >= 0, n >= 1");
    }
    return 0.5 * n * std::log(a * a + w * noise_entropy_power / (d / n));
}

double slb_projected(const Matrix& A, const ProjectionSpec& proj, const Matrix& W,
                     const Matrix& V_w, const NoiseModel& noise, double d) {
    if (!(d > 0.0)) {
        throw std::domain_error("slb_projected: distortion must be positive");
    }
    const Eigen::Index n = A.rows();
    if (W.rows() != n || W.cols() != n || V_w.rows() != n || V_w.cols() != n ||
        noise.dim() != n || proj.J.rows() != n) {
        throw InvalidInstance("slb_projected: shape mismatch");
    }
    const int l = proj.ell;
    if (l < 0 || l > n) {
        throw InvalidInstance("slb_projected: ell must lie in [0, n]");
    }
    if (l > 0 && l < n) {
        const double off = std::max(V_w.topRightCorner(l, n - l).cwiseAbs().maxCoeff(),
                                    V_w.bottomLeftCorner(n - l, l).cwiseAbs().maxCoeff());
        if (off > 1e-12 * std::max(1.0, V_w.cwiseAbs().maxCoeff())) {
            throw InvalidInstance("slb_projected: V must commute with Pi Pi'");
        }
    }
    const Matrix slack = proj.J.transpose() * W * proj.J - V_w.transpose() * V_w;
    if (!linalg::is_psd(linalg::symmetrize(slack), 1e-9)) {
        throw InvalidInstance("slb_projected: inadmissible V (V'V exceeds J'WJ)");
    }
    if (l == 0) {
        return 0.0;
    }
    const Matrix pi = proj.pi();
    const Matrix vv = pi.transpose() * V_w.transpose() * V_w * pi;
    const double w_prime = std::exp(linalg::log_abs_det(vv) / l);
    const double a_prime = proj.a_prime(A);
    const double n_proj = noise.projected_entropy_power(proj.selector());
    return 0.5 * l * std::log(a_prime * a_prime + w_prime * n_proj / (d / l));
}

InfimumBound slb_lowrank(const Matrix& A, const Matrix& L, const Matrix& K,
                         const NoiseModel& noise_prime, double d, int i_max) {
    if (!(d > 0.0)) {
        throw std::domain_error("slb_lowrank: distortion must be positive");
    }
    const Eigen::Index n = A.rows();
    const Eigen::Index m = L.rows();
    const Eigen::Index k = K.cols();
    if (A.cols() != n || L.cols() != n || K.rows() != n || noise_prime.dim() != k) {
        throw InvalidInstance("slb_lowrank: shape mismatch");
    }
    if (!(m <= n && k >= m)) {
        throw InvalidInstance("slb_lowrank: requires m <= n and k >= m");
    }
    const Matrix& sigma = noise_prime.covariance();
    const double log_det_sigma = log_det_checked(sigma, "Sigma_V'");
    const double log_det_llt = log_det_checked(L * L.transpose(), "LL'");
    const double log_det_ktk = log_det_checked(K.transpose() * K, "K'K");
    const LogInfimum inf = infimum_over_powers(A, L, K * sigma * K.transpose(),
                                               log_det_sigma + log_det_llt + log_det_ktk, i_max);
    const double md = static_cast<double>(m);
    const double w = std::exp((log_det_llt + log_det_ktk) / md);
    const double noise_term =
        std::exp((static_cast<double>(k) / md) * std::log(noise_prime.entropy_power()));

    InfimumBound out;
    out.a = std::exp(inf.log_a);
    out.argmin = inf.argmin;
    out.converged = inf.converged;
    out.rate_nats = 0.5 * md * std::log(out.a * out.a + w * noise_term / (d / md));
    return out;
}

// ---------------------------------------------------------------------------
// Lattice quantities.

double alpha_n(int n) {
    const double nd = n;
    return 0.5 * nd * std::log(2.0 * std::numbers::e / nd) + std::lgamma(nd / 2.0 + 1.0);
}

double rho_a_n_star(int n) {
    const double nd = n;
    const double root = std::sqrt(std::numbers::pi) * std::pow(nd + 1.0, 1.0 / (2.0 * nd)) /
                        std::exp(std::lgamma(nd / 2.0 + 1.0) / nd);
    return root * std::sqrt(nd * (nd + 2.0) / (12.0 * (nd + 1.0)));
}

double default_lattice_rho(int n) { return n == 1 ? 1.0 : rho_a_n_star(n); }

double rogers_reference(int n, double c) {
    if (n < 3) {
        throw InvalidInstance("rogers_reference: defined for n >= 3");
    }
    const double nd = n;
    return std::log(std::sqrt(2.0 * std::numbers::pi * std::numbers::e)) *
           (std::log(nd) + std::log(std::log(nd)) + c);
}

double lattice_entropy_upper(const Regularity& reg, int n, double rho, double variance,
                             double entropy_power, double d) {
    if (!(d > 0.0)) {
        throw std::domain_error("lattice_entropy_upper: distortion must be positive");
    }
    if (!(entropy_power > 0.0) || n < 1 || rho < 1.0 - 1e-12) {
        throw InvalidInstance("lattice_entropy_upper: requires N > 0, n >= 1, rho >= 1");
    }
    const double nd = n;
    const double constant = alpha_n(n) + nd * std::log(rho);
    const double sd = std::sqrt(std::max(variance, 0.0));
    auto objective = [&](double dt) {
        const double root = std::sqrt(dt);
        return 0.5 * nd * std::log(entropy_power / (dt / nd)) + constant +
               2.0 * root * (reg.c1 * sd + reg.c0 + reg.c1 * root);
    };

    constexpr int kGrid = 64;
    const double lo = std::log(1e-6 * d);
    const double hi = std::log(d);
    int best = kGrid - 1;
    double best_val = kInf;
    std::array<double, kGrid> xs{};
    for (int i = 0; i < kGrid; ++i) {
        xs[i] = (i == kGrid - 1) ? hi : lo + (hi - lo) * i / (kGrid - 1);
        const double v = objective(std::exp(xs[i]));
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    // Golden-section search on log d~ between the neighbours of the best point.
    double a = xs[std::max(0, best - 1)];
    double b = xs[std::min(kGrid - 1, best + 1)];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = objective(std::exp(x1));
    double f2 = objective(std::exp(x2));
    for (int it = 0; it < 100 && (b - a) > 1e-12; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = objective(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = objective(std::exp(x2));
        }
    }
    return std::min({best_val, f1, f2});
}

UpperBound entropy_cost_upper(const LinearPlant& plant, const ControlRiccati& control,
                              const FilterRiccati* filter, double b, std::optional<double> rho) {
    const int n = plant.n();
    const double nd = n;
    if (linalg::min_eigenvalue(control.M) <= 0.0) {
        throw InvalidInstance("entropy_cost_upper requires M > 0");
    }

    Regularity reg;
    Matrix innovation_cov;
    double noise_power = 0.0;
    double bm = 0.0;
    if (filter == nullptr) {
        bm = fully_observed_b_min(plant, control);
        const auto r = plant.noise_v.regularity();
        if (!r) {
            throw Unsupported("entropy_cost_upper: noise regularity unknown for " +
                              to_string(plant.noise_v.family()) + " noise");
        }
        reg = *r;
        innovation_cov = plant.noise_v.covariance();
        noise_power = plant.noise_v.entropy_power();
    } else {
        require_gaussian(plant, "entropy_cost_upper");
        bm = b_min(plant, control, filter);
        const double lmin = linalg::min_eigenvalue(filter->N);
        if (lmin <= 0.0) {
            throw InvalidInstance("entropy_cost_upper requires N > 0");
        }
        reg = Regularity{0.0, 3.0 / lmin};
        innovation_cov = filter->N;
        noise_power = std::exp(linalg::log_abs_det(filter->N) / nd);
    }
    const double d = require_feasible(b, bm);
    const double lattice_rho = rho.value_or(default_lattice_rho(n));

    const Matrix W = linalg::symmetrize(plant.A.transpose() * control.M * plant.A);
    const double w_min = linalg::min_eigenvalue(W);
    if (w_min <= 0.0) {
        throw InvalidInstance("entropy_cost_upper requires A'MA > 0");
    }
    const Matrix w_inv_sqrt = linalg::inv_sqrt_pd(W);
    const double a_w =
        linalg::max_eigenvalue(w_inv_sqrt * plant.A.transpose() * W * plant.A * w_inv_sqrt);
    const double v = (innovation_cov * W).trace();
    const double weighted_power = noise_power * std::exp(linalg::log_abs_det(W) / nd);
    const double shape = alpha_n(n) + nd * std::log(lattice_rho);

    // Bound for a scheme designed at distortion dd <= d.
    auto at = [&](double dd) {
        UpperBound u;
        u.design_distortion = dd;
        u.shape_term = shape;
        u.leading = filter == nullptr ? thm1_lower(plant, control, noise_power, bm + dd)
                                      : thm5_lower(plant, control, *filter, bm + dd);
        // W^{1/2} applied to the innovation noise, shifted by the bounded
        // reconstruction error |W^{1/2} A (S - S^)| <= (a_W dd)^{1/2}.
        const double c1 = reg.c1 / w_min;
        const double c0 = reg.c0 / std::sqrt(w_min) + c1 * std::sqrt(a_w * dd);
        const double full = lattice_entropy_upper(Regularity{c0, c1}, n, lattice_rho,
                                                  a_w * dd + v, weighted_power, dd);
        const double slb = 0.5 * nd * std::log(weighted_power / (dd / nd)) + shape;
        u.smooth_term = std::max(0.0, full - slb);
        u.rate_nats = u.leading + u.shape_term + u.smooth_term;
        return u;
    };

    // The entropy-cost function is nonincreasing, so any design with cost
    // b_min + dd <= b also bounds H(b).
    constexpr int kDesigns = 48;
    auto log_dd = [&](int k) {
        return std::log(d) + std::log(1e-6) * static_cast<double>(k) / (kDesigns - 1);
    };
    UpperBound best = at(d);
    int best_k = 0;
    for (int k = 1; k < kDesigns; ++k) {
        const UpperBound u = at(std::exp(log_dd(k)));
        if (u.rate_nats < best.rate_nats) {
            best = u;
            best_k = k;
        }
    }
    // Golden-section refinement on log dd between the neighbouring designs.
    double lo = log_dd(std::min(kDesigns - 1, best_k + 1));
    double hi = log_dd(std::max(0, best_k - 1));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    UpperBound u1 = at(std::exp(x1));
    UpperBound u2 = at(std::exp(x2));
    for (int it = 0; it < 80 && (hi - lo) > 1e-10; ++it) {
        if (u1.rate_nats < u2.rate_nats) {
            hi = x2;
            x2 = x1;
            u2 = u1;
            x1 = hi - g * (hi - lo);
            u1 = at(std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            u1 = u2;
            x2 = lo + g * (hi - lo);
            u2 = at(std::exp(x2));
        }
    }
    for (const auto& u : {u1, u2}) {
        if (u.rate_nats < best.rate_nats && u.design_distortion <= d) best = u;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Variable-rate conversions.

double psi(double x) { return x + std::log2(x + 1.0) + std::numbers::log2e; }

double psi_inverse(double y) {
    if (y <= psi(0.0)) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = std::max(1.0, y);
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (psi(mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

VarRateBounds varrate_convert(double rate_lower_bits, double entropy_upper_bits) {
    if (rate_lower_bits < 0.0 || entropy_upper_bits < 0.0) {
        throw InvalidInstance("varrate_convert: inputs must be nonnegative");
    }
    return VarRateBounds{psi_inverse(rate_lower_bits), entropy_upper_bits};
}

}  // namespace ratecost::bounds
