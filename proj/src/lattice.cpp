#include "ratecost/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "ratecost/errors.hpp"

namespace ratecost {

namespace {

constexpr int kMaxAnStarDim = 8;

// Orthonormal basis of {y in R^{n+1} : sum y = 0} (Helmert columns).
Matrix sum_zero_basis(int n) {
    Matrix E = Matrix::Zero(n + 1, n);
    for (int j = 1; j <= n; ++j) {
        const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
        for (int r = 0; r < j; ++r) E(r, j - 1) = 1.0 / norm;
        E(j, j - 1) = -static_cast<double>(j) / norm;
    }
    return E;
}

// Nearest point of A_n = {z in Z^{n+1} : sum z = 0} to t (t in the
// sum-zero hyperplane): round, then move the coordinates with the largest
// rounding error until the sum vanishes.
Eigen::VectorXd nearest_a_n(const Vector& t) {
    const Eigen::Index dim = t.size();
    Vector f(dim);
    for (Eigen::Index j = 0; j < dim; ++j) f(j) = std::nearbyint(t(j));
    const auto deficiency = static_cast<long>(std::llround(f.sum()));
    if (deficiency == 0) {
        return f;
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), 0);
    // delta_j = t_j - f_j; most negative delta = rounded up the furthest.
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return (t(a) - f(a)) < (t(b) - f(b));
    });
    if (deficiency > 0) {
        for (long c = 0; c < deficiency; ++c) f(order[static_cast<std::size_t>(c)]) -= 1.0;
    } else {
        for (long c = 0; c < -deficiency; ++c) {
            f(order[static_cast<std::size_t>(dim - 1 - c)]) += 1.0;
        }
    }
    return f;
}

bool prefer(const IndexVector& a, const IndexVector& b) {
    const auto parity = [](const IndexVector& v) {
        return std::accumulate(v.begin(), v.end(), std::int64_t{0}) & 1;
    };
    const auto pa = parity(a);
    const auto pb = parity(b);
    if (pa != pb) return pa == 0;
    return a < b;
}

}  // namespace

std::string to_string(LatticeFamily family) {
    switch (family) {
        case LatticeFamily::integer_z: return "integer_z";
        case LatticeFamily::a_n_star: return "a_n_star";
    }
    return "unknown";
}

LatticeFamily parse_lattice_family(const std::string& name) {
    if (name == "integer_z" || name == "Z") return LatticeFamily::integer_z;
    if (name == "a_n_star" || name == "An*") return LatticeFamily::a_n_star;
    throw InvalidInstance("unknown lattice family '" + name + "'");
}

Lattice::Lattice(LatticeFamily family, Matrix base, double base_radius)
    : family_(family), base_(std::move(base)), base_radius_(base_radius) {}

Lattice Lattice::integer_z(int n) {
    if (n < 1) {
        throw InvalidInstance("lattice dimension must be >= 1");
    }
    return Lattice(LatticeFamily::integer_z, Matrix::Identity(n, n), std::sqrt(n) / 2.0);
}

Lattice Lattice::a_n_star(int n) {
    if (n < 1 || n > kMaxAnStarDim) {
        throw InvalidInstance("a_n_star supports dimensions 1.." + std::to_string(kMaxAnStarDim));
    }
    const double nd = n;
    Matrix E = sum_zero_basis(n);
    Matrix base = E.bottomRows(n).transpose();
    Lattice out(LatticeFamily::a_n_star, std::move(base),
                std::sqrt(nd * (nd + 2.0) / (12.0 * (nd + 1.0))));
    out.embedding_ = std::move(E);
    return out;
}

Lattice Lattice::for_dimension(int n) {
    if (n == 1) return integer_z(1);
    if (n >= 2 && n <= kMaxAnStarDim) return a_n_star(n);
    throw InvalidInstance("no lattice configured for dimension " + std::to_string(n));
}

Lattice Lattice::make(LatticeFamily family, int n) {
    return family == LatticeFamily::integer_z ? integer_z(n) : a_n_star(n);
}

double Lattice::cell_volume() const {
    return std::pow(scale_, dim()) * std::abs(base_.determinant());
}

double Lattice::rho() const {
    const double n = dim();
    const double log_ball = 0.5 * n * std::log(std::numbers::pi) +
                            n * std::log(covering_radius()) - std::lgamma(n / 2.0 + 1.0);
    return std::exp((log_ball - std::log(cell_volume())) / n);
}

Lattice Lattice::scaled(double t) const {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidInstance("lattice scale must be positive and finite");
    }
    Lattice out = *this;
    out.scale_ = scale_ * t;
    return out;
}

Lattice Lattice::scaled_to_distortion(double d) const {
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw InvalidInstance("lattice distortion must be positive and finite");
    }
    Lattice out = *this;
    out.scale_ = std::sqrt(d) / base_radius_;
    return out;
}

Vector Lattice::point(const IndexVector& index) const {
    if (static_cast<int>(index.size()) != dim()) {
        throw InvalidInstance("lattice index has dimension " + std::to_string(index.size()) +
                              ", expected " + std::to_string(dim()));
    }
    Vector k(dim());
    for (int j = 0; j < dim(); ++j) k(j) = static_cast<double>(index[static_cast<std::size_t>(j)]);
    return scale_ * (base_ * k);
}

IndexVector Lattice::nearest_index(const Vector& x) const {
    if (x.size() != dim()) {
        throw InvalidInstance("point dimension does not match lattice");
    }
    if (family_ == LatticeFamily::integer_z) {
        IndexVector out(static_cast<std::size_t>(dim()));
        for (int j = 0; j < dim(); ++j) {
            out[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::nearbyint(x(j) / scale_));
        }
        return out;
    }
    return decode_a_n_star(x / scale_);
}

IndexVector Lattice::decode_a_n_star(const Vector& x) const {
    const int n = dim();
    const double nd = n;
    const Vector y = embedding_ * x;

    IndexVector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        Vector glue = Vector::Constant(n + 1, -static_cast<double>(i) / (nd + 1.0));
        for (int j = 1; j <= i; ++j) glue(j) += 1.0;
        const Vector t = y - glue;
        const Vector z = nearest_a_n(t);
        const double dist = (t - z).squaredNorm();

        // The candidate is P_H(k) with k = e_1 + ... + e_i + z; shift k by a
        // multiple of the all-ones vector so that k_0 = 0.
        Vector k = z;
        for (int j = 1; j <= i; ++j) k(j) += 1.0;
        const double k0 = k(0);
        k.array() -= k0;
        IndexVector index(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            index[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::llround(k(j + 1)));
        }

        const double tie = 1e-12 * std::max(1.0, std::min(dist, best_dist));
        if (best.empty() || dist < best_dist - tie) {
            best = std::move(index);
            best_dist = dist;
        } else if (std::abs(dist - best_dist) <= tie && prefer(index, best)) {
            best = std::move(index);
            best_dist = std::min(dist, best_dist);
        }
    }
    return best;
}

}  // namespace ratecost
