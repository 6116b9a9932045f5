#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "ratecost/bounds.hpp"
#include "ratecost/dpcm.hpp"
#include "ratecost/entropy.hpp"
#include "ratecost/errors.hpp"
#include "ratecost/lattice.hpp"

using namespace ratecost;

namespace {

// Exhaustive nearest point over a box of basis coordinates around the
// rounded solution of G c = x.
double brute_force_distance(const Lattice& lat, const Vector& x, int radius = 3) {
    const int n = lat.dim();
    const Matrix G = lat.generator();
    const Vector c = G.fullPivLu().solve(x);
    IndexVector center(n), offset(n, -radius);
    for (int i = 0; i < n; ++i) center[i] = std::llround(c(i));
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        IndexVector idx(n);
        for (int i = 0; i < n; ++i) idx[i] = center[i] + offset[i];
        best = std::min(best, (lat.point(idx) - x).norm());
        int i = 0;
        while (i < n && offset[i] == radius) offset[i++] = -radius;
        if (i == n) break;
        ++offset[i];
    }
    return best;
}

Vector random_point(std::mt19937_64& rng, int n, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    return x;
}

double ball_volume(int n, double r) {
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(r, n);
}

}  // namespace

TEST_CASE("integer lattice rounds coordinate-wise with ties to even") {
    const auto z = Lattice::integer_z(1);
    CHECK(z.nearest_index(Vector::Constant(1, 0.5)) == IndexVector{0});
    CHECK(z.nearest_index(Vector::Constant(1, 1.5)) == IndexVector{2});
    CHECK(z.nearest_index(Vector::Constant(1, -0.5)) == IndexVector{0});
    CHECK(z.nearest_index(Vector::Constant(1, 2.5)) == IndexVector{2});
    CHECK(z.nearest_index(Vector::Constant(1, -2.7)) == IndexVector{-3});
    CHECK(z.covering_radius() == doctest::Approx(0.5));
    CHECK(z.rho() == doctest::Approx(1.0));
    const auto z3 = Lattice::integer_z(3).scaled(0.1);
    Vector x(3);
    x << 0.26, -0.04, 1.0;
    CHECK(z3.nearest_index(x) == IndexVector{3, 0, 10});
}

TEST_CASE("A2* covering radius is attained at the deep holes") {
    const auto lat = Lattice::a_n_star(2);
    // Largest distance to the lattice found by dense sampling of one cell.
    const Matrix G = lat.generator();
    double worst = 0.0;
    const int grid = 600;
    for (int i = 0; i <= grid; ++i) {
        for (int j = 0; j <= grid; ++j) {
            Vector c(2);
            c << static_cast<double>(i) / grid, static_cast<double>(j) / grid;
            const Vector x = G * c;
            worst = std::max(worst, brute_force_distance(lat, x, 2));
        }
    }
    CHECK(worst <= lat.covering_radius() + 1e-12);
    CHECK(worst == doctest::Approx(lat.covering_radius()).epsilon(2e-3));
    // Hexagonal lattice with minimal distance 2/sqrt(3)*r: r = sqrt(2/9) at unit scale.
    CHECK(lat.covering_radius() == doctest::Approx(std::sqrt(2.0 / 9.0)).epsilon(1e-12));
}

TEST_CASE("property: decoder returns the true nearest point and respects the covering radius") {
    std::mt19937_64 rng(17);
    for (int n = 1; n <= 4; ++n) {
        CAPTURE(n);
        const auto lat = Lattice::for_dimension(n).scaled(0.7);
        int violations = 0;
        for (int t = 0; t < 100000; ++t) {
            const Vector x = random_point(rng, n, 10.0);
            if ((x - lat.nearest(x)).norm() > lat.covering_radius() * (1 + 1e-12)) ++violations;
        }
        CHECK(violations == 0);
        for (int t = 0; t < 2000; ++t) {
            const Vector x = random_point(rng, n, 10.0);
            CHECK((x - lat.nearest(x)).norm() <= brute_force_distance(lat, x) + 1e-12);
        }
    }
}

TEST_CASE("property: lattice points decode to themselves") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> k(-50, 50);
    for (int n = 1; n <= 8; ++n) {
        const auto lat = Lattice::for_dimension(n).scaled(1.3);
        for (int t = 0; t < 200; ++t) {
            IndexVector idx(n);
            for (auto& v : idx) v = k(rng);
            const Vector p = lat.point(idx);
            CHECK((lat.nearest(p) - p).norm() < 1e-9);
        }
    }
}

TEST_CASE("geometric covering efficiency matches the closed form") {
    for (int n = 2; n <= 8; ++n) {
        const auto lat = Lattice::a_n_star(n);
        const double geometric =
            std::pow(ball_volume(n, lat.covering_radius()) / lat.cell_volume(), 1.0 / n);
        CHECK(lat.rho() == doctest::Approx(geometric).epsilon(1e-12));
        CHECK(lat.rho() == doctest::Approx(bounds::rho_a_n_star(n)).epsilon(1e-12));
        // Determinant of A_n^* in its own hyperplane: 1/sqrt(n+1).
        CHECK(lat.cell_volume() == doctest::Approx(1.0 / std::sqrt(n + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("scaling preserves shape and sets the covering radius") {
    for (int n = 1; n <= 5; ++n) {
        const auto base = Lattice::for_dimension(n);
        const auto lat = base.scaled_to_distortion(0.37);
        CHECK(lat.covering_radius() * lat.covering_radius() == doctest::Approx(0.37).epsilon(1e-12));
        CHECK(lat.rho() == doctest::Approx(base.rho()).epsilon(1e-12));
        std::mt19937_64 rng(n);
        for (int t = 0; t < 100; ++t) {
            const Vector x = random_point(rng, n, 3.0);
            CHECK(lat.nearest_index(x * lat.scale()) == base.nearest_index(x));
        }
    }
    CHECK_THROWS_AS(Lattice::integer_z(2).scaled(0.0), InvalidInstance);
    CHECK_THROWS_AS(Lattice::a_n_star(9), InvalidInstance);
    CHECK(parse_lattice_family("An*") == LatticeFamily::a_n_star);
    CHECK(parse_lattice_family(to_string(LatticeFamily::integer_z)) == LatticeFamily::integer_z);
}

TEST_CASE("DPCM hand-computed trace") {
    const Matrix A = Matrix::Constant(1, 1, 2.0);
    const Matrix B = Matrix::Zero(1, 0);
    SUBCASE("unit weight") {
        const auto model = DpcmModel::make(A, B, Matrix::Identity(1, 1), Lattice::integer_z(1));
        auto enc = DpcmState::zero(1);
        auto dec = DpcmState::zero(1);
        const double source[] = {0.3, 1.4, 2.2};
        const IndexVector expected_index[] = {{0}, {1}, {0}};
        const double expected_hat[] = {0.0, 1.0, 2.0};
        for (int i = 0; i < 3; ++i) {
            const auto step = dpcm_encode_step(enc, model, Vector::Constant(1, source[i]));
            CHECK(step.index == expected_index[i]);
            CHECK(step.s_hat(0) == doctest::Approx(expected_hat[i]));
            CHECK(dpcm_decode_step(dec, model, step.index)(0) == step.s_hat(0));
        }
        CHECK(digest(enc) == digest(dec));
        CHECK(enc.trace == dec.trace);
    }
    SUBCASE("weight four halves the step") {
        const auto model = DpcmModel::make(A, B, Matrix::Constant(1, 1, 4.0), Lattice::integer_z(1));
        auto enc = DpcmState::zero(1);
        auto s1 = dpcm_encode_step(enc, model, Vector::Constant(1, 0.3));
        CHECK(s1.index == IndexVector{1});
        CHECK(s1.s_hat(0) == doctest::Approx(0.5));
        auto s2 = dpcm_encode_step(enc, model, Vector::Constant(1, 1.4));
        CHECK(s2.innovation(0) == doctest::Approx(0.4));
        CHECK(s2.index == IndexVector{1});
        CHECK(s2.s_hat(0) == doctest::Approx(1.5));
    }
}

TEST_CASE("DPCM on a noiseless source emits only the zero index") {
    Matrix A(2, 2);
    A << 1.5, 0.2, 0.0, 0.9;
    const auto model = DpcmModel::make(A, Matrix::Zero(2, 0), Matrix::Identity(2, 2),
                                       Lattice::for_dimension(2).scaled_to_distortion(0.1));
    auto enc = DpcmState::zero(2);
    IndexStream stream(2);
    for (int i = 0; i < 200; ++i) stream.push(dpcm_encode_step(enc, model, Vector::Zero(2)).index);
    const auto hist = stream.histogram();
    REQUIRE(hist.size() == 1);
    CHECK(hist.begin()->first == IndexVector{0, 0});
}

TEST_CASE("property: weighted reconstruction error stays inside the covering radius") {
    Matrix A(2, 2), W(2, 2);
    A << 0.9, 0.3, -0.2, 0.8;
    W << 3.0, 0.7, 0.7, 1.0;
    const double d = 0.25;
    const auto model =
        DpcmModel::make(A, Matrix::Zero(2, 0), W, Lattice::for_dimension(2).scaled_to_distortion(d));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    auto enc = DpcmState::zero(2);
    auto dec = DpcmState::zero(2);
    Vector s = Vector::Zero(2);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        Vector v(2);
        v << z(rng), z(rng);
        s = A * s + 3.0 * v;
        const auto step = dpcm_encode_step(enc, model, s);
        dpcm_decode_step(dec, model, step.index);
        const Vector e = s - step.s_hat;
        worst = std::max(worst, e.dot(W * e) / d);
    }
    CHECK(worst <= 1.0 + 1e-9);
}

TEST_CASE("decoder desynchronization is visible in the digest") {
    const auto model = DpcmModel::make(Matrix::Constant(1, 1, 1.2), Matrix::Zero(1, 0),
                                       Matrix::Identity(1, 1), Lattice::integer_z(1));
    auto enc = DpcmState::zero(1);
    auto dec = DpcmState::zero(1);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.0, 2.0);
    double s = 0.0;
    for (int i = 0; i < 50; ++i) {
        s = 1.2 * s + z(rng);
        auto step = dpcm_encode_step(enc, model, Vector::Constant(1, s));
        if (i == 25) step.index[0] += 1;
        dpcm_decode_step(dec, model, step.index);
    }
    CHECK(digest(enc) != digest(dec));
    CHECK_THROWS_WITH_AS(dpcm_decode_step(dec, model, IndexVector{0, 0}),
                         "dpcm: unknown index (dimension 2)", InvalidInstance);
    CHECK_THROWS_AS(DpcmModel::make(Matrix::Identity(1, 1), Matrix::Zero(1, 0),
                                    Matrix::Constant(1, 1, -1.0), Lattice::integer_z(1)),
                    InvalidInstance);
}

TEST_CASE("entropy of explicit histograms") {
    CHECK(entropy_from_counts({100}).plug_in == 0.0);
    CHECK(entropy_from_counts({5, 5, 5, 5}).plug_in == doctest::Approx(std::log(4.0)));
    const auto e = entropy_from_counts({25, 75});
    CHECK(e.plug_in == doctest::Approx(0.5623).epsilon(1e-4));
    CHECK(e.miller_madow == doctest::Approx(e.plug_in + 1.0 / 200.0));
    CHECK(e.support == 2);
    CHECK(e.samples == 100);
    CHECK_THROWS_AS(entropy_from_counts({}), InvalidInstance);
}

TEST_CASE("property: plug-in estimate is consistent on i.i.d. geometric indices") {
    // P(k) = (1 - q) q^k, entropy = -log(1-q) - q log(q) / (1-q).
    for (double q : {0.2, 0.5, 0.8}) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(q * 100));
        std::geometric_distribution<int> g(1 - q);
        IndexStream stream(1);
        const std::size_t total = 200000;
        stream.reserve(total);
        for (std::size_t i = 0; i < total; ++i) stream.push({g(rng)});
        const auto est = empirical_entropy(stream);
        const double truth = -std::log(1 - q) - q * std::log(q) / (1 - q);
        CHECK(std::abs(est.miller_madow - truth) <= 3.0 * est.standard_error + 1e-3);
        CHECK(est.samples == total - kDefaultBurnIn);
        std::uint64_t sum = 0;
        for (const auto& [idx, c] : stream.histogram(kDefaultBurnIn)) sum += c;
        CHECK(sum == total - kDefaultBurnIn);
    }
}

TEST_CASE("index stream serialization") {
    IndexStream stream(2);
    stream.push({1, -2});
    stream.push({0, 5});
    std::ostringstream csv;
    stream.write_csv(csv);
    CHECK(csv.str() == "step,i0,i1\n0,1,-2\n1,0,5\n");

    std::stringstream bin;
    stream.write_binary(bin);
    const auto back = IndexStream::read_binary(bin);
    CHECK(back.dim() == 2);
    REQUIRE(back.size() == 2);
    CHECK(back.at(1) == IndexVector{0, 5});

    std::stringstream truncated(bin.str().substr(0, 20));
    CHECK_THROWS_AS(IndexStream::read_binary(truncated), InvalidInstance);
    CHECK_THROWS_AS(stream.push({1}), InvalidInstance);
    CHECK_THROWS_AS(empirical_entropy(stream), InvalidInstance);
}

TEST_CASE("A2* deep hole sits at the covering radius") {
    const auto lat = Lattice::a_n_star(2);
    const Matrix G = lat.generator();
    const Vector b1 = G.col(0), b2 = G.col(1);
    // In the hexagonal lattice two basis vectors at 60 degrees (b1, b2) or
    // 120 degrees (b1, b1 + b2) span an equilateral Delaunay triangle whose
    // centroid is a deep hole.
    const Vector third = b1.dot(b2) > 0 ? Vector(b2) : Vector(b1 + b2);
    CHECK(b1.norm() == doctest::Approx(third.norm()).epsilon(1e-12));
    CHECK((b1 - third).norm() == doctest::Approx(b1.norm()).epsilon(1e-12));
    const Vector hole = (b1 + third) / 3.0;
    CHECK((hole - lat.nearest(hole)).norm() == doctest::Approx(lat.covering_radius()).epsilon(1e-9));
}

TEST_CASE("worked codec and cell examples") {
    const auto z = Lattice::integer_z(1);
    CHECK(z.nearest_index(Vector::Constant(1, 0.4)) == IndexVector{0});
    const auto quarter = z.scaled_to_distortion(0.25);
    CHECK(quarter.scale() == doctest::Approx(1.0));
    CHECK(quarter.covering_radius() == doctest::Approx(0.5));

    const auto model = DpcmModel::make(Matrix::Identity(1, 1), Matrix::Zero(1, 0),
                                       Matrix::Identity(1, 1), z);
    auto state = DpcmState::zero(1);
    const auto step = dpcm_encode_step(state, model, Vector::Constant(1, 0.4));
    CHECK(step.index == IndexVector{0});
    CHECK(step.s_hat(0) == 0.0);
    CHECK(0.4 - step.s_hat(0) == doctest::Approx(0.4));
}

TEST_CASE("uniform indices over four symbols") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pick(0, 3);
    IndexStream stream(1);
    stream.reserve(1000000);
    for (int i = 0; i < 1000000; ++i) stream.push({pick(rng)});
    const auto est = empirical_entropy(stream);
    CHECK(est.plug_in == doctest::Approx(std::log(4.0)).epsilon(0.01));
    CHECK(est.support == 4);
}
