// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ratecost/bounds.hpp"
#include "ratecost/dpcm.hpp"
#include "ratecost/errors.hpp"
#include "ratecost/lattice.hpp"
#include "ratecost/riccati.hpp"
#include "ratecost/simloop.hpp"

using namespace ratecost;
using namespace ratecost::bounds;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

LinearPlant scalar_plant(NoiseModel v = NoiseModel::gaussian(scalar(1.0))) {
    return LinearPlant{scalar(2), scalar(1), scalar(1), scalar(1), scalar(1), std::move(v),
                       NoiseModel::gaussian(scalar(1)), std::nullopt};
}

LinearPlant plant_2x2() {
    Matrix A(2, 2), C(2, 2), sv(2, 2), R(2, 2), sw(2, 2);
    A << 1.2, 0.3, 0.1, 0.7;
    C << 1.0, 0.5, 0.0, 1.0;
    sv << 1.0, 0.2, 0.2, 0.5;
    R << 1.0, 0.0, 0.0, 2.0;
    sw << 0.3, 0.0, 0.0, 0.4;
    return LinearPlant{A, Matrix::Identity(2, 2), C, Matrix::Identity(2, 2), R,
                       NoiseModel::gaussian(sv), NoiseModel::gaussian(sw), std::nullopt};
}

LinearPlant plant_3x3() {
    Matrix A(3, 3), B(3, 3), C(3, 3);
    A << 1.1, 0.2, 0.0, -0.3, 0.9, 0.4, 0.1, 0.0, 1.6;
    B << 1.0, 0.1, 0.0, 0.0, 1.0, 0.2, 0.3, 0.0, 1.0;
    C << 1.0, 0.0, 0.2, 0.1, 1.0, 0.0, 0.0, 0.3, 1.0;
    Matrix Q = Matrix::Identity(3, 3);
    Q(0, 0) = 2.0;
    Vector sv(3);
    sv << 0.5, 1.0, 1.5;
    return LinearPlant{A, B, C, Q, 0.5 * Matrix::Identity(3, 3),
                       NoiseModel::gaussian(Matrix(sv.asDiagonal())),
                       NoiseModel::gaussian(0.2 * Matrix::Identity(3, 3)), std::nullopt};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    }
    return out;
}

SimConfig sim(double d, LoopMode mode, std::uint64_t seed, bool quantize = true) {
    SimConfig cfg;
    cfg.horizon = 1'000'000;
    cfg.distortion = d;
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.quantize = quantize;
    return cfg;
}

// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;
    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

int run(int id, const std::string& title, const std::function<std::string(Check&)>& body) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    std::string summary;
    try {
        summary = body(check);
    } catch (const std::exception& e) {
        check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = check.failures.empty();
    std::printf("%s %d %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), secs,
                summary.empty() ? "" : ": ", summary.c_str());
    for (const auto& f : check.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
    return ok ? 0 : 1;
}

std::string criterion1(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto ctl = solve_control(scalar(2), scalar(1), scalar(1), scalar(1));
    const auto f = solve_filter(scalar(2), scalar(1), scalar(1), scalar(1), scalar(1));
    const double r5 = std::sqrt(5.0);
    const double tol = 1e-9;
    c.require(std::abs(ctl.S(0, 0) - (2 + r5)) <= tol, "S");
    c.require(std::abs(ctl.M(0, 0) - (7 + 3 * r5) / 4) <= tol, "M");
    c.require(std::abs(ctl.L(0, 0) - (1 + r5) / 4) <= tol, "L");
    c.require(std::abs(f.P(0, 0) - (2 + r5)) <= tol, "P");
    const double k = (2 + r5) / (3 + r5);
    c.require(std::abs(f.K(0, 0) - k) <= tol, "K");
    c.require(std::abs(f.Sigma(0, 0) - (1 + r5) / 4) <= tol, "Sigma");
    c.require(std::abs(f.N(0, 0) - (2 + r5) * (2 + r5) / (3 + r5)) <= tol, "N");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(secs < 1.0, "runtime");
    return "S=" + fmt("%.10f", ctl.S(0, 0)) + " N=" + fmt("%.7f", f.N(0, 0));
}

std::string criterion2(Check& c) {
    const auto plant = scalar_plant();
    const auto ctl = solve_control(plant);
    const double s = 2 + std::sqrt(5.0);
    const double m = s * s / (1 + s);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double d = std::pow(10.0, -3.0 + 6.0 * i / 49.0);
        // Gaussian causal rate-distortion of S+ = 2S + V under weight a^2 M.
        const double closed = 0.5 * std::log(4.0 + 4.0 * m / d);
        worst = std::max(worst, rel(thm1_lower(plant, ctl, 1.0, s + d), closed));
    }
    c.require(worst <= 1e-9, "max relative error " + fmt("%.3g", worst));
    return "max rel err " + fmt("%.2e", worst);
}

ProjectionSpec eigen_projection(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    ProjectionSpec p;
    p.J = es.eigenvectors();
    p.ell = static_cast<int>(M.rows());
    p.lambda = es.eigenvalues();
    return p;
}

std::string criterion3(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    int instances = 0;
    for (const auto& plant : {scalar_plant(), plant_2x2(), plant_3x3()}) {
        ++instances;
        const auto ctl = solve_control(plant);
        const auto filt = solve_filter(plant);
        const double bm = b_min(plant, ctl);
        const double bp = b_min(plant, ctl, &filt);
        const int n = plant.n();
        for (double off : {0.05, 1.0, 20.0}) {
            const double t1 = thm1_lower(plant, ctl, plant.noise_v.entropy_power(), bm + off);
            const double t5 = thm5_lower(plant, ctl, filt, bp + off);
            const double e3 = rel(thm3_lower(plant, ctl, eigen_projection(ctl.M), bm + off), t1);
            const double e4 = rel(thm4_lower(plant, ctl, bm + off).rate_nats, t1);
            const double e8 = rel(thm8_lower(plant, ctl, filt, bp + off).rate_nats, t5);

            const Matrix K = plant.A + 0.5 * Matrix::Identity(n, n);
            const auto vprime = NoiseModel::gaussian(0.7 * Matrix::Identity(n, n));
            const double kv = std::exp(
                linalg::log_abs_det(K * vprime.covariance() * K.transpose()) / n);
            const double a = std::exp(linalg::log_abs_det(plant.A) / n);
            const double w = std::exp(linalg::log_abs_det(ctl.L.transpose() * ctl.L) / n);
            const double e12 = rel(slb_lowrank(plant.A, ctl.L, K, vprime, off).rate_nats,
                                   causal_slb(a, w, kv, n, off));
            for (double e : {e3, e4, e8, e12}) worst = std::max(worst, e);
            c.require(e3 <= 1e-9, "thm3 n=" + std::to_string(n));
            c.require(e4 <= 1e-9, "thm4 n=" + std::to_string(n));
            c.require(e8 <= 1e-9, "thm8 n=" + std::to_string(n));
            c.require(e12 <= 1e-9, "slb_thm12 n=" + std::to_string(n));
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(secs < 10.0, "runtime");
    return std::to_string(instances) + " instances, max rel err " + fmt("%.2e", worst);
}

std::string criterion4(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto plant = scalar_plant(NoiseModel::laplace(Vector::Ones(1)));
    const auto curve = sweep(plant, sim(1.0, LoopMode::fully_observed, 7), log_grid(0.4, 28.0, 12));
    c.require(curve.diverged.empty(), "diverged runs");
    c.require(curve.points.size() == 12, "expected 12 points");
    double max_gap = -1.0, first_gap = NAN, last_gap = NAN;
    int in_window = 0;
    for (const auto& p : curve.points) {
        const double b = p.result.b_hat;
        c.require(p.feasible, "b_hat <= b_min at d=" + fmt("%g", p.result.distortion));
        if (!p.feasible) continue;
        const double gap = p.result.h_hat() - p.lower_nats;
        c.require(gap >= 0.0, "below converse at b=" + fmt("%.4f", b));
        if (b >= curve.b_min + 0.1 && b <= curve.b_min + 10.0) {
            ++in_window;
            max_gap = std::max(max_gap, gap);
        }
        if (std::isnan(first_gap)) first_gap = gap;
        last_gap = gap;
    }
    c.require(in_window >= 8, "too few points in [b_min+0.1, b_min+10]");
    c.require(max_gap <= 0.6, "max gap " + fmt("%.4f", max_gap));
    c.require(first_gap <= last_gap, "gap at smallest b exceeds gap at largest b");
    c.require(curve.distortion_violations() == 0, "distortion violations");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(secs < 300.0, "runtime");
    return "max gap " + fmt("%.4f", max_gap) + " nat over " + std::to_string(in_window) +
           " points, gap " + fmt("%.4f", first_gap) + " -> " + fmt("%.4f", last_gap);
}

std::string criterion5(Check& c) {
    const auto plant = scalar_plant();
    const double trace_vs = 2 + std::sqrt(5.0);
    std::ostringstream out;
    for (auto mode : {LoopMode::fully_observed, LoopMode::partially_observed}) {
        const auto design = LoopDesign::make(plant, mode);
        const auto r = simulate(plant, design, sim(1.0, mode, 21));
        const auto terms = decompose_cost(r);
        const std::string tag = to_string(mode);
        c.require(std::abs(terms.residual) <= 3.0 * r.residual_se,
                  tag + " residual " + fmt("%.3g", terms.residual) + " vs 3 SE " +
                      fmt("%.3g", 3.0 * r.residual_se));
        c.require(std::abs(r.c_hat - trace_vs) <= 0.01 * trace_vs, tag + " c_hat " + fmt("%.5f", r.c_hat));
        out << tag << " residual/SE=" << fmt("%.2f", terms.residual / r.residual_se) << " c="
            << fmt("%.4f", r.c_hat) << "; ";
    }
    const auto design = LoopDesign::make(plant, LoopMode::partially_observed);
    const auto r = simulate(plant, design, sim(1.0, LoopMode::partially_observed, 22, false));
    c.require(std::abs(r.b_hat - 15.3262) <= 0.01 * 15.3262, "unquantized partial b_hat " +
                                                                 fmt("%.4f", r.b_hat));
    out << "unquantized partial b=" << fmt("%.4f", r.b_hat);
    return out.str();
}

std::string criterion6(Check& c) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-25.0, 25.0);
    std::int64_t covering = 0;
    for (int n = 1; n <= 4; ++n) {
        const auto lat = Lattice::for_dimension(n).scaled_to_distortion(0.3);
        for (int t = 0; t < 100000; ++t) {
            Vector x(n);
            for (int i = 0; i < n; ++i) x(i) = u(rng);
            if ((x - lat.nearest(x)).norm() > lat.covering_radius() * (1 + 1e-12)) ++covering;
        }
    }
    c.require(covering == 0, std::to_string(covering) + " covering violations");

    const auto plant = scalar_plant();
    std::int64_t steps = 0, violations = 0;
    double worst = 0.0;
    for (auto mode : {LoopMode::fully_observed, LoopMode::partially_observed}) {
        const auto design = LoopDesign::make(plant, mode);
        const auto r = simulate(plant, design, sim(2.0, mode, 31));
        steps += r.steps;
        violations += r.distortion_violations;
        worst = std::max(worst, r.max_distortion_ratio);
        c.require(r.encoder_digest == r.decoder_digest, to_string(mode) + " digests differ");
        const auto again = simulate(plant, design, sim(2.0, mode, 31));
        c.require(again.encoder_digest == r.encoder_digest, to_string(mode) + " not reproducible");
    }
    c.require(violations == 0, std::to_string(violations) + " distortion violations");
    return "0 covering violations in 4x10^5 samples; " + std::to_string(violations) +
           " distortion violations over " + std::to_string(steps) + " steps, max ratio " +
           fmt("%.6f", worst);
}

std::string criterion7(Check& c) {
    const auto plant = scalar_plant();
    const auto ctl = solve_control(plant);
    const double asym = thm1_lower(plant, ctl, 1.0, 1e6);
    c.require(std::abs(asym - std::log(2.0)) <= 1e-3, "thm1(1e6) = " + fmt("%.6f", asym));

    SimConfig cfg = sim(1.0, LoopMode::fully_observed, 41);
    const auto curve = sweep(plant, cfg, log_grid(0.05, 5000.0, 12));
    double lowest = INFINITY;
    int finite = 0;
    for (const auto& p : curve.points) {
        if (!std::isfinite(p.result.b_hat) || !p.result.entropy) continue;
        ++finite;
        lowest = std::min(lowest, p.result.h_hat());
    }
    c.require(finite >= 8, "too few finite-cost runs");
    c.require(lowest >= std::log(2.0) - 0.05, "h_hat " + fmt("%.4f", lowest));
    return "thm1(1e6)=" + fmt("%.6f", asym) + ", min h_hat " + fmt("%.4f", lowest) + " over " +
           std::to_string(finite) + " runs";
}

std::string criterion8(Check& c) {
    const auto plant = scalar_plant();
    const auto ctl = solve_control(plant);
    const auto filt = solve_filter(plant);
    const double bm = b_min(plant, ctl, &filt);
    const double n = filt.N(0, 0);
    // Here N = M, so sqrt(N M) = N.
    const double expected = std::log(2.0) + 0.5 * std::log1p(n * n);
    const double got = thm5_lower(plant, ctl, filt, bm + 1.0);
    c.require(std::abs(got - expected) <= 1e-6, "thm5 " + fmt("%.8f", got));
    c.require(std::abs(n - 3.4270510) <= 1e-7, "N " + fmt("%.8f", n));

    const auto curve = sweep(plant, sim(1.0, LoopMode::partially_observed, 51), log_grid(0.5, 40.0, 8));
    c.require(curve.diverged.empty(), "diverged runs");
    int checked = 0;
    for (const auto& p : curve.points) {
        if (!p.feasible) continue;
        ++checked;
        c.require(p.result.h_hat() >= p.lower_nats,
                  "below converse at b=" + fmt("%.4f", p.result.b_hat));
    }
    c.require(checked >= 6, "too few feasible points");
    return "thm5(b_min+1)=" + fmt("%.6f", got) + ", sweep dominates at " + std::to_string(checked) +
           " points";
}

}  // namespace

int main() {
    int failed = 0;
    failed += run(1, "Riccati oracles", criterion1);
    failed += run(2, "exactness for the scalar Gaussian plant", criterion2);
    failed += run(3, "reduction equalities", criterion3);
    failed += run(4, "Laplace tradeoff curve", criterion4);
    failed += run(5, "separation audit", criterion5);
    failed += run(6, "quantizer properties", criterion6);
    failed += run(7, "asymptote and floor", criterion7);
    failed += run(8, "partially observed converse", criterion8);
    std::printf("%d/8 criteria passed\n", 8 - failed);
    return failed == 0 ? 0 : 1;
}
