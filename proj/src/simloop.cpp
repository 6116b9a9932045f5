#include "ratecost/simloop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include "ratecost/bounds.hpp"
#include "ratecost/dpcm.hpp"
#include "ratecost/errors.hpp"

namespace ratecost {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivergenceNorm = 1e12;

// Substream identifiers; each noise source owns one generator.
enum Stream : std::uint64_t { kStreamV = 0, kStreamW = 1, kStreamX1 = 2 };

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, Stream id) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(0x5eedULL + id)));
}

double quad(const Vector& x, const Matrix& W) { return x.dot(W * x); }

// Batch-means standard error of the overall mean.
double batch_se(const std::vector<double>& sums, const std::vector<std::int64_t>& counts) {
    std::vector<double> means;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        if (counts[b] > 0) means.push_back(sums[b] / static_cast<double>(counts[b]));
    }
    if (means.size() < 2) {
        return kNaN;
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    const double k = static_cast<double>(means.size());
    return std::sqrt(ss / (k - 1.0) / k);
}

SimResult run_loop(const LinearPlant& plant, const LoopDesign& design, const SimConfig& cfg,
                   bool partial) {
    cfg.validate();
    check_dimensions(plant);
    const int n = plant.n();
    const int m = plant.m();
    if (partial) {
        if (!design.filter) {
            throw InvalidInstance("partially observed run needs a filter design");
        }
        if (!plant.noise_w) {
            throw InvalidInstance("partially observed run needs observation noise");
        }
    }

    const Lattice lattice =
        (cfg.lattice ? Lattice::make(*cfg.lattice, n) : Lattice::for_dimension(n))
            .scaled_to_distortion(cfg.distortion);
    const DpcmModel model = DpcmModel::make(plant.A, plant.B, design.W, lattice);
    const Matrix LA = design.control.L * plant.A;

    std::mt19937_64 rng_v = substream(cfg.seed, kStreamV);
    std::mt19937_64 rng_w = substream(cfg.seed, kStreamW);
    std::mt19937_64 rng_x1 = substream(cfg.seed, kStreamX1);

    SimResult out;
    out.mode = partial ? LoopMode::partially_observed : LoopMode::fully_observed;
    out.distortion = cfg.distortion;

    Vector x = Vector::Zero(n);
    if (plant.noise_x1) {
        x = plant.noise_x1->sample(rng_x1);
        out.rng_draws += static_cast<std::uint64_t>(n);
    }

    DpcmState encoder = DpcmState::zero(n);
    DpcmState decoder = DpcmState::zero(n);
    IndexStream stream(n);
    if (cfg.quantize) stream.reserve(static_cast<std::size_t>(cfg.horizon));

    Vector s_prev = Vector::Zero(n);  // encoder-side estimate at i - 1
    Vector u_prev = Vector::Zero(m);
    Matrix innovation_sum = Matrix::Zero(n, n);

    const auto batches = static_cast<std::size_t>(cfg.batches);
    const std::int64_t window = cfg.horizon - cfg.burn_in;
    const std::int64_t batch_len = std::max<std::int64_t>(1, window / cfg.batches);
    std::vector<double> stage_sums(batches, 0.0);
    std::vector<double> residual_sums(batches, 0.0);
    std::vector<std::int64_t> batch_counts(batches, 0);
    double sum_stage = 0.0, sum_c = 0.0, sum_e = 0.0, sum_d = 0.0;
    const double limit = cfg.distortion * (1.0 + 1e-9);

    for (std::int64_t i = 0; i < cfg.horizon; ++i) {
        // Encoder-side estimate s of the state.
        const Vector prior = plant.A * s_prev + plant.B * u_prev;
        Vector s;
        if (partial) {
            const Vector w = plant.noise_w->sample(rng_w);
            out.rng_draws += static_cast<std::uint64_t>(w.size());
            const Vector y = plant.C * x + w;
            s = prior + design.filter->K * (y - plant.C * prior);
        } else {
            s = x;
        }

        Vector x_ctrl;
        if (cfg.quantize) {
            const EncodedStep enc = dpcm_encode_step(encoder, model, s, &u_prev);
            stream.push(enc.index);
            x_ctrl = dpcm_decode_step(decoder, model, enc.index, &u_prev);
            const double werr = quad(s - x_ctrl, design.W);
            out.max_distortion_ratio = std::max(out.max_distortion_ratio, werr / cfg.distortion);
            if (werr > limit) ++out.distortion_violations;
        } else {
            x_ctrl = s;
        }

        const Vector u = -LA * x_ctrl;
        const Vector u_star = -LA * s;
        const Vector v = plant.noise_v.sample(rng_v);
        out.rng_draws += static_cast<std::uint64_t>(n);

        if (i >= cfg.burn_in) {
            const Vector innovation = s - prior;
            innovation_sum += innovation * innovation.transpose();
            const double stage = quad(x, plant.Q) + quad(u, plant.R);
            const double c = quad(v, design.control.S);
            const double e = quad(x - s, design.W);
            const double d = quad(u - u_star, design.G);
            sum_stage += stage;
            sum_c += c;
            sum_e += e;
            sum_d += d;
            const auto b = std::min<std::size_t>(
                static_cast<std::size_t>((i - cfg.burn_in) / batch_len), batches - 1);
            stage_sums[b] += stage;
            residual_sums[b] += stage - (c + e + d);
            ++batch_counts[b];
            ++out.steps;
        }

        x = plant.A * x + plant.B * u + v;
        s_prev = std::move(s);
        u_prev = u;
        if (!x.allFinite() || x.norm() > kDivergenceNorm) {
            out.diverged = true;
            out.diverged_step = i;
            break;
        }
    }

    const double steps = static_cast<double>(out.steps);
    if (out.steps > 0) {
        out.b_hat = sum_stage / steps;
        out.c_hat = sum_c / steps;
        out.e_hat = sum_e / steps;
        out.d_hat = sum_d / steps;
        out.residual = out.b_hat - (out.c_hat + out.e_hat + out.d_hat);
        out.innovation_covariance = innovation_sum / steps;
    } else {
        out.b_hat = out.c_hat = out.e_hat = out.d_hat = out.residual = kNaN;
        out.innovation_covariance = Matrix::Constant(n, n, kNaN);
    }
    out.b_hat_se = batch_se(stage_sums, batch_counts);
    out.residual_se = batch_se(residual_sums, batch_counts);
    out.encoder_digest = encoder.trace;
    out.decoder_digest = decoder.trace;
    const auto burn_in = static_cast<std::size_t>(cfg.burn_in);
    if (cfg.quantize && !out.diverged && stream.size() > burn_in + 1000) {
        out.entropy = empirical_entropy(stream, burn_in);
    }
    return out;
}

}  // namespace

std::string to_string(LoopMode mode) {
    return mode == LoopMode::fully_observed ? "fully_observed" : "partially_observed";
}

LoopMode parse_loop_mode(const std::string& name) {
    if (name == "fully_observed") return LoopMode::fully_observed;
    if (name == "partially_observed") return LoopMode::partially_observed;
    throw InvalidInstance("unknown mode '" + name + "'");
}

void SimConfig::validate() const {
    if (burn_in < 0 || horizon <= burn_in) {
        throw InvalidInstance("simulation: horizon must exceed burn_in");
    }
    if (!(distortion > 0.0) || !std::isfinite(distortion)) {
        throw InvalidInstance("simulation: distortion must be positive");
    }
    if (batches < 2) {
        throw InvalidInstance("simulation: at least two batches are required");
    }
}

LoopDesign LoopDesign::make(const LinearPlant& plant, LoopMode mode,
                            const RiccatiOptions& options) {
    LoopDesign out;
    out.control = solve_control(plant, options);
    if (mode == LoopMode::partially_observed) {
        out.filter = solve_filter(plant, options);
    }
    out.W = linalg::symmetrize(plant.A.transpose() * out.control.M * plant.A);
    out.G = linalg::symmetrize(out.control.gain_weight(plant.B, plant.R));
    out.b_min = ratecost::b_min(plant, out.control, out.filter ? &*out.filter : nullptr);
    return out;
}

double SimResult::h_hat() const { return entropy ? entropy->plug_in : kNaN; }

SimResult run_fully_observed(const LinearPlant& plant, const LoopDesign& design,
                             const SimConfig& cfg) {
    return run_loop(plant, design, cfg, false);
}

SimResult run_partially_observed(const LinearPlant& plant, const LoopDesign& design,
                                 const SimConfig& cfg) {
    return run_loop(plant, design, cfg, true);
}

SimResult simulate(const LinearPlant& plant, const LoopDesign& design, const SimConfig& cfg) {
    return cfg.mode == LoopMode::fully_observed ? run_fully_observed(plant, design, cfg)
                                                : run_partially_observed(plant, design, cfg);
}

CostTerms decompose_cost(const SimResult& result) {
    if (result.steps < 10'000) {
        throw InvalidInstance("decompose: at least 10^4 measured steps are required");
    }
    return CostTerms{result.c_hat, result.e_hat, result.d_hat, result.residual};
}

int TradeoffCurve::dominance_violations() const {
    int count = 0;
    for (const auto& p : points) {
        if (!p.dominates) ++count;
    }
    return count;
}

std::int64_t TradeoffCurve::distortion_violations() const {
    std::int64_t count = 0;
    for (const auto& p : points) count += p.result.distortion_violations;
    for (const auto& p : diverged) count += p.result.distortion_violations;
    return count;
}

unsigned sweep_threads(std::size_t jobs) {
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RATECOST_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) threads = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, jobs)));
}

TradeoffCurve sweep(const LinearPlant& plant, const SimConfig& cfg,
                    const std::vector<double>& d_grid) {
    if (d_grid.size() < 8) {
        throw InvalidInstance("sweep: the distortion grid needs at least 8 points");
    }
    cfg.validate();
    const LoopDesign design = LoopDesign::make(plant, cfg.mode);

    std::vector<SimResult> results(d_grid.size());
    std::vector<std::exception_ptr> errors(d_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < d_grid.size(); j = next++) {
            try {
                SimConfig c = cfg;
                c.distortion = d_grid[j];
                results[j] = simulate(plant, design, c);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const unsigned threads = sweep_threads(d_grid.size());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    TradeoffCurve curve;
    curve.mode = cfg.mode;
    curve.b_min = design.b_min;
    const FilterRiccati* filter = design.filter ? &*design.filter : nullptr;
    for (auto& r : results) {
        CurvePoint p;
        p.result = std::move(r);
        if (p.result.diverged) {
            p.lower_nats = p.upper_nats = kNaN;
            p.feasible = false;
            curve.diverged.push_back(std::move(p));
            continue;
        }
        const double b = p.result.b_hat;
        p.feasible = b > design.b_min;
        p.lower_nats = kNaN;
        p.upper_nats = kNaN;
        if (p.feasible) {
            try {
                p.lower_nats = filter == nullptr
                                   ? bounds::thm1_lower(plant, design.control,
                                                        plant.noise_v.entropy_power(), b)
                                   : bounds::thm5_lower(plant, design.control, *filter, b);
            } catch (const Unsupported&) {
            }
            try {
                p.upper_nats = bounds::entropy_cost_upper(plant, design.control, filter, b).rate_nats;
            } catch (const std::exception&) {
            }
        }
        const double h = p.result.h_hat();
        p.dominates = !(std::isfinite(p.lower_nats) && std::isfinite(h)) || h >= p.lower_nats;
        curve.points.push_back(std::move(p));
    }
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) {
                         return a.result.b_hat < b.result.b_hat;
                     });
    return curve;
}

}  // namespace ratecost
