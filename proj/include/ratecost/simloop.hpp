#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ratecost/entropy.hpp"
#include "ratecost/lattice.hpp"
#include "ratecost/riccati.hpp"
#include "ratecost/sysmodel.hpp"

namespace ratecost {

enum class LoopMode { fully_observed, partially_observed };

std::string to_string(LoopMode mode);
LoopMode parse_loop_mode(const std::string& name);

struct SimConfig {
    std::int64_t horizon = 1'000'000;
    std::uint64_t seed = 1;
    double distortion = 1.0;  // squared covering radius of the weighted lattice
    std::int64_t burn_in = static_cast<std::int64_t>(kDefaultBurnIn);
    LoopMode mode = LoopMode::fully_observed;
    // false: the controller receives the encoder's estimate unquantized.
    bool quantize = true;
    // Lattice family; defaults to Lattice::for_dimension(n).
    std::optional<LatticeFamily> lattice;
    int batches = 20;

    // Throws InvalidInstance unless horizon > burn_in >= 0, d > 0, batches >= 2.
    void validate() const;
};

// Everything a run needs from the Riccati solutions, computed once.
struct LoopDesign {
    ControlRiccati control;
    std::optional<FilterRiccati> filter;
    Matrix W;  // A'MA, weight of the innovation quantizer
    Matrix G;  // R + B'SB, weight of the control mismatch
    double b_min = 0.0;

    static LoopDesign make(const LinearPlant& plant, LoopMode mode,
                           const RiccatiOptions& options = {});
};

struct SimResult {
    LoopMode mode = LoopMode::fully_observed;
    double distortion = 0.0;
    std::int64_t steps = 0;  // post-burn-in stages measured

    double b_hat = 0.0;
    double b_hat_se = 0.0;  // batch means
    double c_hat = 0.0;     // v'Sv
    double e_hat = 0.0;     // (x - x^enc)'A'MA(x - x^enc)
    double d_hat = 0.0;     // (u - u*)'(R + B'SB)(u - u*)
    double residual = 0.0;  // b_hat - (c_hat + e_hat + d_hat)
    double residual_se = 0.0;

    std::optional<EntropyEstimate> entropy;  // absent for unquantized runs
    // Plug-in entropy in nats, NaN when absent.
    double h_hat() const;

    // Sample covariance of the encoder-side innovation s_i - (A s_{i-1} + B u_{i-1}).
    Matrix innovation_covariance;

    std::uint64_t encoder_digest = 0;
    std::uint64_t decoder_digest = 0;
    std::uint64_t rng_draws = 0;

    bool diverged = false;
    std::int64_t diverged_step = -1;

    // Steps whose weighted reconstruction error exceeded d (1e-9 relative slack).
    std::int64_t distortion_violations = 0;
    double max_distortion_ratio = 0.0;  // max over steps of error / d
};

// Cost-decomposition view of a result.
struct CostTerms {
    double c = 0.0;
    double e = 0.0;
    double d = 0.0;
    double residual = 0.0;
};

SimResult run_fully_observed(const LinearPlant& plant, const LoopDesign& design,
                             const SimConfig& cfg);
SimResult run_partially_observed(const LinearPlant& plant, const LoopDesign& design,
                                 const SimConfig& cfg);
// Dispatches on cfg.mode.
SimResult simulate(const LinearPlant& plant, const LoopDesign& design, const SimConfig& cfg);

// Requires at least 10^4 measured stages.
CostTerms decompose_cost(const SimResult& result);

struct CurvePoint {
    SimResult result;
    double lower_nats = 0.0;  // matching converse at b_hat (NaN when b_hat <= b_min)
    double upper_nats = 0.0;  // achievability at b_hat (NaN when unavailable)
    bool feasible = true;     // b_hat > b_min
    bool dominates = true;    // h_hat >= lower_nats
};

struct TradeoffCurve {
    LoopMode mode = LoopMode::fully_observed;
    double b_min = 0.0;
    std::vector<CurvePoint> points;    // finite runs, sorted by b_hat
    std::vector<CurvePoint> diverged;  // in grid order

    int dominance_violations() const;
    std::int64_t distortion_violations() const;
    bool ok() const { return dominance_violations() == 0 && distortion_violations() == 0; }
};

// Worker count for `jobs` independent runs: RATECOST_THREADS if set (>= 1),
// otherwise hardware concurrency, never more than jobs.
unsigned sweep_threads(std::size_t jobs);

// Runs cfg at every distortion in d_grid (>= 8 points) in parallel and
// attaches the matching converse and achievability bounds.
TradeoffCurve sweep(const LinearPlant& plant, const SimConfig& cfg,
                    const std::vector<double>& d_grid);

}  // namespace ratecost
