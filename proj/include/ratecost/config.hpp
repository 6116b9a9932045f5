#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratecost/bounds.hpp"
#include "ratecost/lattice.hpp"
#include "ratecost/simloop.hpp"
#include "ratecost/sysmodel.hpp"

namespace ratecost {

// One experiment: a plant, which bounds to tabulate and/or which simulations
// to run. Deserialized from JSON; matrices are row-major nested arrays.
struct ExperimentConfig {
    explicit ExperimentConfig(LinearPlant p) : plant(std::move(p)) {}

    LinearPlant plant;
    LoopMode mode = LoopMode::fully_observed;

    std::vector<bounds::BoundKind> bounds;
    std::vector<double> b_grid;     // absolute costs
    std::vector<double> b_offsets;  // costs relative to b_min
    std::vector<double> d_grid;     // quantizer distortions for simulate/sweep

    std::int64_t horizon = 1'000'000;
    std::int64_t burn_in = 1000;
    std::vector<std::uint64_t> seeds{1};
    int i_max = 64;
    double rogers_c = 2.0;
    std::optional<LatticeFamily> lattice;
    bool quantize = true;

    std::optional<int> projection_ell;
    std::optional<Vector> projection_lambda;

    std::string output_dir = "out";

    // Simulation settings for one (seed, distortion) pair.
    SimConfig sim_config(std::uint64_t seed, double distortion) const;

    // b_grid followed by b_min + b_offsets, sorted.
    std::vector<double> cost_grid(double b_min) const;
};

Matrix parse_matrix(const nlohmann::json& j, const std::string& what);
NoiseModel parse_noise(const nlohmann::json& j, const std::string& what);
LinearPlant parse_plant(const nlohmann::json& j);

// Throws InvalidInstance with the offending key on schema violations.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace ratecost
