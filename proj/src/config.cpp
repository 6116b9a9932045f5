#include "ratecost/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ratecost/errors.hpp"

namespace ratecost {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw InvalidInstance(where + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw InvalidInstance(where + ": unknown key '" + key + "'");
        }
    }
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) {
        throw InvalidInstance(what + ": expected a number");
    }
    return j.get<double>();
}

std::vector<double> number_list(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw InvalidInstance(what + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, what));
    return out;
}

void require_increasing(const std::vector<double>& grid, const std::string& what) {
    if (grid.empty()) {
        throw InvalidInstance(what + ": grid is empty");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidInstance(what + ": grid must be strictly increasing");
        }
    }
}

std::int64_t integer(const json& j, const std::string& what) {
    if (!j.is_number_integer()) {
        throw InvalidInstance(what + ": expected an integer");
    }
    return j.get<std::int64_t>();
}

}  // namespace

Matrix parse_matrix(const json& j, const std::string& what) {
    if (j.is_number()) {
        return Matrix::Constant(1, 1, j.get<double>());
    }
    if (!j.is_array() || j.empty()) {
        throw InvalidInstance(what + ": expected a nonempty nested array");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array() || j.front().empty()) {
        throw InvalidInstance(what + ": rows must be nonempty arrays");
    }
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InvalidInstance(what + ": ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            out(r, c) = number(row[static_cast<std::size_t>(c)], what);
        }
    }
    return out;
}

NoiseModel parse_noise(const json& j, const std::string& what) {
    require_keys(j, {"family", "covariance", "basis"}, what);
    if (!j.contains("family") || !j.contains("covariance")) {
        throw InvalidInstance(what + ": 'family' and 'covariance' are required");
    }
    const NoiseFamily family = parse_noise_family(j.at("family").get<std::string>());
    const Matrix cov = parse_matrix(j.at("covariance"), what + ".covariance");
    std::optional<Matrix> basis;
    if (j.contains("basis")) basis = parse_matrix(j.at("basis"), what + ".basis");
    return NoiseModel::make(family, cov, basis);
}

LinearPlant parse_plant(const json& j) {
    require_keys(j, {"A", "B", "C", "Q", "R", "noise_v", "noise_w", "noise_x1"}, "plant");
    for (const char* key : {"A", "B", "Q", "R", "noise_v"}) {
        if (!j.contains(key)) {
            throw InvalidInstance(std::string("plant: missing '") + key + "'");
        }
    }
    LinearPlant plant{
        parse_matrix(j.at("A"), "plant.A"),
        parse_matrix(j.at("B"), "plant.B"),
        Matrix(),
        parse_matrix(j.at("Q"), "plant.Q"),
        parse_matrix(j.at("R"), "plant.R"),
        parse_noise(j.at("noise_v"), "plant.noise_v"),
        std::nullopt,
        std::nullopt,
    };
    plant.C = j.contains("C") ? parse_matrix(j.at("C"), "plant.C")
                              : Matrix::Identity(plant.A.rows(), plant.A.rows());
    if (j.contains("noise_w")) plant.noise_w = parse_noise(j.at("noise_w"), "plant.noise_w");
    if (j.contains("noise_x1")) plant.noise_x1 = parse_noise(j.at("noise_x1"), "plant.noise_x1");
    check_dimensions(plant);
    return plant;
}

ExperimentConfig parse_config(const json& j) {
    require_keys(j,
                 {"plant", "mode", "bounds", "b_grid", "b_offsets", "d_grid", "horizon",
                  "burn_in", "seeds", "i_max", "rogers_c", "lattice", "quantize", "projection",
                  "output"},
                 "config");
    if (!j.contains("plant")) {
        throw InvalidInstance("config: missing 'plant'");
    }
    ExperimentConfig cfg(parse_plant(j.at("plant")));
    if (j.contains("mode")) cfg.mode = parse_loop_mode(j.at("mode").get<std::string>());
    if (cfg.mode == LoopMode::partially_observed && !cfg.plant.noise_w) {
        throw InvalidInstance("config: partially_observed mode needs plant.noise_w");
    }

    if (j.contains("bounds")) {
        if (!j.at("bounds").is_array()) {
            throw InvalidInstance("config.bounds: expected an array of names");
        }
        for (const auto& name : j.at("bounds")) {
            cfg.bounds.push_back(bounds::parse_bound_kind(name.get<std::string>()));
        }
    }
    if (j.contains("b_grid")) {
        cfg.b_grid = number_list(j.at("b_grid"), "config.b_grid");
        require_increasing(cfg.b_grid, "config.b_grid");
    }
    if (j.contains("b_offsets")) {
        cfg.b_offsets = number_list(j.at("b_offsets"), "config.b_offsets");
        require_increasing(cfg.b_offsets, "config.b_offsets");
    }
    if (j.contains("d_grid")) {
        cfg.d_grid = number_list(j.at("d_grid"), "config.d_grid");
        require_increasing(cfg.d_grid, "config.d_grid");
        if (cfg.d_grid.front() <= 0.0) {
            throw InvalidInstance("config.d_grid: distortions must be positive");
        }
    }
    if (!cfg.bounds.empty() && cfg.b_grid.empty() && cfg.b_offsets.empty()) {
        throw InvalidInstance("config: bounds requested without b_grid or b_offsets");
    }
    if (cfg.bounds.empty() && cfg.d_grid.empty()) {
        throw InvalidInstance("config: request at least one bound or a d_grid");
    }

    if (j.contains("horizon")) cfg.horizon = integer(j.at("horizon"), "config.horizon");
    if (j.contains("burn_in")) cfg.burn_in = integer(j.at("burn_in"), "config.burn_in");
    if (cfg.burn_in < 0 || cfg.horizon <= cfg.burn_in) {
        throw InvalidInstance("config: horizon must exceed burn_in");
    }
    if (j.contains("seeds")) {
        const auto& seeds = j.at("seeds");
        if (!seeds.is_array() || seeds.empty()) {
            throw InvalidInstance("config.seeds: expected a nonempty array");
        }
        cfg.seeds.clear();
        for (const auto& s : seeds) {
            if (!s.is_number_unsigned()) {
                throw InvalidInstance("config.seeds: seeds are unsigned 64-bit integers");
            }
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (j.contains("i_max")) {
        cfg.i_max = static_cast<int>(integer(j.at("i_max"), "config.i_max"));
        if (cfg.i_max < 1) throw InvalidInstance("config.i_max: must be >= 1");
    }
    if (j.contains("rogers_c")) cfg.rogers_c = number(j.at("rogers_c"), "config.rogers_c");
    if (j.contains("lattice")) {
        cfg.lattice = parse_lattice_family(j.at("lattice").get<std::string>());
    }
    if (j.contains("quantize")) cfg.quantize = j.at("quantize").get<bool>();
    if (j.contains("projection")) {
        const auto& p = j.at("projection");
        require_keys(p, {"ell", "lambda"}, "config.projection");
        if (p.contains("ell")) {
            cfg.projection_ell = static_cast<int>(integer(p.at("ell"), "config.projection.ell"));
        }
        if (p.contains("lambda")) {
            const auto v = number_list(p.at("lambda"), "config.projection.lambda");
            cfg.projection_lambda = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        require_keys(o, {"dir"}, "config.output");
        if (o.contains("dir")) cfg.output_dir = o.at("dir").get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInstance("cannot open config '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InvalidInstance("config '" + path + "': " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw InvalidInstance("config '" + path + "': " + e.what());
    }
}

SimConfig ExperimentConfig::sim_config(std::uint64_t seed, double distortion) const {
    SimConfig out;
    out.horizon = horizon;
    out.burn_in = burn_in;
    out.seed = seed;
    out.distortion = distortion;
    out.mode = mode;
    out.quantize = quantize;
    out.lattice = lattice;
    return out;
}

std::vector<double> ExperimentConfig::cost_grid(double b_min) const {
    std::vector<double> out = b_grid;
    for (double off : b_offsets) out.push_back(b_min + off);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ratecost
