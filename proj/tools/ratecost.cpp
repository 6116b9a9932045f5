// ratecost: command-line front end for the rate-cost bounds and the
// closed-loop DPCM simulations.
//
//   ratecost bound     --config exp.json [--format csv|json] [--out dir]
//   ratecost simulate  --config exp.json [--seed N] [--out dir]
//   ratecost sweep     --config exp.json [--seed N] [--out dir] [--svg]
//   ratecost decompose --config exp.json [--seed N]
//   ratecost validate  --config exp.json
//
// Exit status: 0 on success, 1 when a hard check failed (converse dominance,
// per-step distortion guarantee, plant validation), 2 on configuration or
// numerical errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ratecost/bounds.hpp"
#include "ratecost/config.hpp"
#include "ratecost/errors.hpp"
#include "ratecost/report.hpp"
#include "ratecost/simloop.hpp"

namespace fs = std::filesystem;
using namespace ratecost;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    bool svg = false;
};

fs::path output_dir(const Options& opt, const ExperimentConfig& cfg) {
    fs::path dir = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
}

std::vector<std::uint64_t> seeds_for(const Options& opt, const ExperimentConfig& cfg) {
    if (opt.seed) return {*opt.seed};
    return cfg.seeds;
}

void print_result(const SimResult& r) {
    std::printf("d=%-10.6g b_hat=%-10.6g (se %.3g) h_hat=%s nats  c=%.6g e=%.6g d=%.6g "
                "residual=%.3g%s%s\n",
                r.distortion, r.b_hat, r.b_hat_se,
                r.entropy ? std::to_string(r.entropy->plug_in).c_str() : "n/a", r.c_hat, r.e_hat,
                r.d_hat, r.residual, r.diverged ? "  DIVERGED" : "",
                r.distortion_violations > 0 ? "  DISTORTION-VIOLATION" : "");
}

int cmd_bound(const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    if (cfg.bounds.empty()) {
        throw InvalidInstance("config requests no bounds");
    }
    const BoundTable table = bound_table(cfg);
    std::ostringstream body;
    if (opt.format == "json") {
        body << bound_table_json(table).dump(2) << '\n';
    } else {
        write_bound_table_csv(body, table);
    }
    std::cout << body.str();
    if (!opt.out.empty()) {
        write_file(output_dir(opt, cfg) / ("bounds." + opt.format), body.str());
    }
    return 0;
}

int cmd_simulate(const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    if (cfg.d_grid.empty()) {
        throw InvalidInstance("config: simulate needs a nonempty d_grid");
    }
    const LoopDesign design = LoopDesign::make(cfg.plant, cfg.mode);
    nlohmann::json runs = nlohmann::json::array();
    TradeoffCurve rows;
    rows.mode = cfg.mode;
    rows.b_min = design.b_min;
    bool failed = false;
    for (std::uint64_t seed : seeds_for(opt, cfg)) {
        for (double d : cfg.d_grid) {
            const SimResult r = simulate(cfg.plant, design, cfg.sim_config(seed, d));
            print_result(r);
            failed = failed || r.distortion_violations > 0;
            nlohmann::json j = sim_result_json(r);
            j["seed"] = seed;
            runs.push_back(j);
            CurvePoint p;
            p.result = r;
            p.lower_nats = p.upper_nats = std::numeric_limits<double>::quiet_NaN();
            (r.diverged ? rows.diverged : rows.points).push_back(p);
        }
    }
    const fs::path dir = output_dir(opt, cfg);
    if (opt.format == "json") {
        write_file(dir / "simulate.json", runs.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        write_curve_csv(csv, rows);
        write_file(dir / "simulate.csv", csv.str());
    }
    return failed ? 1 : 0;
}

int cmd_sweep(const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    const std::uint64_t seed = seeds_for(opt, cfg).front();
    const TradeoffCurve curve = sweep(cfg.plant, cfg.sim_config(seed, 1.0), cfg.d_grid);
    for (const auto& p : curve.points) {
        print_result(p.result);
    }
    for (const auto& p : curve.diverged) {
        print_result(p.result);
    }
    std::printf("b_min=%.10g dominance_violations=%d distortion_violations=%lld\n", curve.b_min,
                curve.dominance_violations(),
                static_cast<long long>(curve.distortion_violations()));

    const fs::path dir = output_dir(opt, cfg);
    if (opt.format == "json") {
        write_file(dir / "curve.json", curve_json(curve).dump(2) + "\n");
    } else {
        std::ostringstream csv;
        write_curve_csv(csv, curve);
        write_file(dir / "curve.csv", csv.str());
    }
    if (opt.svg) {
        write_file(dir / "curve.svg", render_svg(make_plot(cfg.plant, curve)));
    }
    return curve.ok() ? 0 : 1;
}

int cmd_decompose(const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    if (cfg.d_grid.empty() && cfg.quantize) {
        throw InvalidInstance("config: decompose needs a d_grid (or quantize=false)");
    }
    const LoopDesign design = LoopDesign::make(cfg.plant, cfg.mode);
    const double c_ref = (cfg.plant.noise_v.covariance() * design.control.S).trace();
    const double e_ref =
        design.filter ? (design.filter->Sigma * design.W).trace() : 0.0;
    std::printf("reference: tr(Sigma_V S)=%.10g tr(Sigma A'MA)=%.10g b_min=%.10g\n", c_ref,
                e_ref, design.b_min);
    std::printf("%-12s %-14s %-14s %-14s %-14s %-14s %-12s\n", "d", "b_hat", "c_hat", "e_hat",
                "d_hat", "residual", "3*se(b_hat)");
    bool failed = false;
    const std::vector<double> grid = cfg.d_grid.empty() ? std::vector<double>{1.0} : cfg.d_grid;
    for (std::uint64_t seed : seeds_for(opt, cfg)) {
        for (double d : grid) {
            const SimResult r = simulate(cfg.plant, design, cfg.sim_config(seed, d));
            const CostTerms t = decompose_cost(r);
            std::printf("%-12.6g %-14.8g %-14.8g %-14.8g %-14.8g %-14.6g %-12.6g\n", d, r.b_hat,
                        t.c, t.e, t.d, t.residual, 3.0 * r.b_hat_se);
            failed = failed || r.distortion_violations > 0;
        }
    }
    return failed ? 1 : 0;
}

int cmd_validate(const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    const ValidationReport report = validate(cfg.plant);
    std::printf("n=%d m=%d k=%d controllable=%s observable=%s rank_B=%d psd=%s\n", cfg.plant.n(),
                cfg.plant.m(), cfg.plant.k(), report.controllable ? "yes" : "no",
                report.observable ? "yes" : "no", report.rank_B, report.psd_ok ? "yes" : "no");
    for (const auto& msg : report.messages) std::printf("  %s\n", msg.c_str());
    std::printf("%s\n", report.ok() ? "ok" : "issues found");
    return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate-cost bounds and DPCM closed-loop simulation"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--format", opt.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };
    auto* bound = app.add_subcommand("bound", "tabulate converse and achievability bounds");
    auto* simulate_cmd = app.add_subcommand("simulate", "run the closed loop at each distortion");
    auto* sweep_cmd = app.add_subcommand("sweep", "tradeoff curve against the matching bounds");
    auto* decompose = app.add_subcommand("decompose", "split the simulated cost into c, e, d");
    auto* validate_cmd = app.add_subcommand("validate", "check plant dimensions and ranks");
    for (auto* sub : {bound, simulate_cmd, sweep_cmd, decompose, validate_cmd}) add_common(sub);
    for (auto* sub : {simulate_cmd, sweep_cmd, decompose}) {
        sub->add_option("--seed", opt.seed, "override the configured seeds");
    }
    sweep_cmd->add_flag("--svg", opt.svg, "also render curve.svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; usage errors share the error code.
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        if (bound->parsed()) return cmd_bound(opt);
        if (simulate_cmd->parsed()) return cmd_simulate(opt);
        if (sweep_cmd->parsed()) return cmd_sweep(opt);
        if (decompose->parsed()) return cmd_decompose(opt);
        if (validate_cmd->parsed()) return cmd_validate(opt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
