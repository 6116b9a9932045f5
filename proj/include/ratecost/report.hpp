#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratecost/bounds.hpp"
#include "ratecost/config.hpp"
#include "ratecost/simloop.hpp"

namespace ratecost {

struct BoundRow {
    double b = 0.0;
    bounds::BoundKind kind = bounds::BoundKind::thm1;
    double nats = 0.0;       // NaN when the row carries only a note
    bool converged = true;   // infimum-based bounds: truncated sequence settled
    std::string note;        // e.g. "infeasible (b <= b_min=...)"
};

struct BoundTable {
    double b_min = 0.0;  // for the configured mode
    std::vector<BoundRow> rows;
    double alpha_n = 0.0;
    double lattice_rho = 1.0;
    std::optional<double> rogers_reference;  // n >= 3 only
};

// Evaluates every configured bound at every configured cost.
BoundTable bound_table(const ExperimentConfig& cfg);

void write_bound_table_csv(std::ostream& out, const BoundTable& table);
nlohmann::json bound_table_json(const BoundTable& table);

inline constexpr const char* kCurveCsvHeader =
    "d,b_hat,h_hat_nats,h_hat_bits,lower_bound_nats,upper_bound_nats,c_hat,e_hat,d_hat,"
    "residual,diverged";

// One row per run: finite points by b_hat, then diverged runs.
void write_curve_csv(std::ostream& out, const TradeoffCurve& curve);
nlohmann::json curve_json(const TradeoffCurve& curve);
nlohmann::json sim_result_json(const SimResult& result);

struct PlotMarker {
    double b = 0.0;
    double h = 0.0;
    bool hollow = false;
};

struct Plot {
    std::string title;
    double b_min = 0.0;
    std::vector<std::pair<double, double>> lower;  // (b, nats)
    std::vector<std::pair<double, double>> upper;
    std::vector<PlotMarker> points;
    std::vector<std::string> notes;  // listed under the axes
};

// Lower/upper curves on a log-spaced cost grid spanning the sweep, plus the
// empirical points. Diverged runs are drawn hollow (if they have a cost) and
// listed.
Plot make_plot(const LinearPlant& plant, const TradeoffCurve& curve);

// Deterministic SVG (fixed canvas, two-decimal coordinates).
std::string render_svg(const Plot& plot);

}  // namespace ratecost
