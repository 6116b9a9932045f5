#include "ratecost/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "ratecost/errors.hpp"

namespace ratecost {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json json_num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct BoundContext {
    const ExperimentConfig& cfg;
    ControlRiccati control;
    std::optional<FilterRiccati> filter;
    std::string filter_error;
    double b_min_full = 0.0;
    double b_min_partial = kNaN;
};

const FilterRiccati& need_filter(const BoundContext& ctx) {
    if (!ctx.filter) {
        throw Unsupported(ctx.filter_error);
    }
    return *ctx.filter;
}

bounds::ProjectionSpec projection_for(const BoundContext& ctx) {
    const LinearPlant& plant = ctx.cfg.plant;
    const int ell = ctx.cfg.projection_ell.value_or(bounds::count_unstable(plant.A));
    return bounds::make_projection(plant.A, ctx.control.M, ell, ctx.cfg.projection_lambda);
}

BoundRow evaluate(const BoundContext& ctx, bounds::BoundKind kind, double b) {
    using bounds::BoundKind;
    const LinearPlant& plant = ctx.cfg.plant;
    BoundRow row;
    row.b = b;
    row.kind = kind;
    row.nats = kNaN;
    try {
        switch (kind) {
            case BoundKind::thm1:
                row.nats = bounds::thm1_lower(plant, ctx.control, plant.noise_v.entropy_power(), b);
                break;
            case BoundKind::thm3:
                row.nats = bounds::thm3_lower(plant, ctx.control, projection_for(ctx), b);
                break;
            case BoundKind::thm4: {
                const auto r = bounds::thm4_lower(plant, ctx.control, b, ctx.cfg.i_max);
                row.nats = r.rate_nats;
                row.converged = r.converged;
                break;
            }
            case BoundKind::thm5:
                row.nats = bounds::thm5_lower(plant, ctx.control, need_filter(ctx), b);
                break;
            case BoundKind::thm7:
                row.nats =
                    bounds::thm7_lower(plant, ctx.control, need_filter(ctx), projection_for(ctx), b);
                break;
            case BoundKind::thm8: {
                const auto r =
                    bounds::thm8_lower(plant, ctx.control, need_filter(ctx), b, ctx.cfg.i_max);
                row.nats = r.rate_nats;
                row.converged = r.converged;
                break;
            }
            case BoundKind::slb_thm9: {
                // Source A S + V with weight A'MA at distortion b - b_min.
                if (!(b > ctx.b_min_full)) throw InfeasibleCost(b, ctx.b_min_full);
                const double n = plant.n();
                const Matrix W = plant.A.transpose() * ctx.control.M * plant.A;
                row.nats = bounds::causal_slb(std::exp(linalg::log_abs_det(plant.A) / n),
                                              std::exp(linalg::log_abs_det(W) / n),
                                              plant.noise_v.entropy_power(), plant.n(),
                                              b - ctx.b_min_full);
                break;
            }
            case BoundKind::slb_thm11: {
                if (!(b > ctx.b_min_full)) throw InfeasibleCost(b, ctx.b_min_full);
                const auto proj = projection_for(ctx);
                const Matrix W = linalg::symmetrize(plant.A.transpose() * ctx.control.M * plant.A);
                const double floor =
                    std::max(0.0, linalg::min_eigenvalue(proj.J.transpose() * W * proj.J));
                const Matrix V_w = std::sqrt(floor) * Matrix::Identity(plant.n(), plant.n());
                row.nats = bounds::slb_projected(plant.A, proj, W, V_w, plant.noise_v,
                                                 b - ctx.b_min_full);
                break;
            }
            case BoundKind::slb_thm12: {
                if (!(b > ctx.b_min_full)) throw InfeasibleCost(b, ctx.b_min_full);
                const Matrix G = ctx.control.gain_weight(plant.B, plant.R);
                const Matrix L = linalg::sqrt_psd(linalg::symmetrize(G)) * ctx.control.L * plant.A;
                const auto r = bounds::slb_lowrank(plant.A, L, Matrix::Identity(plant.n(), plant.n()),
                                                   plant.noise_v, b - ctx.b_min_full, ctx.cfg.i_max);
                row.nats = r.rate_nats;
                row.converged = r.converged;
                break;
            }
            case BoundKind::upper_thm2:
                row.nats = bounds::entropy_cost_upper(plant, ctx.control, nullptr, b).rate_nats;
                break;
            case BoundKind::upper_thm6:
                row.nats =
                    bounds::entropy_cost_upper(plant, ctx.control, &need_filter(ctx), b).rate_nats;
                break;
            case BoundKind::unstable_floor:
                row.nats = bounds::unstable_floor(plant.A);
                break;
        }
    } catch (const InfeasibleCost& e) {
        row.note = e.what();
    } catch (const Unsupported& e) {
        row.note = std::string("unsupported: ") + e.what();
    } catch (const InvalidInstance& e) {
        row.note = std::string("invalid: ") + e.what();
    } catch (const std::domain_error& e) {
        row.note = std::string("invalid: ") + e.what();
    }
    return row;
}

}  // namespace

BoundTable bound_table(const ExperimentConfig& cfg) {
    BoundContext ctx{cfg, solve_control(cfg.plant), std::nullopt, {}, 0.0, kNaN};
    ctx.b_min_full = b_min(cfg.plant, ctx.control);
    if (cfg.plant.noise_w) {
        try {
            ctx.filter = solve_filter(cfg.plant);
            ctx.b_min_partial = b_min(cfg.plant, ctx.control, &*ctx.filter);
        } catch (const std::exception& e) {
            ctx.filter_error = e.what();
        }
    } else {
        ctx.filter_error = "plant has no observation noise";
    }

    BoundTable table;
    table.b_min =
        cfg.mode == LoopMode::partially_observed ? ctx.b_min_partial : ctx.b_min_full;
    const int n = cfg.plant.n();
    table.alpha_n = bounds::alpha_n(n);
    table.lattice_rho = bounds::default_lattice_rho(n);
    if (n >= 3) table.rogers_reference = bounds::rogers_reference(n, cfg.rogers_c);
    for (double b : cfg.cost_grid(table.b_min)) {
        for (auto kind : cfg.bounds) table.rows.push_back(evaluate(ctx, kind, b));
    }
    return table;
}

void write_bound_table_csv(std::ostream& out, const BoundTable& table) {
    out << "b,bound,nats,bits,converged,note\n";
    for (const auto& r : table.rows) {
        out << num(r.b) << ',' << bounds::to_string(r.kind) << ',' << num(r.nats) << ','
            << num(bounds::nats_to_bits(r.nats)) << ',' << (r.converged ? 1 : 0) << ",\""
            << r.note << "\"\n";
    }
}

json bound_table_json(const BoundTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"b", r.b},
                        {"bound", bounds::to_string(r.kind)},
                        {"nats", json_num(r.nats)},
                        {"bits", json_num(bounds::nats_to_bits(r.nats))},
                        {"converged", r.converged},
                        {"note", r.note}});
    }
    json out{{"b_min", json_num(table.b_min)},
             {"alpha_n", table.alpha_n},
             {"lattice_rho", table.lattice_rho},
             {"rows", rows}};
    if (table.rogers_reference) out["rogers_reference"] = *table.rogers_reference;
    return out;
}

void write_curve_csv(std::ostream& out, const TradeoffCurve& curve) {
    out << kCurveCsvHeader << '\n';
    auto row = [&](const CurvePoint& p) {
        const SimResult& r = p.result;
        const double h = r.h_hat();
        out << num(r.distortion) << ',' << num(r.b_hat) << ',' << num(h) << ','
            << num(bounds::nats_to_bits(h)) << ',' << num(p.lower_nats) << ','
            << num(p.upper_nats) << ',' << num(r.c_hat) << ',' << num(r.e_hat) << ','
            << num(r.d_hat) << ',' << num(r.residual) << ',' << (r.diverged ? 1 : 0) << '\n';
    };
    for (const auto& p : curve.points) row(p);
    for (const auto& p : curve.diverged) row(p);
}

json sim_result_json(const SimResult& r) {
    json out{{"mode", to_string(r.mode)},
             {"distortion", r.distortion},
             {"steps", r.steps},
             {"b_hat", json_num(r.b_hat)},
             {"b_hat_se", json_num(r.b_hat_se)},
             {"c_hat", json_num(r.c_hat)},
             {"e_hat", json_num(r.e_hat)},
             {"d_hat", json_num(r.d_hat)},
             {"residual", json_num(r.residual)},
             {"residual_se", json_num(r.residual_se)},
             {"encoder_digest", r.encoder_digest},
             {"decoder_digest", r.decoder_digest},
             {"rng_draws", r.rng_draws},
             {"diverged", r.diverged},
             {"diverged_step", r.diverged_step},
             {"distortion_violations", r.distortion_violations},
             {"max_distortion_ratio", r.max_distortion_ratio}};
    if (r.entropy) {
        out["entropy"] = {{"plug_in_nats", r.entropy->plug_in},
                          {"plug_in_bits", bounds::nats_to_bits(r.entropy->plug_in)},
                          {"miller_madow_nats", r.entropy->miller_madow},
                          {"standard_error", r.entropy->standard_error},
                          {"support", r.entropy->support},
                          {"samples", r.entropy->samples}};
    }
    json cov = json::array();
    for (Eigen::Index i = 0; i < r.innovation_covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.innovation_covariance.cols(); ++j) {
            row.push_back(json_num(r.innovation_covariance(i, j)));
        }
        cov.push_back(row);
    }
    out["innovation_covariance"] = cov;
    return out;
}

json curve_json(const TradeoffCurve& curve) {
    json points = json::array();
    auto add = [&](const CurvePoint& p) {
        json j = sim_result_json(p.result);
        j["lower_bound_nats"] = json_num(p.lower_nats);
        j["upper_bound_nats"] = json_num(p.upper_nats);
        j["feasible"] = p.feasible;
        j["dominates"] = p.dominates;
        points.push_back(j);
    };
    for (const auto& p : curve.points) add(p);
    for (const auto& p : curve.diverged) add(p);
    return json{{"mode", to_string(curve.mode)},
                {"b_min", curve.b_min},
                {"dominance_violations", curve.dominance_violations()},
                {"distortion_violations", curve.distortion_violations()},
                {"points", points}};
}

Plot make_plot(const LinearPlant& plant, const TradeoffCurve& curve) {
    Plot plot;
    plot.b_min = curve.b_min;
    plot.title = std::string("entropy-cost tradeoff (") + to_string(curve.mode) + ")";

    double lo = kNaN;
    double hi = kNaN;
    for (const auto& p : curve.points) {
        const double b = p.result.b_hat;
        if (!std::isfinite(b) || b <= curve.b_min) continue;
        lo = std::isnan(lo) ? b : std::min(lo, b);
        hi = std::isnan(hi) ? b : std::max(hi, b);
        plot.points.push_back({b, p.result.h_hat(), false});
    }
    for (const auto& p : curve.diverged) {
        if (std::isfinite(p.result.b_hat) && std::isfinite(p.result.h_hat())) {
            plot.points.push_back({p.result.b_hat, p.result.h_hat(), true});
        }
        plot.notes.push_back("diverged: d=" + num(p.result.distortion) + " at step " +
                             std::to_string(p.result.diverged_step));
    }
    if (std::isnan(lo)) {
        return plot;
    }

    const LoopDesign design = LoopDesign::make(plant, curve.mode);
    const FilterRiccati* filter = design.filter ? &*design.filter : nullptr;
    const double first = 0.5 * (lo - curve.b_min);
    const double last = 1.05 * (hi - curve.b_min);
    constexpr int kSamples = 80;
    for (int i = 0; i < kSamples; ++i) {
        const double off = first * std::pow(last / first, static_cast<double>(i) / (kSamples - 1));
        const double b = curve.b_min + off;
        try {
            const double lower =
                filter == nullptr
                    ? bounds::thm1_lower(plant, design.control, plant.noise_v.entropy_power(), b)
                    : bounds::thm5_lower(plant, design.control, *filter, b);
            plot.lower.emplace_back(b, lower);
        } catch (const std::exception&) {
        }
        try {
            plot.upper.emplace_back(b,
                                    bounds::entropy_cost_upper(plant, design.control, filter, b).rate_nats);
        } catch (const std::exception&) {
        }
    }
    return plot;
}

std::string render_svg(const Plot& plot) {
    constexpr double kWidth = 720.0;
    constexpr double kHeight = 480.0;
    constexpr double kLeft = 70.0;
    constexpr double kRight = 690.0;
    constexpr double kTop = 40.0;
    constexpr double kBottom = 410.0;

    double x_lo = plot.b_min;
    double x_hi = plot.b_min;
    double y_hi = 0.0;
    auto extend = [&](double b, double h) {
        if (std::isfinite(b)) x_hi = std::max(x_hi, b);
        if (std::isfinite(h)) y_hi = std::max(y_hi, h);
    };
    for (const auto& [b, h] : plot.lower) extend(b, h);
    for (const auto& [b, h] : plot.upper) extend(b, h);
    for (const auto& p : plot.points) extend(p.b, p.h);
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > 0.0)) y_hi = 1.0;
    const double x_span = x_hi - x_lo;
    x_lo -= 0.02 * x_span;
    x_hi += 0.02 * x_span;
    y_hi *= 1.05;

    auto sx = [&](double b) { return kLeft + (b - x_lo) / (x_hi - x_lo) * (kRight - kLeft); };
    auto sy = [&](double h) { return kBottom - h / y_hi * (kBottom - kTop); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(plot.title) << "</text>\n";

    // Axes and ticks.
    o << "<g stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kBottom) << "\" x2=\"" << px(kRight)
      << "\" y2=\"" << px(kBottom) << "\"/>\n";
    o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kBottom) << "\" x2=\"" << px(kLeft)
      << "\" y2=\"" << px(kTop) << "\"/>\n";
    o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double bx = x_lo + (x_hi - x_lo) * i / kTicks;
        const double hy = y_hi * i / kTicks;
        o << "<line x1=\"" << px(sx(bx)) << "\" y1=\"" << px(kBottom) << "\" x2=\"" << px(sx(bx))
          << "\" y2=\"" << px(kBottom + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << px(sx(bx)) << "\" y=\"" << px(kBottom + 18)
          << "\" text-anchor=\"middle\">" << tick_label(bx) << "</text>\n";
        o << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(sy(hy)) << "\" x2=\"" << px(kLeft)
          << "\" y2=\"" << px(sy(hy)) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(sy(hy) + 4)
          << "\" text-anchor=\"end\">" << tick_label(hy) << "</text>\n";
    }
    o << "<text x=\"" << px((kLeft + kRight) / 2) << "\" y=\"" << px(kBottom + 36)
      << "\" text-anchor=\"middle\">LQR cost b</text>\n";
    o << "<text x=\"18\" y=\"" << px((kTop + kBottom) / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 18 " << px((kTop + kBottom) / 2)
      << ")\">rate (nats/step)</text>\n";
    o << "</g>\n";

    // b_min asymptote.
    o << "<line class=\"b_min\" x1=\"" << px(sx(plot.b_min)) << "\" y1=\"" << px(kBottom)
      << "\" x2=\"" << px(sx(plot.b_min)) << "\" y2=\"" << px(kTop)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    o << "<text x=\"" << px(sx(plot.b_min) + 4) << "\" y=\"" << px(kTop + 12)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"gray\">b_min</text>\n";

    auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* cls,
                        const char* color, const char* dash) {
        if (pts.empty()) return;
        o << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"" << dash << " points=\"";
        bool first = true;
        for (const auto& [b, h] : pts) {
            if (!std::isfinite(b) || !std::isfinite(h) || h > y_hi) continue;
            o << (first ? "" : " ") << px(sx(b)) << ',' << px(sy(h));
            first = false;
        }
        o << "\"/>\n";
    };
    polyline(plot.lower, "lower", "#1f77b4", "");
    polyline(plot.upper, "upper", "#d62728", " stroke-dasharray=\"6 3\"");

    for (const auto& p : plot.points) {
        if (!std::isfinite(p.b) || !std::isfinite(p.h)) continue;
        o << "<circle class=\"" << (p.hollow ? "diverged" : "empirical") << "\" cx=\""
          << px(sx(p.b)) << "\" cy=\"" << px(sy(p.h)) << "\" r=\"3.5\" "
          << (p.hollow ? "fill=\"none\" stroke=\"black\"" : "fill=\"black\"") << "/>\n";
    }

    // Legend.
    o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    const double lx = kRight - 170;
    o << "<line x1=\"" << px(lx) << "\" y1=\"" << px(kTop + 10) << "\" x2=\"" << px(lx + 24)
      << "\" y2=\"" << px(kTop + 10) << "\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    o << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(kTop + 14) << "\">lower bound</text>\n";
    o << "<line x1=\"" << px(lx) << "\" y1=\"" << px(kTop + 26) << "\" x2=\"" << px(lx + 24)
      << "\" y2=\"" << px(kTop + 26)
      << "\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";
    o << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(kTop + 30) << "\">upper bound</text>\n";
    o << "<circle cx=\"" << px(lx + 12) << "\" cy=\"" << px(kTop + 42)
      << "\" r=\"3.5\" fill=\"black\"/>\n";
    o << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(kTop + 46) << "\">DPCM scheme</text>\n";
    double ny = kBottom + 54;
    for (const auto& note : plot.notes) {
        o << "<text x=\"" << px(kLeft) << "\" y=\"" << px(ny) << "\">" << xml_escape(note)
          << "</text>\n";
        ny += 14;
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

}  // namespace ratecost
