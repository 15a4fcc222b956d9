#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cpnest/svg.hpp"
#include "cpnest/tau_profile.hpp"
#include "cpnest/trace_io.hpp"

namespace cpnest {

/// Writes a convergence curve for one run: a two-column data file
/// (cost metric, scaled gradient norm) and an SVG with a log gradient axis.
/// Restart iterations are marked on the curve.
inline void emit_convergence_curve(const RunTrace& trace, const std::filesystem::path& data_path,
                                   const std::filesystem::path& svg_path,
                                   CostMetric metric = CostMetric::sweep_equivalents) {
    if (trace.records.empty()) throw std::invalid_argument("cannot plot an empty trace");

    std::ofstream out(data_path);
    if (!out) throw TraceIoError("cannot open curve data for writing: " + data_path.string());
    out << "# " << to_string(metric) << " grad_norm_scaled\n";
    SvgSeries series;
    series.label = trace.solver_name;
    series.color = series_color(0);
    for (const IterationRecord& r : trace.records) {
        const double cost = (metric == CostMetric::wall_time) ? r.wall_seconds : r.work;
        const double scaled = r.grad_norm / static_cast<double>(trace.n_flat);
        out << detail::fmt_double(cost) << ' ' << detail::fmt_double(scaled) << "\n";
        series.x.push_back(cost);
        series.y.push_back(scaled);
        series.marker.push_back(r.restarted);
    }
    if (!out) throw TraceIoError("curve data write failed: " + data_path.string());

    SvgPlot plot;
    plot.title = trace.solver_name + " (" + to_string(trace.status) + ")";
    plot.x_label = to_string(metric);
    plot.y_label = "gradient norm / n";
    plot.log_y = true;
    plot.series.push_back(std::move(series));
    plot.write(svg_path);
}

/// SVG rendering of a performance profile (one line per solver).
inline void emit_profile_svg(const TauProfile& profile, const std::filesystem::path& svg_path) {
    SvgPlot plot;
    plot.title = "performance profile (" + to_string(profile.metric) + ")";
    plot.x_label = "tau";
    plot.y_label = "fraction of problems";
    for (std::size_t si = 0; si < profile.solvers.size(); ++si) {
        SvgSeries s;
        s.label = profile.solvers[si];
        s.color = series_color(si);
        s.x = profile.taus;
        s.y = profile.fractions[si];
        plot.series.push_back(std::move(s));
    }
    plot.write(svg_path);
}

}  // namespace cpnest
