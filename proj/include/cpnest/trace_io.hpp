#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpnest/solver.hpp"
#include "cpnest/version.hpp"

// Trace persistence: one delimited-text file per run. Header of key=value
// provenance lines, a fixed "columns=" line, then one whitespace-separated
// record per iteration. Doubles are written with 17 significant digits so
// files round-trip exactly.

namespace cpnest {

struct TraceIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline constexpr const char* kTraceColumns =
    "k f grad_norm delta_x_norm beta restarted n_f_evals n_g_evals n_als_sweeps work "
    "wall_seconds";

}  // namespace detail

inline RunStatus parse_status(const std::string& s) {
    if (s == "converged") return RunStatus::converged;
    if (s == "budget_exhausted") return RunStatus::budget_exhausted;
    if (s == "stalled") return RunStatus::stalled;
    throw TraceIoError("unknown run status: " + s);
}

inline void write_trace(const RunTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TraceIoError("cannot open trace for writing: " + path.string());
    out << "# cpnest-trace v1\n";
    out << "version=" << kVersion << "\n";
    out << "solver=" << trace.solver_name << "\n";
    for (const auto& [key, value] : trace.provenance) out << key << "=" << value << "\n";
    out << "shape=";
    for (std::size_t m = 0; m < trace.shape.size(); ++m) {
        if (m) out << ' ';
        out << trace.shape[m];
    }
    out << "\n";
    out << "rank=" << trace.rank << "\n";
    out << "n_flat=" << trace.n_flat << "\n";
    out << "tol=" << detail::fmt_double(trace.tol) << "\n";
    out << "status=" << to_string(trace.status) << "\n";
    out << "columns=" << detail::kTraceColumns << "\n";
    for (const IterationRecord& r : trace.records) {
        out << r.k << ' ' << detail::fmt_double(r.f) << ' ' << detail::fmt_double(r.grad_norm)
            << ' ' << detail::fmt_double(r.delta_x_norm) << ' ' << detail::fmt_double(r.beta)
            << ' ' << (r.restarted ? 1 : 0) << ' ' << r.n_f_evals << ' ' << r.n_g_evals << ' '
            << r.n_als_sweeps << ' ' << detail::fmt_double(r.work) << ' '
            << detail::fmt_double(r.wall_seconds) << "\n";
    }
    if (!out) throw TraceIoError("trace write failed: " + path.string());
}

inline RunTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TraceIoError("cannot open trace for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "# cpnest-trace v1")
        throw TraceIoError("bad trace magic in " + path.string());

    RunTrace trace;
    bool have_columns = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (have_columns) {
            std::istringstream ss(line);
            IterationRecord r;
            int restarted = 0;
            if (!(ss >> r.k >> r.f >> r.grad_norm >> r.delta_x_norm >> r.beta >> restarted >>
                  r.n_f_evals >> r.n_g_evals >> r.n_als_sweeps >> r.work >> r.wall_seconds))
                throw TraceIoError("bad record line in " + path.string() + ": " + line);
            r.restarted = restarted != 0;
            trace.records.push_back(r);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw TraceIoError("bad header line in " + path.string() + ": " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "version") {
            // informational
        } else if (key == "solver") {
            trace.solver_name = value;
        } else if (key == "shape") {
            std::istringstream ss(value);
            long e;
            while (ss >> e) trace.shape.push_back(e);
        } else if (key == "rank") {
            trace.rank = std::stol(value);
        } else if (key == "n_flat") {
            trace.n_flat = std::stol(value);
        } else if (key == "tol") {
            trace.tol = std::stod(value);
        } else if (key == "status") {
            trace.status = parse_status(value);
        } else if (key == "columns") {
            if (value != detail::kTraceColumns)
                throw TraceIoError("unexpected columns line in " + path.string());
            have_columns = true;
        } else {
            trace.provenance.emplace_back(key, value);
        }
    }
    if (!have_columns) throw TraceIoError("trace has no columns line: " + path.string());
    return trace;
}

/// FNV-1a 64-bit checksum over the deterministic trace content. Wall-clock
/// columns are excluded, so identical seeds and configs produce identical
/// checksums across reruns.
inline std::uint64_t trace_checksum(const RunTrace& trace) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    };
    feed(trace.solver_name);
    for (Index e : trace.shape) feed(std::to_string(e) + "|");
    feed(std::to_string(trace.rank));
    feed(detail::fmt_double(trace.tol));
    feed(to_string(trace.status));
    for (const IterationRecord& r : trace.records) {
        feed(std::to_string(r.k) + "," + detail::fmt_double(r.f) + "," +
             detail::fmt_double(r.grad_norm) + "," + detail::fmt_double(r.delta_x_norm) + "," +
             detail::fmt_double(r.beta) + "," + (r.restarted ? "1" : "0") + "," +
             std::to_string(r.n_f_evals) + "," + std::to_string(r.n_g_evals) + "," +
             std::to_string(r.n_als_sweeps) + "," + detail::fmt_double(r.work) + ";");
    }
    return h;
}

inline std::string checksum_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cpnest
