#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpnest/trace_io.hpp"

// Performance profiles: for each solver, the fraction of problems whose cost
// is within a factor tau of the cheapest converged solver on that problem.
// At tau = 1 a solver's fraction is the share of problems on which it is the
// fastest; as tau grows the fraction approaches its solve rate.

namespace cpnest {

enum class CostMetric { wall_time, sweep_equivalents };

inline std::string to_string(CostMetric m) {
    return m == CostMetric::wall_time ? "wall_time" : "sweep_equivalents";
}

struct RunSummary {
    std::string problem;
    std::string solver;
    bool converged = false;
    double cost = 0.0;
};

struct TauProfile {
    std::vector<double> taus;
    std::vector<std::string> solvers;
    std::vector<std::vector<double>> fractions;  // [solver][tau]
    CostMetric metric = CostMetric::sweep_equivalents;
    bool drop_unsolved_problems = false;
    int n_problems = 0;
};

/// Geometric grid from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, int points) {
    if (!(lo > 0.0 && hi > lo && points >= 2)) throw std::invalid_argument("bad tau grid");
    std::vector<double> taus(static_cast<std::size_t>(points));
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) taus[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    taus.front() = lo;
    taus.back() = hi;
    return taus;
}

inline std::vector<double> default_tau_grid() { return geometric_grid(1.0, 16.0, 200); }

inline TauProfile tau_profile(std::span<const RunSummary> runs, std::vector<double> taus,
                              CostMetric metric = CostMetric::sweep_equivalents,
                              bool drop_unsolved_problems = false) {
    if (runs.empty()) throw std::invalid_argument("tau_profile needs at least one run");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 1.0)) throw std::invalid_argument("tau grid must start at 1");
        if (i > 0 && !(taus[i] > taus[i - 1]))
            throw std::invalid_argument("tau grid must be increasing");
    }

    std::vector<std::string> solvers;
    std::vector<std::string> problems;
    for (const RunSummary& r : runs) {
        if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end())
            solvers.push_back(r.solver);
        if (std::find(problems.begin(), problems.end(), r.problem) == problems.end())
            problems.push_back(r.problem);
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::map<std::pair<std::string, std::string>, double> cost;  // (problem, solver) -> cost
    for (const RunSummary& r : runs)
        cost[{r.problem, r.solver}] = r.converged ? r.cost : kInf;

    // Per-problem performance ratios.
    std::vector<std::vector<double>> ratios(solvers.size());
    int counted_problems = 0;
    for (const std::string& p : problems) {
        double best = kInf;
        for (const std::string& s : solvers) {
            auto it = cost.find({p, s});
            if (it != cost.end()) best = std::min(best, it->second);
        }
        if (!std::isfinite(best) && drop_unsolved_problems) continue;
        ++counted_problems;
        for (std::size_t si = 0; si < solvers.size(); ++si) {
            auto it = cost.find({p, solvers[si]});
            double ratio = kInf;
            if (it != cost.end() && std::isfinite(it->second)) {
                if (best == 0.0)
                    ratio = (it->second == 0.0) ? 1.0 : kInf;
                else
                    ratio = it->second / best;
            }
            ratios[si].push_back(ratio);
        }
    }
    if (counted_problems == 0) throw std::invalid_argument("no problems left to profile");

    TauProfile profile;
    profile.taus = std::move(taus);
    profile.solvers = solvers;
    profile.metric = metric;
    profile.drop_unsolved_problems = drop_unsolved_problems;
    profile.n_problems = counted_problems;
    profile.fractions.resize(solvers.size());
    for (std::size_t si = 0; si < solvers.size(); ++si) {
        profile.fractions[si].reserve(profile.taus.size());
        for (double tau : profile.taus) {
            int within = 0;
            for (double ratio : ratios[si])
                if (ratio <= tau) ++within;
            profile.fractions[si].push_back(static_cast<double>(within) / counted_problems);
        }
        // Structural self-check: fractions must be non-decreasing in tau and
        // can never exceed the solve rate.
        int solved = 0;
        for (double ratio : ratios[si])
            if (std::isfinite(ratio)) ++solved;
        const double solve_rate = static_cast<double>(solved) / counted_problems;
        for (std::size_t ti = 0; ti < profile.fractions[si].size(); ++ti) {
            if (ti > 0 && profile.fractions[si][ti] < profile.fractions[si][ti - 1])
                throw std::logic_error("tau profile fractions must be non-decreasing");
            if (profile.fractions[si][ti] > solve_rate + 1e-15)
                throw std::logic_error("tau profile fraction exceeds solve rate");
        }
    }
    return profile;
}

inline void write_profile_csv(const TauProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TraceIoError("cannot open profile csv for writing: " + path.string());
    out << "tau";
    for (const std::string& s : profile.solvers) out << ',' << s;
    out << "\n";
    for (std::size_t ti = 0; ti < profile.taus.size(); ++ti) {
        out << detail::fmt_double(profile.taus[ti]);
        for (std::size_t si = 0; si < profile.solvers.size(); ++si)
            out << ',' << detail::fmt_double(profile.fractions[si][ti]);
        out << "\n";
    }
    if (!out) throw TraceIoError("profile csv write failed: " + path.string());
}

}  // namespace cpnest
