#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cpnest/problems.hpp"
#include "cpnest/solver.hpp"
#include "cpnest/solver_name.hpp"
#include "cpnest/tau_profile.hpp"
#include "cpnest/trace_io.hpp"

// Experiment runner: every (problem, solver) pair is executed, traces are
// written one file per run, and a manifest summarizes statuses, costs and
// checksums. Runs are independent, so the plan dispatches whole problems to
// a bounded pool of workers; a single run is never internally parallel,
// which keeps every trace deterministic.

namespace cpnest {

struct FileProblem {
    std::filesystem::path path;
    Index rank = 1;
    std::uint64_t init_seed = 0;
};

struct ProblemSource {
    std::string name;
    std::variant<SyntheticSpec, FileProblem> source;
};

inline ProblemInstance materialize(const ProblemSource& src) {
    if (std::holds_alternative<SyntheticSpec>(src.source)) {
        ProblemInstance p = make_synthetic(std::get<SyntheticSpec>(src.source));
        p.name = src.name;
        return p;
    }
    const FileProblem& fp = std::get<FileProblem>(src.source);
    ProblemInstance p;
    p.tensor = load_tensor(fp.path);
    p.rank_to_fit = fp.rank;
    Rng rng(fp.init_seed);
    p.x0 = random_init(p.tensor.shape, fp.rank, rng);
    p.name = src.name;
    p.provenance = fp.path;
    return p;
}

struct SolverEntry {
    std::string name;
    SolverConfig config;
};

enum class TolPolicy { absolute, relative_to_initial_gradient };

inline std::string to_string(TolPolicy p) {
    return p == TolPolicy::absolute ? "absolute" : "relative_to_initial_gradient";
}

struct ExperimentPlan {
    std::vector<ProblemSource> problems;
    std::vector<SolverEntry> solvers;
    TolPolicy tol_policy = TolPolicy::absolute;
    int repetitions = 1;
    int parallelism = 1;
    std::filesystem::path output_dir = ".";

    void validate() const {
        if (problems.empty() || solvers.empty())
            throw std::invalid_argument("plan needs problems and solvers");
        if (repetitions < 1 || parallelism < 1)
            throw std::invalid_argument("repetitions and parallelism must be >= 1");
        std::set<std::string> names;
        for (const SolverEntry& s : solvers)
            if (!names.insert(s.name).second)
                throw std::invalid_argument("duplicate solver name: " + s.name);
        names.clear();
        for (const ProblemSource& p : problems)
            if (!names.insert(p.name).second)
                throw std::invalid_argument("duplicate problem name: " + p.name);
    }
};

struct RunOutcome {
    std::string problem;
    std::string solver;
    int repetition = 0;
    bool ok = false;
    std::string error;
    RunStatus status = RunStatus::budget_exhausted;
    double work = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t checksum = 0;
    std::filesystem::path trace_path;

    bool converged() const { return ok && status == RunStatus::converged; }
    double cost(CostMetric metric) const {
        return metric == CostMetric::wall_time ? wall_seconds : work;
    }
    RunSummary summary(CostMetric metric) const {
        return RunSummary{problem, solver, converged(), cost(metric)};
    }
};

namespace detail {

inline std::string sanitize_filename(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            c = '_';
    return s;
}

}  // namespace detail

inline std::vector<RunOutcome> run_plan(const ExperimentPlan& plan) {
    plan.validate();
    std::filesystem::create_directories(plan.output_dir);

    const std::size_t n_problems = plan.problems.size();
    const std::size_t n_solvers = plan.solvers.size();
    const std::size_t reps = static_cast<std::size_t>(plan.repetitions);
    std::vector<RunOutcome> outcomes(n_problems * n_solvers * reps);

    std::atomic<std::size_t> next_problem{0};
    auto worker = [&] {
        while (true) {
            const std::size_t pi = next_problem.fetch_add(1);
            if (pi >= n_problems) return;
            const ProblemSource& src = plan.problems[pi];

            ProblemInstance problem;
            std::string materialize_error;
            try {
                problem = materialize(src);
            } catch (const std::exception& e) {
                materialize_error = e.what();
            }

            double gnorm0 = 0.0;
            if (materialize_error.empty() &&
                plan.tol_policy == TolPolicy::relative_to_initial_gradient) {
                try {
                    gnorm0 =
                        gradient(problem.tensor,
                                 unpack(problem.x0, problem.tensor.shape, problem.rank_to_fit))
                            .norm();
                } catch (const std::exception& e) {
                    materialize_error = e.what();
                }
            }

            for (std::size_t si = 0; si < n_solvers; ++si) {
                for (std::size_t rep = 0; rep < reps; ++rep) {
                    RunOutcome& out = outcomes[(pi * n_solvers + si) * reps + rep];
                    out.problem = src.name;
                    out.solver = plan.solvers[si].name;
                    out.repetition = static_cast<int>(rep);
                    if (!materialize_error.empty()) {
                        out.error = materialize_error;
                        continue;
                    }
                    try {
                        SolverConfig cfg = plan.solvers[si].config;
                        if (plan.tol_policy == TolPolicy::relative_to_initial_gradient)
                            cfg.tol *= gnorm0;
                        SolveResult result = run_solver(problem.tensor, problem.x0, cfg);
                        RunTrace& trace = result.trace;
                        trace.solver_name = plan.solvers[si].name;
                        trace.provenance.emplace_back("problem", src.name);
                        if (const auto* spec = std::get_if<SyntheticSpec>(&problem.provenance))
                            trace.provenance.emplace_back("problem_spec", spec->label());
                        else
                            trace.provenance.emplace_back(
                                "problem_file",
                                std::get<std::filesystem::path>(problem.provenance).string());
                        trace.provenance.emplace_back("init", "uniform01");
                        trace.provenance.emplace_back("tol_policy", to_string(plan.tol_policy));

                        std::string fname = detail::sanitize_filename(src.name) + "__" +
                                            detail::sanitize_filename(plan.solvers[si].name);
                        if (reps > 1) fname += "__rep" + std::to_string(rep);
                        fname += ".trace";
                        out.trace_path = plan.output_dir / fname;
                        write_trace(trace, out.trace_path);

                        out.ok = true;
                        out.status = trace.status;
                        out.work = trace.total_work();
                        out.wall_seconds = trace.total_wall();
                        out.checksum = trace_checksum(trace);
                    } catch (const std::exception& e) {
                        out.ok = false;
                        out.error = e.what();
                    }
                }
            }
        }
    };

    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(plan.parallelism), n_problems);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    return outcomes;
}

inline void write_manifest(const std::vector<RunOutcome>& outcomes,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TraceIoError("cannot open manifest for writing: " + path.string());
    out << "problem,solver,repetition,ok,status,work,wall_seconds,checksum,trace_file,error\n";
    for (const RunOutcome& o : outcomes) {
        out << o.problem << ',' << o.solver << ',' << o.repetition << ',' << (o.ok ? 1 : 0) << ','
            << (o.ok ? to_string(o.status) : std::string("error")) << ','
            << detail::fmt_double(o.work) << ',' << detail::fmt_double(o.wall_seconds) << ','
            << checksum_hex(o.checksum) << ',' << o.trace_path.filename().string() << ','
            << o.error << "\n";
    }
    if (!out) throw TraceIoError("manifest write failed: " + path.string());
}

}  // namespace cpnest
