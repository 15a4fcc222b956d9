// Command-line front end for the cpnest library.
//
//   cpnest gen        write synthetic benchmark tensors and a suite manifest
//   cpnest decompose  fit one tensor with one solver; write trace + factors
//   cpnest bench      run a full experiment plan from a JSON config
//   cpnest profile    build a performance-profile CSV (and SVG) from traces
//   cpnest curve      emit a convergence curve for a single trace

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "cpnest/cpnest.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cpnest;

namespace {

struct SolverFlagOverrides {
    std::optional<std::string> momentum, restart;
    std::optional<int> delay;
    bool eta_scheduled = false;
    std::optional<double> eta0, eta_min, eta_decrement;
    std::optional<double> ls_step0, ls_c_descent, ls_c_curv, ls_step_min, ls_step_max;
    std::optional<int> ls_max_iters;
};

void add_solver_override_flags(CLI::App* cmd, SolverFlagOverrides& ov) {
    cmd->add_option("--momentum", ov.momentum, "Momentum rule override: SN, SG or S1");
    cmd->add_option("--restart", ov.restart, "Restart rule override: none, RF, RG or RX");
    cmd->add_option("--delay", ov.delay, "Restart delay d >= 1");
    cmd->add_flag("--eta-scheduled", ov.eta_scheduled,
                  "Use the decaying eta schedule instead of fixed eta = 1");
    cmd->add_option("--eta0", ov.eta0, "Scheduled eta start value");
    cmd->add_option("--eta-min", ov.eta_min, "Scheduled eta floor");
    cmd->add_option("--eta-decrement", ov.eta_decrement, "Scheduled eta per-step decrement");
    cmd->add_option("--ls-step0", ov.ls_step0, "Line search initial trial step");
    cmd->add_option("--ls-c-descent", ov.ls_c_descent, "Line search sufficient-decrease constant");
    cmd->add_option("--ls-c-curv", ov.ls_c_curv, "Line search curvature constant");
    cmd->add_option("--ls-max-iters", ov.ls_max_iters, "Line search evaluation budget");
    cmd->add_option("--ls-step-min", ov.ls_step_min, "Line search smallest admissible step");
    cmd->add_option("--ls-step-max", ov.ls_step_max, "Line search largest admissible step");
}

void apply_overrides(SolverConfig& cfg, const SolverFlagOverrides& ov) {
    if (ov.momentum) {
        if (*ov.momentum == "SN") cfg.momentum.kind = MomentumKind::sn;
        else if (*ov.momentum == "SG") cfg.momentum.kind = MomentumKind::sg;
        else if (*ov.momentum == "S1") cfg.momentum.kind = MomentumKind::s1;
        else throw CLI::ValidationError("--momentum must be SN, SG or S1");
        cfg.variant = SolverVariant::nesterov_als_restarted;
    }
    if (ov.restart) {
        if (*ov.restart == "none") cfg.restart.kind = RestartKind::none;
        else if (*ov.restart == "RF") cfg.restart.kind = RestartKind::rf;
        else if (*ov.restart == "RG") cfg.restart.kind = RestartKind::rg;
        else if (*ov.restart == "RX") cfg.restart.kind = RestartKind::rx;
        else throw CLI::ValidationError("--restart must be none, RF, RG or RX");
        if (cfg.restart.kind != RestartKind::none)
            cfg.variant = SolverVariant::nesterov_als_restarted;
    }
    if (ov.delay) cfg.restart.delay = *ov.delay;
    if (ov.eta_scheduled) cfg.restart.eta_mode = EtaMode::scheduled;
    if (ov.eta0) cfg.restart.eta0 = *ov.eta0;
    if (ov.eta_min) cfg.restart.eta_min = *ov.eta_min;
    if (ov.eta_decrement) cfg.restart.eta_decrement = *ov.eta_decrement;
    if (ov.ls_step0) cfg.ls.step0 = *ov.ls_step0;
    if (ov.ls_c_descent) cfg.ls.c_descent = *ov.ls_c_descent;
    if (ov.ls_c_curv) cfg.ls.c_curv = *ov.ls_c_curv;
    if (ov.ls_max_iters) cfg.ls.max_iters = *ov.ls_max_iters;
    if (ov.ls_step_min) cfg.ls.step_min = *ov.ls_step_min;
    if (ov.ls_step_max) cfg.ls.step_max = *ov.ls_step_max;
}

int cmd_gen(const fs::path& out_dir, std::vector<int> classes, int instances,
            std::uint64_t base_seed) {
    if (classes.empty()) classes = {1, 2, 3, 4, 5, 6};
    fs::create_directories(out_dir);
    std::ofstream manifest(out_dir / "suite_manifest.txt");
    manifest << "# name file s c R l1 l2 seed\n";
    for (int ci : classes) {
        for (int inst = 0; inst < instances; ++inst) {
            SyntheticSpec spec = standard_class(ci);
            spec.seed = derive_seed(base_seed, static_cast<std::uint64_t>(ci),
                                    static_cast<std::uint64_t>(inst));
            const std::string name =
                "class" + std::to_string(ci) + "_inst" + (inst < 10 ? "0" : "") +
                std::to_string(inst);
            ProblemInstance p = make_synthetic(spec);
            const std::string fname = name + ".tns";
            save_tensor(p.tensor, out_dir / fname);
            manifest << name << ' ' << fname << ' ' << spec.s << ' ' << spec.c << ' ' << spec.R
                     << ' ' << spec.l1 << ' ' << spec.l2 << ' ' << spec.seed << "\n";
            std::cout << "wrote " << (out_dir / fname).string() << "\n";
        }
    }
    return 0;
}

int cmd_decompose(const fs::path& tensor_path, Index rank, const std::string& solver_name,
                  const SolverFlagOverrides& ov, double tol, const std::string& tol_mode,
                  double max_sweeps, double max_seconds, std::uint64_t init_seed,
                  const fs::path& out_dir) {
    SolverConfig cfg = parse_solver_name(solver_name);
    apply_overrides(cfg, ov);
    cfg.tol = tol;
    cfg.max_sweeps = max_sweeps;
    if (max_seconds > 0) cfg.max_seconds = max_seconds;

    DenseTensor t = load_tensor(tensor_path);
    Rng rng(init_seed);
    FlatIterate x0 = random_init(t.shape, rank, rng);

    if (tol_mode == "relative") {
        const double gnorm0 = gradient(t, unpack(x0, t.shape, rank)).norm();
        cfg.tol *= gnorm0;
    } else if (tol_mode != "absolute") {
        throw CLI::ValidationError("--tol-mode must be absolute or relative");
    }

    SolveResult res = run_solver(t, x0, cfg);
    res.trace.solver_name = format_solver_name(cfg);
    res.trace.provenance.emplace_back("problem_file", tensor_path.string());
    res.trace.provenance.emplace_back("init", "uniform01 seed=" + std::to_string(init_seed));
    res.trace.provenance.emplace_back("tol_policy",
                                      tol_mode == "relative"
                                          ? "relative_to_initial_gradient"
                                          : "absolute");

    fs::create_directories(out_dir);
    const std::string stem = tensor_path.stem().string() + "__" + res.trace.solver_name;
    const fs::path trace_path = out_dir / (stem + ".trace");
    write_trace(res.trace, trace_path);
    for (int n = 0; n < res.model.order(); ++n) {
        const Matrix& f = res.model.factors[static_cast<std::size_t>(n)];
        DenseTensor as_tensor({f.rows(), f.cols()},
                              Eigen::Map<const Vector>(f.data(), f.size()));
        save_tensor(as_tensor, out_dir / (stem + "_factor" + std::to_string(n) + ".tns"));
    }

    const IterationRecord& last = res.trace.last();
    std::cout << res.trace.solver_name << ": " << to_string(res.trace.status) << " after "
              << last.k << " iterations, f = " << last.f
              << ", grad/n = " << last.grad_norm / static_cast<double>(res.trace.n_flat)
              << ", work = " << last.work << " sweep-eq, wall = " << last.wall_seconds << " s\n"
              << "trace: " << trace_path.string() << "\n";
    return 0;
}

ExperimentPlan plan_from_json(const fs::path& plan_path) {
    std::ifstream in(plan_path);
    if (!in) throw std::runtime_error("cannot open plan file: " + plan_path.string());
    json j = json::parse(in);

    ExperimentPlan plan;
    plan.output_dir = j.value("output_dir", std::string("runs"));
    plan.repetitions = j.value("repetitions", 1);
    plan.parallelism = j.value("parallelism", 1);
    const std::string policy = j.value("tol_policy", std::string("absolute"));
    if (policy == "absolute")
        plan.tol_policy = TolPolicy::absolute;
    else if (policy == "relative_to_initial_gradient" || policy == "relative")
        plan.tol_policy = TolPolicy::relative_to_initial_gradient;
    else
        throw std::runtime_error("unknown tol_policy: " + policy);

    const double tol = j.value("tol", 1e-9);
    const double max_sweeps = j.value("max_sweeps", 10000.0);
    const double max_seconds = j.value("max_seconds", 0.0);

    if (j.contains("synthetic")) {
        const json& s = j["synthetic"];
        const int instances = s.value("instances", 10);
        const std::uint64_t base_seed = s.value("base_seed", static_cast<std::uint64_t>(20240101));
        std::vector<int> classes;
        if (s.contains("classes"))
            classes = s["classes"].get<std::vector<int>>();
        else
            classes = {1, 2, 3, 4, 5, 6};
        for (int ci : classes) {
            for (int inst = 0; inst < instances; ++inst) {
                SyntheticSpec spec = standard_class(ci);
                spec.seed = derive_seed(base_seed, static_cast<std::uint64_t>(ci),
                                        static_cast<std::uint64_t>(inst));
                const std::string name = "class" + std::to_string(ci) + "_inst" +
                                         (inst < 10 ? "0" : "") + std::to_string(inst);
                plan.problems.push_back({name, spec});
            }
        }
    }
    if (j.contains("files")) {
        for (const json& f : j["files"]) {
            FileProblem fp;
            fp.path = f.at("path").get<std::string>();
            fp.rank = f.at("rank").get<Index>();
            fp.init_seed = f.value("init_seed", static_cast<std::uint64_t>(0));
            plan.problems.push_back({fs::path(fp.path).stem().string(), fp});
        }
    }

    if (!j.contains("solvers")) throw std::runtime_error("plan has no solvers");
    for (const json& s : j["solvers"]) {
        std::string name;
        SolverConfig cfg;
        if (s.is_string()) {
            name = s.get<std::string>();
            cfg = parse_solver_name(name);
        } else {
            name = s.at("name").get<std::string>();
            cfg = parse_solver_name(name);
            if (s.contains("tol")) cfg.tol = s["tol"].get<double>();
            if (s.contains("max_sweeps")) cfg.max_sweeps = s["max_sweeps"].get<double>();
            if (s.contains("max_seconds")) cfg.max_seconds = s["max_seconds"].get<double>();
            if (s.contains("ls_step0")) cfg.ls.step0 = s["ls_step0"].get<double>();
            if (s.contains("ls_max_iters")) cfg.ls.max_iters = s["ls_max_iters"].get<int>();
        }
        if (!s.is_object() || !s.contains("tol")) cfg.tol = tol;
        if (!s.is_object() || !s.contains("max_sweeps")) cfg.max_sweeps = max_sweeps;
        if (max_seconds > 0 && (!s.is_object() || !s.contains("max_seconds")))
            cfg.max_seconds = max_seconds;
        plan.solvers.push_back({name, cfg});
    }
    return plan;
}

int cmd_bench(const fs::path& plan_path, const std::optional<std::string>& out_override,
              std::optional<int> parallel_override) {
    ExperimentPlan plan = plan_from_json(plan_path);
    if (out_override) plan.output_dir = *out_override;
    if (parallel_override) plan.parallelism = *parallel_override;

    auto outcomes = run_plan(plan);
    write_manifest(outcomes, plan.output_dir / "manifest.csv");

    int converged = 0, failed = 0;
    for (const auto& o : outcomes) {
        if (!o.ok) ++failed;
        else if (o.status == RunStatus::converged) ++converged;
    }
    std::cout << outcomes.size() << " runs: " << converged << " converged, "
              << outcomes.size() - converged - failed << " not converged, " << failed
              << " errors\nmanifest: " << (plan.output_dir / "manifest.csv").string() << "\n";
    return failed == 0 ? 0 : 1;
}

int cmd_profile(const fs::path& trace_dir, const std::string& metric_name, const fs::path& out_csv,
                const std::optional<std::string>& out_svg, bool drop_unsolved) {
    const CostMetric metric =
        metric_name == "wall" ? CostMetric::wall_time : CostMetric::sweep_equivalents;
    std::vector<RunSummary> runs;
    for (const auto& entry : fs::directory_iterator(trace_dir)) {
        if (entry.path().extension() != ".trace") continue;
        RunTrace trace = read_trace(entry.path());
        std::string problem = entry.path().stem().string();
        for (const auto& [k, v] : trace.provenance)
            if (k == "problem") problem = v;
        runs.push_back({problem, trace.solver_name, trace.status == RunStatus::converged,
                        metric == CostMetric::wall_time ? trace.total_wall()
                                                        : trace.total_work()});
    }
    if (runs.empty()) {
        std::cerr << "no .trace files in " << trace_dir.string() << "\n";
        return 1;
    }
    TauProfile prof = tau_profile(runs, default_tau_grid(), metric, drop_unsolved);
    write_profile_csv(prof, out_csv);
    std::cout << "profiled " << runs.size() << " runs over " << prof.n_problems
              << " problems -> " << out_csv.string() << "\n";
    if (out_svg) emit_profile_svg(prof, *out_svg);
    return 0;
}

int cmd_curve(const fs::path& trace_path, std::optional<std::string> out_data,
              std::optional<std::string> out_svg, const std::string& metric_name) {
    const CostMetric metric =
        metric_name == "wall" ? CostMetric::wall_time : CostMetric::sweep_equivalents;
    RunTrace trace = read_trace(trace_path);
    const fs::path data = out_data ? fs::path(*out_data) : trace_path.parent_path() /
                                                               (trace_path.stem().string() +
                                                                "_curve.dat");
    const fs::path svg = out_svg ? fs::path(*out_svg) : trace_path.parent_path() /
                                                            (trace_path.stem().string() +
                                                             "_curve.svg");
    emit_convergence_curve(trace, data, svg, metric);
    std::cout << "curve data: " << data.string() << "\ncurve svg:  " << svg.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CP tensor decomposition with Nesterov-accelerated ALS"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate synthetic benchmark tensors");
    std::string gen_out = "suite";
    std::vector<int> gen_classes;
    int gen_instances = 10;
    std::uint64_t gen_seed = 20240101;
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_option("--classes", gen_classes, "Class indices 1..6 (default: all)");
    gen->add_option("--instances", gen_instances, "Instances per class");
    gen->add_option("--seed", gen_seed, "Base seed for the suite");

    // decompose
    auto* dec = app.add_subcommand("decompose", "Fit one tensor with one solver");
    std::string dec_tensor, dec_solver = "ALS", dec_tol_mode = "absolute", dec_out = ".";
    Index dec_rank = 0;
    double dec_tol = 1e-9, dec_max_sweeps = 10000, dec_max_seconds = 0;
    std::uint64_t dec_seed = 0;
    SolverFlagOverrides dec_ov;
    dec->add_option("--tensor", dec_tensor, "Tensor file (cpnest-tensor v1)")->required();
    dec->add_option("--rank", dec_rank, "Decomposition rank")->required();
    dec->add_option("--solver", dec_solver, "Solver name, e.g. Nesterov-ALS-RF-SG");
    dec->add_option("--tol", dec_tol, "Gradient tolerance");
    dec->add_option("--tol-mode", dec_tol_mode, "absolute | relative");
    dec->add_option("--max-sweeps", dec_max_sweeps, "Work budget in sweep-equivalents");
    dec->add_option("--max-seconds", dec_max_seconds, "Wall-clock budget (0 = unlimited)");
    dec->add_option("--init-seed", dec_seed, "Seed for the random initial guess");
    dec->add_option("--out", dec_out, "Output directory");
    add_solver_override_flags(dec, dec_ov);

    // bench
    auto* bench = app.add_subcommand("bench", "Run an experiment plan from a JSON config");
    std::string bench_plan;
    std::optional<std::string> bench_out;
    std::optional<int> bench_parallel;
    bench->add_option("--plan", bench_plan, "Plan JSON file")->required();
    bench->add_option("--out", bench_out, "Override the plan's output directory");
    bench->add_option("--parallel", bench_parallel, "Override the plan's parallelism");

    // profile
    auto* prof = app.add_subcommand("profile", "Build a performance profile from traces");
    std::string prof_dir, prof_metric = "work", prof_out = "profile.csv";
    std::optional<std::string> prof_svg;
    bool prof_drop = false;
    prof->add_option("--traces", prof_dir, "Directory of .trace files")->required();
    prof->add_option("--metric", prof_metric, "work | wall");
    prof->add_option("--out", prof_out, "Output CSV path");
    prof->add_option("--svg", prof_svg, "Optional SVG plot path");
    prof->add_flag("--drop-unsolved", prof_drop, "Drop problems no solver converged on");

    // curve
    auto* curve = app.add_subcommand("curve", "Emit a convergence curve for one trace");
    std::string curve_trace, curve_metric = "work";
    std::optional<std::string> curve_data, curve_svg;
    curve->add_option("--trace", curve_trace, "Trace file")->required();
    curve->add_option("--out-data", curve_data, "Output data file");
    curve->add_option("--out-svg", curve_svg, "Output SVG file");
    curve->add_option("--metric", curve_metric, "work | wall");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_out, gen_classes, gen_instances, gen_seed);
        if (dec->parsed())
            return cmd_decompose(dec_tensor, dec_rank, dec_solver, dec_ov, dec_tol, dec_tol_mode,
                                 dec_max_sweeps, dec_max_seconds, dec_seed, dec_out);
        if (bench->parsed()) return cmd_bench(bench_plan, bench_out, bench_parallel);
        if (prof->parsed()) return cmd_profile(prof_dir, prof_metric, prof_out, prof_svg, prof_drop);
        if (curve->parsed()) return cmd_curve(curve_trace, curve_data, curve_svg, curve_metric);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
