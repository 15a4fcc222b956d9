#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "test_helpers.hpp"

using namespace cpnest;
using namespace helpers;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cpnest-harness-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::vector<RunSummary> hand_table() {
    // 3 solvers x 4 problems; best costs per problem: 10, 10, 5, 6
    return {
        {"p1", "A", true, 10},  {"p1", "B", true, 20},  {"p1", "C", false, 0},
        {"p2", "A", true, 40},  {"p2", "B", true, 10},  {"p2", "C", true, 30},
        {"p3", "A", false, 0},  {"p3", "B", false, 0},  {"p3", "C", true, 5},
        {"p4", "A", true, 6},   {"p4", "B", true, 6},   {"p4", "C", true, 12},
    };
}

}  // namespace

TEST_CASE("tau profile reproduces the two-solver example", "[harness]") {
    std::vector<RunSummary> runs = {{"p", "fast", true, 10.0}, {"p", "slow", true, 20.0}};
    TauProfile prof = tau_profile(runs, {1.0, 2.0});
    REQUIRE(prof.solvers == std::vector<std::string>{"fast", "slow"});
    CHECK(prof.fractions[0][0] == 1.0);
    CHECK(prof.fractions[1][0] == 0.0);
    CHECK(prof.fractions[0][1] == 1.0);
    CHECK(prof.fractions[1][1] == 1.0);
}

TEST_CASE("tau profile matches the hand-derived 3x4 cost table", "[harness]") {
    TauProfile prof = tau_profile(hand_table(), {1, 2, 3, 4, 5});
    REQUIRE(prof.solvers == std::vector<std::string>{"A", "B", "C"});
    const std::vector<double> wantA = {0.5, 0.5, 0.5, 0.75, 0.75};
    const std::vector<double> wantB = {0.5, 0.75, 0.75, 0.75, 0.75};
    const std::vector<double> wantC = {0.25, 0.5, 0.75, 0.75, 0.75};
    CHECK(prof.fractions[0] == wantA);
    CHECK(prof.fractions[1] == wantB);
    CHECK(prof.fractions[2] == wantC);
}

TEST_CASE("unsolved problems cap the fraction below one", "[harness]") {
    std::vector<RunSummary> runs = {{"p1", "A", true, 1.0},
                                    {"p2", "A", false, 0.0},
                                    {"p1", "B", true, 2.0},
                                    {"p2", "B", true, 3.0}};
    TauProfile prof = tau_profile(runs, {1.0, 100.0});
    CHECK(prof.fractions[0][1] == 0.5);  // A never solves p2
    CHECK(prof.fractions[1][1] == 1.0);
}

TEST_CASE("a single solver's profile equals its solve rate", "[harness]") {
    std::vector<RunSummary> runs = {{"p1", "A", true, 3.0},
                                    {"p2", "A", false, 0.0},
                                    {"p3", "A", true, 9.0}};
    TauProfile prof = tau_profile(runs, {1.0, 4.0, 1e6});
    for (double f : prof.fractions[0]) CHECK(f == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("tau fractions are monotone and bounded by the solve rate", "[harness]") {
    TauProfile prof = tau_profile(hand_table(), default_tau_grid());
    for (const auto& fr : prof.fractions) {
        for (std::size_t i = 1; i < fr.size(); ++i) CHECK(fr[i] >= fr[i - 1]);
        CHECK(fr.back() <= 1.0);
    }
}

TEST_CASE("tau grid validation", "[harness]") {
    std::vector<RunSummary> runs = {{"p", "A", true, 1.0}};
    CHECK_THROWS_AS(tau_profile(runs, {0.5, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(tau_profile(std::vector<RunSummary>{}, {1.0}), std::invalid_argument);
}

TEST_CASE("solver names parse to the documented configurations", "[harness]") {
    SolverConfig c1 = parse_solver_name("Nesterov-ALS-RF-SG");
    CHECK(c1.variant == SolverVariant::nesterov_als_restarted);
    CHECK(c1.restart.kind == RestartKind::rf);
    CHECK(c1.momentum.kind == MomentumKind::sg);
    CHECK(c1.restart.delay == 1);
    CHECK(c1.restart.eta_mode == EtaMode::fixed_one);

    SolverConfig c2 = parse_solver_name("Nesterov-ALS-RG-S1-E");
    CHECK(c2.restart.kind == RestartKind::rg);
    CHECK(c2.momentum.kind == MomentumKind::s1);
    CHECK(c2.restart.eta_mode == EtaMode::scheduled);
    CHECK(c2.restart.eta0 == 1.25);
    CHECK(c2.restart.eta_min == 1.15);

    SolverConfig c3 = parse_solver_name("ALS");
    CHECK(c3.variant == SolverVariant::als);

    SolverConfig c4 = parse_solver_name("Nesterov-ALS-RF-SG-D2-E");
    CHECK(c4.restart.delay == 2);
    CHECK(c4.restart.eta_mode == EtaMode::scheduled);

    SolverConfig c5 = parse_solver_name("Nesterov-ALS-SN");
    CHECK(c5.variant == SolverVariant::nesterov_als_direct);

    CHECK(parse_solver_name("Nesterov-ALS-LS").variant == SolverVariant::nesterov_als_ls);
    CHECK(parse_solver_name("Gradient-Descent").variant == SolverVariant::gradient_descent);
    CHECK(parse_solver_name("Nesterov-Gradient").variant == SolverVariant::nesterov_gradient);
}

TEST_CASE("solver name parsing rejects malformed names", "[harness]") {
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS-RF"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS-LS-RF"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS-SG-SG"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS-D2-SG"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nesterov-ALS-RF-SG-D0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name("Nester"), std::invalid_argument);
    CHECK_THROWS_AS(parse_solver_name(""), std::invalid_argument);
}

TEST_CASE("solver names round-trip through parse and format", "[harness]") {
    std::vector<std::string> names = {"ALS",
                                      "Nesterov-ALS-LS",
                                      "Nesterov-ALS-SN",
                                      "Nesterov-ALS-SG",
                                      "Nesterov-ALS-S1",
                                      "Gradient-Descent",
                                      "Nesterov-Gradient"};
    for (const char* r : {"RF", "RG", "RX"})
        for (const char* s : {"SN", "SG", "S1"})
            for (const char* suffix : {"", "-D2", "-E", "-D3-E"})
                names.push_back(std::string("Nesterov-ALS-") + r + "-" + s + suffix);
    for (const std::string& name : names) {
        SolverConfig cfg = parse_solver_name(name);
        CHECK(format_solver_name(cfg) == name);
        CHECK(parse_solver_name(format_solver_name(cfg)) == cfg);
    }
}

TEST_CASE("traces round-trip through the text format", "[harness]") {
    TempDir dir;
    ProblemInstance p = make_synthetic([] {
        SyntheticSpec s;
        s.s = 8;
        s.R = 2;
        s.c = 0.7;
        s.seed = 5;
        return s;
    }());
    SolverConfig cfg = parse_solver_name("Nesterov-ALS-RF-SG");
    cfg.max_sweeps = 60;
    SolveResult res = run_solver(p.tensor, p.x0, cfg);
    res.trace.solver_name = "Nesterov-ALS-RF-SG";
    res.trace.provenance.emplace_back("problem", "unit");
    res.trace.provenance.emplace_back("note", "has = signs and spaces");

    const fs::path file = dir.path / "run.trace";
    write_trace(res.trace, file);
    RunTrace back = read_trace(file);

    CHECK(back.solver_name == res.trace.solver_name);
    CHECK(back.shape == res.trace.shape);
    CHECK(back.rank == res.trace.rank);
    CHECK(back.n_flat == res.trace.n_flat);
    CHECK(back.status == res.trace.status);
    REQUIRE(back.records.size() == res.trace.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        CHECK(back.records[i].f == res.trace.records[i].f);
        CHECK(back.records[i].grad_norm == res.trace.records[i].grad_norm);
        CHECK(back.records[i].beta == res.trace.records[i].beta);
        CHECK(back.records[i].work == res.trace.records[i].work);
    }
    CHECK(trace_checksum(back) == trace_checksum(res.trace));
}

TEST_CASE("trace checksums ignore wall-clock columns", "[harness]") {
    RunTrace a;
    a.solver_name = "X";
    a.shape = {2, 2};
    a.rank = 1;
    a.n_flat = 4;
    a.tol = 1e-9;
    a.status = RunStatus::converged;
    a.records.push_back({1, 1.0, 0.5, 0.0, 0.0, false, 1, 1, 0, 1.0, 0.123});
    RunTrace b = a;
    b.records[0].wall_seconds = 9.876;
    CHECK(trace_checksum(a) == trace_checksum(b));
    b.records[0].f = 1.5;
    CHECK(trace_checksum(a) != trace_checksum(b));
}

TEST_CASE("run_plan executes every pair and is deterministic in work metric", "[harness]") {
    TempDir dir;
    ExperimentPlan plan;
    for (int inst = 0; inst < 2; ++inst) {
        SyntheticSpec spec;
        spec.s = 8;
        spec.R = 2;
        spec.c = 0.7;
        spec.seed = derive_seed(7, 1, static_cast<std::uint64_t>(inst));
        plan.problems.push_back({"toy" + std::to_string(inst), spec});
    }
    for (const char* name : {"ALS", "Nesterov-ALS-RF-SG"}) {
        SolverConfig cfg = parse_solver_name(name);
        cfg.tol = 1e-9;
        cfg.max_sweeps = 400;
        plan.solvers.push_back({name, cfg});
    }
    plan.parallelism = 2;
    plan.output_dir = dir.path / "runs";

    auto outcomes = run_plan(plan);
    REQUIRE(outcomes.size() == 4);
    for (const auto& o : outcomes) {
        CHECK(o.ok);
        CHECK(fs::exists(o.trace_path));
    }
    write_manifest(outcomes, dir.path / "manifest.csv");
    CHECK(fs::exists(dir.path / "manifest.csv"));

    plan.output_dir = dir.path / "runs2";
    auto rerun = run_plan(plan);
    REQUIRE(rerun.size() == outcomes.size());
    for (std::size_t i = 0; i < rerun.size(); ++i) {
        CHECK(rerun[i].checksum == outcomes[i].checksum);
        CHECK(rerun[i].work == outcomes[i].work);
    }
}

TEST_CASE("run_plan records individual failures without aborting", "[harness]") {
    TempDir dir;
    ExperimentPlan plan;
    SyntheticSpec ok;
    ok.s = 6;
    ok.R = 2;
    ok.c = 0.5;
    ok.seed = 3;
    plan.problems.push_back({"good", ok});
    plan.problems.push_back({"missing", FileProblem{dir.path / "no-such.tns", 2, 1}});
    SolverConfig cfg = parse_solver_name("ALS");
    cfg.max_sweeps = 100;
    plan.solvers.push_back({"ALS", cfg});
    plan.output_dir = dir.path / "runs";

    auto outcomes = run_plan(plan);
    REQUIRE(outcomes.size() == 2);
    CHECK(outcomes[0].ok);
    CHECK_FALSE(outcomes[1].ok);
    CHECK_FALSE(outcomes[1].error.empty());
}

TEST_CASE("relative tolerance mode scales the threshold by the initial gradient", "[harness]") {
    TempDir dir;
    SyntheticSpec spec;
    spec.s = 8;
    spec.R = 2;
    spec.c = 0.7;
    spec.seed = 11;
    ProblemInstance p = make_synthetic(spec);
    const double gnorm0 =
        gradient(p.tensor, unpack(p.x0, p.tensor.shape, p.rank_to_fit)).norm();

    ExperimentPlan plan;
    plan.problems.push_back({"rel", spec});
    SolverConfig cfg = parse_solver_name("ALS");
    cfg.tol = 1e-7;
    cfg.max_sweeps = 2000;
    plan.solvers.push_back({"ALS", cfg});
    plan.tol_policy = TolPolicy::relative_to_initial_gradient;
    plan.output_dir = dir.path;

    auto outcomes = run_plan(plan);
    REQUIRE(outcomes.size() == 1);
    REQUIRE(outcomes[0].ok);
    RunTrace trace = read_trace(outcomes[0].trace_path);
    CHECK(trace.tol == Catch::Approx(1e-7 * gnorm0).epsilon(1e-12));
    if (trace.status == RunStatus::converged)
        CHECK(trace.last().grad_norm / trace.n_flat <= trace.tol);
}

TEST_CASE("convergence curves mirror the trace", "[harness]") {
    TempDir dir;
    SyntheticSpec spec;
    spec.s = 10;
    spec.R = 3;
    spec.c = 0.9;
    spec.l1 = 1.0;
    spec.l2 = 1.0;
    spec.seed = 21;
    ProblemInstance p = make_synthetic(spec);
    SolverConfig cfg = parse_solver_name("Nesterov-ALS-RF-SG");
    cfg.max_sweeps = 300;
    SolveResult res = run_solver(p.tensor, p.x0, cfg);
    res.trace.solver_name = "Nesterov-ALS-RF-SG";

    const fs::path data = dir.path / "curve.dat";
    const fs::path svg = dir.path / "curve.svg";
    emit_convergence_curve(res.trace, data, svg);

    // one data row per record (plus the comment header)
    std::ifstream in(data);
    std::string line;
    std::size_t rows = 0, comments = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#')
            ++comments;
        else if (!line.empty())
            ++rows;
    }
    CHECK(comments == 1);
    CHECK(rows == res.trace.records.size());

    // markers appear exactly once per restarted record
    std::size_t restarts = 0;
    for (const auto& r : res.trace.records)
        if (r.restarted) ++restarts;
    std::ifstream svg_in(svg);
    std::string svg_text((std::istreambuf_iterator<char>(svg_in)),
                         std::istreambuf_iterator<char>());
    std::size_t markers = 0, at = 0;
    while ((at = svg_text.find("restart-marker", at)) != std::string::npos) {
        ++markers;
        at += 1;
    }
    CHECK(markers == restarts);
    CHECK(svg_text.find("</svg>") != std::string::npos);
}

TEST_CASE("profile csv lists one fraction column per solver", "[harness]") {
    TempDir dir;
    TauProfile prof = tau_profile(hand_table(), {1.0, 2.0, 4.0});
    const fs::path csv = dir.path / "profile.csv";
    write_profile_csv(prof, csv);
    std::ifstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "tau,A,B,C");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}
