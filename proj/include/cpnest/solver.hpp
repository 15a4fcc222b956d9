#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpnest/kruskal.hpp"
#include "cpnest/line_search.hpp"
#include "cpnest/tensor.hpp"

// Solver drivers. All variants share one outer loop:
//
//     x_{k+1} = ALS(x_k + beta_k (x_k - x_{k-1}))        (ALS family)
//     x_{k+1} = y_k - alpha_k grad f(y_k),  y_k = x_k + beta_k (x_k - x_{k-1})
//                                                         (gradient family)
//
// with beta_k chosen by a momentum rule (Nesterov sequence, gradient ratio,
// constant one, or a line search) and an optional adaptive restart that
// discards a bad iterate, duplicates the previous one, and forces a plain
// ALS step. A restart is only allowed when the previous step used a nonzero
// momentum weight, so two restarts can never be adjacent.
//
// Work is accounted in sweep-equivalents: one ALS sweep costs 1, one fused
// objective+gradient evaluation costs 1 (it performs the same N MTTKRPs a
// sweep does), and an objective-only evaluation would cost 1/N. These ratios
// are fixed per problem by operation count, which keeps the work metric
// bit-reproducible across runs and machines.

namespace cpnest {

enum class SolverVariant {
    als,
    nesterov_als_direct,
    nesterov_als_ls,
    nesterov_als_restarted,
    gradient_descent,
    nesterov_gradient,
};

enum class MomentumKind { zero, sn, sg, s1 };

struct MomentumRule {
    MomentumKind kind = MomentumKind::sn;
    bool operator==(const MomentumRule&) const = default;
};

enum class RestartKind { none, rf, rg, rx };
enum class EtaMode { fixed_one, scheduled };

struct RestartRule {
    RestartKind kind = RestartKind::none;
    int delay = 1;
    EtaMode eta_mode = EtaMode::fixed_one;
    double eta0 = 1.25;
    double eta_min = 1.15;
    double eta_decrement = 0.02;

    void validate() const {
        if (delay < 1) throw std::invalid_argument("restart delay must be >= 1");
        if (eta_mode == EtaMode::scheduled) {
            if (!(eta0 >= eta_min && eta_min >= 1.0))
                throw std::invalid_argument("eta schedule requires eta0 >= eta_min >= 1");
            if (!(eta_decrement > 0.0))
                throw std::invalid_argument("eta decrement must be positive");
        }
    }
    bool operator==(const RestartRule&) const = default;
};

struct SolverConfig {
    SolverVariant variant = SolverVariant::als;
    MomentumRule momentum;
    RestartRule restart;
    LineSearchConfig ls;
    double tol = 1e-9;
    double max_sweeps = 10000;  // budget in sweep-equivalents
    double max_seconds = std::numeric_limits<double>::infinity();

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
        if (!(max_sweeps > 0.0)) throw std::invalid_argument("max_sweeps must be positive");
        if (!(max_seconds > 0.0)) throw std::invalid_argument("max_seconds must be positive");
        restart.validate();
        ls.validate();
    }

    /// Variants imply parts of the rule configuration; normalization pins
    /// them so equal behavior means equal configs.
    SolverConfig normalized() const {
        SolverConfig c = *this;
        switch (c.variant) {
            case SolverVariant::als:
            case SolverVariant::gradient_descent:
                c.momentum.kind = MomentumKind::zero;
                c.restart.kind = RestartKind::none;
                break;
            case SolverVariant::nesterov_als_direct:
            case SolverVariant::nesterov_gradient:
                c.momentum.kind = MomentumKind::sn;
                c.restart.kind = RestartKind::none;
                break;
            case SolverVariant::nesterov_als_ls:
                c.momentum.kind = MomentumKind::zero;
                c.restart.kind = RestartKind::none;
                break;
            case SolverVariant::nesterov_als_restarted:
                break;
        }
        if (c.restart.kind == RestartKind::none) {
            c.restart = RestartRule{};
        } else if (c.restart.eta_mode == EtaMode::fixed_one) {
            c.restart.eta0 = 1.25;
            c.restart.eta_min = 1.15;
            c.restart.eta_decrement = 0.02;
        }
        return c;
    }

    bool operator==(const SolverConfig&) const = default;
};

/// Mutable per-run state: the iterate pair, counters, the eta schedule, the
/// Nesterov lambda recurrence, and short histories of f, ||grad f|| and
/// ||x_k - x_{k-1}|| (most recent at the back, duplicated iterates included).
struct SolverState {
    FlatIterate x_curr, x_prev;
    long k = 1;             // global iteration index
    long i = 2;             // iterations since the last restart
    double beta_prev = 0.0; // momentum weight used by the previous update
    double eta_curr = 1.0;
    long rows = 0;          // history rows pushed so far
    std::size_t hist_cap = 3;
    std::deque<double> f_hist, gnorm_hist, dx_hist;
    double lambda_prev = 0.0;  // lambda value at lambda_index
    long lambda_index = 0;

    void push_stats(double f, double gnorm, double dx) {
        f_hist.push_back(f);
        gnorm_hist.push_back(gnorm);
        dx_hist.push_back(dx);
        while (f_hist.size() > hist_cap) {
            f_hist.pop_front();
            gnorm_hist.pop_front();
            dx_hist.pop_front();
        }
        ++rows;
    }

    void overwrite_back(double f, double gnorm, double dx) {
        f_hist.back() = f;
        gnorm_hist.back() = gnorm;
        dx_hist.back() = dx;
    }

    // offset 0 = current iterate, offset d = iterate d rows back
    double f_at(long offset) const { return f_hist[f_hist.size() - 1 - offset]; }
    double gnorm_at(long offset) const { return gnorm_hist[gnorm_hist.size() - 1 - offset]; }
    double dx_at(long offset) const { return dx_hist[dx_hist.size() - 1 - offset]; }

    void reset_lambda() {
        lambda_prev = 0.0;
        lambda_index = 0;
    }
};

inline double next_lambda(double lambda) {
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lambda * lambda));
}

/// Momentum weight for the current iteration. The Nesterov sequence is
/// indexed by the restart-local counter state.i; the recurrence state is
/// advanced as a side effect.
inline double momentum_weight(const MomentumRule& rule, SolverState& state) {
    switch (rule.kind) {
        case MomentumKind::zero:
            return 0.0;
        case MomentumKind::s1:
            return 1.0;
        case MomentumKind::sg: {
            if (state.rows < 2) return 0.0;
            const double prev = state.gnorm_at(1);
            if (prev == 0.0) return 0.0;
            return state.gnorm_at(0) / prev;
        }
        case MomentumKind::sn: {
            while (state.lambda_index < state.i - 1) {
                state.lambda_prev = next_lambda(state.lambda_prev);
                ++state.lambda_index;
            }
            const double lambda_im1 = state.lambda_prev;
            const double lambda_i = next_lambda(lambda_im1);
            state.lambda_prev = lambda_i;
            state.lambda_index = state.i;
            return (lambda_im1 - 1.0) / lambda_i;
        }
    }
    return 0.0;
}

/// Restart test on the current iterate. Always false while the history is
/// shorter than the delay needs or when the previous step was already a
/// plain ALS step (beta_prev == 0).
inline bool restart_check(const RestartRule& rule, const SolverState& state) {
    if (rule.kind == RestartKind::none) return false;
    if (state.beta_prev == 0.0) return false;
    const long d = rule.delay;
    const long needed = (rule.kind == RestartKind::rx) ? d + 2 : d + 1;
    if (state.rows < needed) return false;
    const double eta = state.eta_curr;
    switch (rule.kind) {
        case RestartKind::rf:
            return state.f_at(0) > eta * state.f_at(d);
        case RestartKind::rg:
            return state.gnorm_at(0) > eta * state.gnorm_at(d);
        case RestartKind::rx:
            return state.dx_at(0) < eta * state.dx_at(d);
        case RestartKind::none:
            break;
    }
    return false;
}

/// Advances the eta schedule by one iteration and returns the new value:
/// reset to eta0 on a restart, otherwise decay toward eta_min. Fixed mode
/// always yields 1.
inline double eta_advance(const RestartRule& rule, SolverState& state, bool just_restarted) {
    if (rule.eta_mode == EtaMode::fixed_one) {
        state.eta_curr = 1.0;
        return 1.0;
    }
    if (just_restarted)
        state.eta_curr = rule.eta0;
    else
        state.eta_curr = std::max(rule.eta_min, state.eta_curr - rule.eta_decrement);
    return state.eta_curr;
}

/// Termination criterion: scaled gradient norm at or below tol.
inline bool terminated(double grad_norm, Index n_flat, double tol) {
    return grad_norm / static_cast<double>(n_flat) <= tol;
}

enum class RunStatus { converged, budget_exhausted, stalled };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::budget_exhausted: return "budget_exhausted";
        case RunStatus::stalled: return "stalled";
    }
    return "unknown";
}

struct IterationRecord {
    long k = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    double delta_x_norm = 0.0;
    double beta = 0.0;
    bool restarted = false;
    long n_f_evals = 0;
    long n_g_evals = 0;
    long n_als_sweeps = 0;
    double work = 0.0;  // cumulative sweep-equivalents
    double wall_seconds = 0.0;
};

struct RunTrace {
    std::string solver_name;
    std::vector<std::pair<std::string, std::string>> provenance;
    std::vector<Index> shape;
    Index rank = 0;
    Index n_flat = 0;
    double tol = 0.0;
    RunStatus status = RunStatus::budget_exhausted;
    std::vector<IterationRecord> records;

    const IterationRecord& last() const { return records.back(); }
    double total_work() const { return records.empty() ? 0.0 : records.back().work; }
    double total_wall() const { return records.empty() ? 0.0 : records.back().wall_seconds; }
    bool converged() const { return status == RunStatus::converged; }
};

struct SolveResult {
    KruskalModel model;
    RunTrace trace;
};

namespace detail {

struct WorkCounters {
    long nf = 0, ng = 0, nsweeps = 0;
    double work = 0.0;
};

// Consecutive near-identical objective values before a run is declared
// stalled; guards against flat runs that will never hit the gradient tol.
inline constexpr int kStallLimit = 50;
inline constexpr double kStallRelChange = 1e-16;

inline bool is_gradient_family(SolverVariant v) {
    return v == SolverVariant::gradient_descent || v == SolverVariant::nesterov_gradient;
}

}  // namespace detail

/// Runs one solver on one problem. The rank is inferred from the initial
/// iterate's length. Deterministic given (tensor, x0, config): wall-clock
/// columns aside, two runs produce identical traces.
inline SolveResult run_solver(const DenseTensor& t, const FlatIterate& x0,
                              const SolverConfig& cfg_in) {
    const SolverConfig cfg = cfg_in.normalized();
    cfg.validate();

    Index sum_extents = 0;
    for (Index e : t.shape) sum_extents += e;
    if (x0.size() == 0 || x0.size() % sum_extents != 0)
        throw std::invalid_argument("initial iterate length incompatible with tensor shape");
    const Index rank = x0.size() / sum_extents;
    const Index n_flat = x0.size();
    const double norm_t_sq = norm_sq(t);

    detail::WorkCounters counters;
    const auto t_start = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };
    auto fused = [&](const FlatIterate& x) {
        ++counters.nf;
        ++counters.ng;
        counters.work += 1.0;
        return value_and_gradient(t, unpack(x, t.shape, rank), norm_t_sq);
    };
    auto sweep = [&](const FlatIterate& x) {
        ++counters.nsweeps;
        counters.work += 1.0;
        return pack(als_sweep(t, unpack(x, t.shape, rank)));
    };

    RunTrace trace;
    trace.shape = t.shape;
    trace.rank = rank;
    trace.n_flat = n_flat;
    trace.tol = cfg.tol;

    SolverState st;
    st.hist_cap = static_cast<std::size_t>(std::max(cfg.restart.delay + 2, 3));

    auto record = [&](double f, double gnorm, double dxn, double beta, bool restarted) {
        trace.records.push_back({st.k, f, gnorm, dxn, beta, restarted, counters.nf, counters.ng,
                                 counters.nsweeps, counters.work, wall()});
    };

    double best_f = std::numeric_limits<double>::infinity();
    FlatIterate best_x = x0;
    auto consider_best = [&](double f, const FlatIterate& x) {
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    };

    int stall_count = 0;
    double f_prev_row = std::numeric_limits<double>::quiet_NaN();
    auto stall_update = [&](double f) {
        if (std::isfinite(f_prev_row) &&
            std::fabs(f - f_prev_row) <= detail::kStallRelChange * (1.0 + std::fabs(f_prev_row)))
            ++stall_count;
        else
            stall_count = 0;
        f_prev_row = f;
    };

    FlatIterate final_x;
    const bool gradient_family = detail::is_gradient_family(cfg.variant);

    if (!gradient_family) {
        // --- ALS family ---
        st.x_prev = x0;
        ValueAndGradient vg = fused(st.x_prev);
        double f = vg.f, gnorm = vg.g.norm();
        st.k = 1;
        st.push_stats(f, gnorm, 0.0);
        record(f, gnorm, 0.0, 0.0, false);
        consider_best(f, st.x_prev);
        stall_update(f);

        // Seed step: the first update is always a plain ALS sweep.
        st.x_curr = sweep(st.x_prev);
        vg = fused(st.x_curr);
        f = vg.f;
        gnorm = vg.g.norm();
        double dxn = (st.x_curr - st.x_prev).norm();
        st.k = 2;
        st.i = 2;
        st.beta_prev = 0.0;
        st.eta_curr = (cfg.restart.eta_mode == EtaMode::scheduled) ? cfg.restart.eta0 : 1.0;

        while (true) {
            st.push_stats(f, gnorm, dxn);
            bool restarted = false;
            double beta = 0.0;
            if (restart_check(cfg.restart, st)) {
                // Discard the bad iterate: duplicate the previous one and
                // force a plain ALS step this iteration.
                restarted = true;
                st.x_curr = st.x_prev;
                const IterationRecord& prev_row = trace.records.back();
                f = prev_row.f;
                gnorm = prev_row.grad_norm;
                dxn = 0.0;
                st.overwrite_back(f, gnorm, dxn);
                st.i = 1;
                st.reset_lambda();
            } else {
                switch (cfg.variant) {
                    case SolverVariant::als:
                        beta = 0.0;
                        break;
                    case SolverVariant::nesterov_als_ls: {
                        const FlatIterate delta = st.x_curr - st.x_prev;
                        if (delta.norm() == 0.0) {
                            beta = 0.0;
                            break;
                        }
                        const double dphi0 = vg.g.dot(delta);
                        if (dphi0 >= 0.0) {
                            beta = 0.0;  // not a descent direction; pure ALS step
                            break;
                        }
                        auto oracle = [&](double a) {
                            ValueAndGradient v = fused(st.x_curr + a * delta);
                            return std::make_pair(v.f, v.g.dot(delta));
                        };
                        const LineSearchResult res = more_thuente(oracle, f, dphi0, cfg.ls);
                        beta = res.step;
                        break;
                    }
                    default:
                        beta = momentum_weight(cfg.momentum, st);
                        break;
                }
            }
            eta_advance(cfg.restart, st, restarted);
            record(f, gnorm, dxn, beta, restarted);
            consider_best(f, st.x_curr);
            stall_update(f);

            if (terminated(gnorm, n_flat, cfg.tol)) {
                trace.status = RunStatus::converged;
                final_x = st.x_curr;
                break;
            }
            if (counters.work >= cfg.max_sweeps || wall() >= cfg.max_seconds) {
                trace.status = RunStatus::budget_exhausted;
                final_x = best_x;
                break;
            }
            if (stall_count >= detail::kStallLimit) {
                trace.status = RunStatus::stalled;
                final_x = best_x;
                break;
            }

            FlatIterate y =
                (beta == 0.0) ? st.x_curr : FlatIterate(st.x_curr + beta * (st.x_curr - st.x_prev));
            FlatIterate x_next = sweep(y);
            st.x_prev = std::move(st.x_curr);
            st.x_curr = std::move(x_next);
            vg = fused(st.x_curr);
            f = vg.f;
            gnorm = vg.g.norm();
            dxn = (st.x_curr - st.x_prev).norm();
            st.beta_prev = beta;
            ++st.k;
            ++st.i;
        }
    } else {
        // --- Gradient family: x_{k+1} = y_k - alpha_k grad f(y_k) ---
        st.x_prev = x0;
        st.x_curr = x0;
        ValueAndGradient vg = fused(st.x_curr);
        double f = vg.f, gnorm = vg.g.norm();
        double dxn = 0.0;
        st.k = 1;

        while (true) {
            st.push_stats(f, gnorm, dxn);
            st.i = st.k;  // no restarts: the Nesterov sequence is indexed by k
            const double beta = (cfg.variant == SolverVariant::nesterov_gradient)
                                    ? momentum_weight(cfg.momentum, st)
                                    : 0.0;
            record(f, gnorm, dxn, beta, false);
            consider_best(f, st.x_curr);
            stall_update(f);

            if (terminated(gnorm, n_flat, cfg.tol)) {
                trace.status = RunStatus::converged;
                final_x = st.x_curr;
                break;
            }
            if (counters.work >= cfg.max_sweeps || wall() >= cfg.max_seconds) {
                trace.status = RunStatus::budget_exhausted;
                final_x = best_x;
                break;
            }
            if (stall_count >= detail::kStallLimit) {
                trace.status = RunStatus::stalled;
                final_x = best_x;
                break;
            }

            const FlatIterate delta = st.x_curr - st.x_prev;
            FlatIterate y;
            ValueAndGradient vg_y;
            if (beta == 0.0 || delta.norm() == 0.0) {
                y = st.x_curr;
                vg_y = vg;
            } else {
                y = st.x_curr + beta * delta;
                vg_y = fused(y);
            }
            const double gnorm_y = vg_y.g.norm();

            FlatIterate x_next;
            if (gnorm_y == 0.0) {
                x_next = y;
                vg = vg_y;
            } else {
                const FlatIterate dir = -vg_y.g;
                const double dphi0 = -gnorm_y * gnorm_y;
                bool have_last = false;
                double last_a = 0.0;
                ValueAndGradient last;
                auto oracle = [&](double a) {
                    last = fused(y + a * dir);
                    last_a = a;
                    have_last = true;
                    return std::make_pair(last.f, last.g.dot(dir));
                };
                const LineSearchResult res = more_thuente(oracle, vg_y.f, dphi0, cfg.ls);
                x_next = y + res.step * dir;
                if (have_last && last_a == res.step)
                    vg = last;
                else if (res.step == 0.0)
                    vg = vg_y;
                else
                    vg = fused(x_next);
            }

            st.x_prev = std::move(st.x_curr);
            st.x_curr = std::move(x_next);
            f = vg.f;
            gnorm = vg.g.norm();
            dxn = (st.x_curr - st.x_prev).norm();
            st.beta_prev = beta;
            ++st.k;
        }
    }

    return SolveResult{unpack(final_x, t.shape, rank), std::move(trace)};
}

}  // namespace cpnest
