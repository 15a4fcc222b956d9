#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

// More-Thuente cubic line search (More & Thuente, ACM TOMS 1994). Finds a
// step satisfying the strong Wolfe conditions
//     phi(a) <= phi(0) + c_descent * a * phi'(0)
//     |phi'(a)| <= c_curv * |phi'(0)|
// by maintaining an interval of uncertainty updated with cubic/quadratic
// interpolation, using the modified-function trick in stage one. The oracle
// returns (value, derivative) of the one-dimensional restriction; each call
// typically costs a full objective + gradient evaluation upstream, so the
// iteration budget is small.

namespace cpnest {

struct LineSearchConfig {
    double c_descent = 1e-4;  // sufficient-decrease constant
    double c_curv = 1e-2;     // curvature constant
    double step0 = 1.0;       // initial trial step
    int max_iters = 20;       // max oracle evaluations
    double step_min = 1e-20;
    double step_max = 1e20;

    void validate() const {
        if (!(0.0 < c_descent && c_descent < c_curv && c_curv < 1.0))
            throw std::invalid_argument("line search requires 0 < c_descent < c_curv < 1");
        if (!(step0 > 0.0)) throw std::invalid_argument("line search step0 must be positive");
        if (max_iters < 1) throw std::invalid_argument("line search max_iters must be >= 1");
        if (!(step_min >= 0.0 && step_min < step_max))
            throw std::invalid_argument("line search step bounds invalid");
    }

    bool operator==(const LineSearchConfig&) const = default;
};

enum class LineSearchStatus { converged, max_iters, degenerate_direction };

struct LineSearchResult {
    double step = 0.0;
    double f_at_step = 0.0;
    double g_dot_d_at_step = 0.0;
    int n_evals = 0;
    LineSearchStatus status = LineSearchStatus::max_iters;
};

/// One-dimensional oracle: step -> (value, derivative).
using LineOracle = std::function<std::pair<double, double>(double)>;

namespace detail {

// Interval update of More & Thuente ("cstep"). Updates the endpoints
// (stx, fx, dx), (sty, fy, dy) and proposes the next trial step from the
// current trial (stp, fp, dp). `brackt` flips to true once a minimizer is
// bracketed.
inline void mt_update_interval(double& stx, double& fx, double& dx, double& sty, double& fy,
                               double& dy, double& stp, double fp, double dp, bool& brackt,
                               double stpmin, double stpmax) {
    const double sgnd = dp * (dx >= 0.0 ? 1.0 : -1.0);
    bool bound = false;
    double stpf = stp;

    if (fp > fx) {
        // Higher value: the minimum is bracketed between stx and stp.
        bound = true;
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::fabs(theta), std::fabs(dx), std::fabs(dp)});
        double gamma = s * std::sqrt(std::max(0.0, (theta / s) * (theta / s) - (dx / s) * (dp / s)));
        if (stp < stx) gamma = -gamma;
        const double p = (gamma - dx) + theta;
        const double q = ((gamma - dx) + gamma) + dp;
        const double r = p / q;
        const double stpc = stx + r * (stp - stx);
        const double stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx);
        stpf = (std::fabs(stpc - stx) < std::fabs(stpq - stx)) ? stpc : stpc + (stpq - stpc) / 2.0;
        brackt = true;
    } else if (sgnd < 0.0) {
        // Lower value, derivative changed sign.
        bound = false;
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::fabs(theta), std::fabs(dx), std::fabs(dp)});
        double gamma = s * std::sqrt(std::max(0.0, (theta / s) * (theta / s) - (dx / s) * (dp / s)));
        if (stp > stx) gamma = -gamma;
        const double p = (gamma - dp) + theta;
        const double q = ((gamma - dp) + gamma) + dx;
        const double r = p / q;
        const double stpc = stp + r * (stx - stp);
        const double stpq = stp + (dp / (dp - dx)) * (stx - stp);
        stpf = (std::fabs(stpc - stp) > std::fabs(stpq - stp)) ? stpc : stpq;
        brackt = true;
    } else if (std::fabs(dp) < std::fabs(dx)) {
        // Lower value, same sign, derivative magnitude shrinking.
        bound = true;
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::fabs(theta), std::fabs(dx), std::fabs(dp)});
        double gamma = s * std::sqrt(std::max(0.0, (theta / s) * (theta / s) - (dx / s) * (dp / s)));
        if (stp > stx) gamma = -gamma;
        const double p = (gamma - dp) + theta;
        const double q = (gamma + (dx - dp)) + gamma;
        const double r = p / q;
        double stpc;
        if (r < 0.0 && gamma != 0.0)
            stpc = stp + r * (stx - stp);
        else
            stpc = (stp > stx) ? stpmax : stpmin;
        const double stpq = stp + (dp / (dp - dx)) * (stx - stp);
        if (brackt)
            stpf = (std::fabs(stp - stpc) < std::fabs(stp - stpq)) ? stpc : stpq;
        else
            stpf = (std::fabs(stp - stpc) > std::fabs(stp - stpq)) ? stpc : stpq;
    } else {
        // Lower value, same sign, not shrinking: extrapolate.
        bound = false;
        if (brackt) {
            const double theta = 3.0 * (fp - fy) / (sty - stp) + dy + dp;
            const double s = std::max({std::fabs(theta), std::fabs(dy), std::fabs(dp)});
            double gamma =
                s * std::sqrt(std::max(0.0, (theta / s) * (theta / s) - (dy / s) * (dp / s)));
            if (stp > sty) gamma = -gamma;
            const double p = (gamma - dp) + theta;
            const double q = ((gamma - dp) + gamma) + dy;
            const double r = p / q;
            stpf = stp + r * (sty - stp);
        } else {
            stpf = (stp > stx) ? stpmax : stpmin;
        }
    }

    if (fp > fx) {
        sty = stp;
        fy = fp;
        dy = dp;
    } else {
        if (sgnd < 0.0) {
            sty = stx;
            fy = fx;
            dy = dx;
        }
        stx = stp;
        fx = fp;
        dx = dp;
    }

    if (!std::isfinite(stpf)) stpf = stx + 0.5 * (sty - stx);
    stpf = std::clamp(stpf, stpmin, stpmax);
    stp = stpf;
    if (brackt && bound) {
        // Keep the trial inside the bracket, at most 2/3 of the way across.
        if (sty > stx)
            stp = std::min(stx + 0.66 * (sty - stx), stp);
        else
            stp = std::max(stx + 0.66 * (sty - stx), stp);
    }
}

}  // namespace detail

/// Line search along a direction with known phi(0) and phi'(0). When the
/// direction is not a descent direction (phi'(0) >= 0) the caller gets
/// degenerate_direction and should fall back to a zero step. If the
/// evaluation budget runs out, the best (lowest value) trial seen is
/// returned with status max_iters.
inline LineSearchResult more_thuente(const LineOracle& phi, double phi0, double dphi0,
                                     const LineSearchConfig& cfg) {
    cfg.validate();
    LineSearchResult result;
    if (dphi0 >= 0.0) {
        result.status = LineSearchStatus::degenerate_direction;
        result.f_at_step = phi0;
        result.g_dot_d_at_step = dphi0;
        return result;
    }

    constexpr double kXtol = 1e-15;    // relative interval-width floor
    constexpr double kXtrapf = 4.0;    // extrapolation cap per iteration

    bool brackt = false;
    bool stage1 = true;
    const double dgtest = cfg.c_descent * dphi0;
    double width = cfg.step_max - cfg.step_min;
    double width1 = 2.0 * width;

    double stx = 0.0, fx = phi0, dx = dphi0;
    double sty = 0.0, fy = phi0, dy = dphi0;
    double stp = std::clamp(cfg.step0, cfg.step_min, cfg.step_max);

    double best_step = 0.0, best_f = phi0, best_dg = dphi0;

    while (true) {
        double stmin, stmax;
        if (brackt) {
            stmin = std::min(stx, sty);
            stmax = std::max(stx, sty);
        } else {
            stmin = stx;
            stmax = stp + kXtrapf * (stp - stx);
        }
        stp = std::clamp(stp, cfg.step_min, cfg.step_max);

        // If further progress is impossible, fall back to the best endpoint.
        if ((brackt && (stp <= stmin || stp >= stmax)) ||
            (brackt && stmax - stmin <= kXtol * stmax))
            stp = stx;

        auto [f, dg] = phi(stp);
        ++result.n_evals;
        if (f < best_f) {
            best_step = stp;
            best_f = f;
            best_dg = dg;
        }
        const double ftest = phi0 + stp * dgtest;

        const bool wolfe =
            (f <= ftest) && (std::fabs(dg) <= cfg.c_curv * std::fabs(dphi0));
        if (wolfe) {
            result.step = stp;
            result.f_at_step = f;
            result.g_dot_d_at_step = dg;
            result.status = LineSearchStatus::converged;
            return result;
        }

        const bool interval_dead =
            (brackt && (stp <= stmin || stp >= stmax)) ||
            (brackt && stmax - stmin <= kXtol * stmax);
        const bool at_max = (stp == cfg.step_max && f <= ftest && dg <= dgtest);
        const bool at_min = (stp == cfg.step_min && (f > ftest || dg >= dgtest));
        if (result.n_evals >= cfg.max_iters || interval_dead || at_max || at_min) {
            result.step = best_step;
            result.f_at_step = best_f;
            result.g_dot_d_at_step = best_dg;
            result.status = LineSearchStatus::max_iters;
            return result;
        }

        if (stage1 && f <= ftest && dg >= std::min(cfg.c_descent, cfg.c_curv) * dphi0)
            stage1 = false;

        if (stage1 && f <= fx && f > ftest) {
            // Work on the modified function so sufficient decrease drives
            // the interval update while decrease has not yet been achieved.
            double fm = f - stp * dgtest;
            double fxm = fx - stx * dgtest;
            double fym = fy - sty * dgtest;
            double dgm = dg - dgtest;
            double dxm = dx - dgtest;
            double dym = dy - dgtest;
            detail::mt_update_interval(stx, fxm, dxm, sty, fym, dym, stp, fm, dgm, brackt, stmin,
                                       stmax);
            fx = fxm + stx * dgtest;
            fy = fym + sty * dgtest;
            dx = dxm + dgtest;
            dy = dym + dgtest;
        } else {
            detail::mt_update_interval(stx, fx, dx, sty, fy, dy, stp, f, dg, brackt, stmin, stmax);
        }

        if (brackt) {
            if (std::fabs(sty - stx) >= 0.66 * width1) stp = stx + 0.5 * (sty - stx);
            width1 = width;
            width = std::fabs(sty - stx);
        }
    }
}

}  // namespace cpnest
