#pragma once

#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpnest/solver.hpp"

// Compact solver names:
//
//   ALS
//   Nesterov-ALS-LS
//   Nesterov-ALS-<S>                 momentum only, no restart (SN | SG | S1)
//   Nesterov-ALS-<R>-<S>[-D<n>][-E]  restarted (R in RF | RG | RX)
//   Gradient-Descent (alias GD)
//   Nesterov-Gradient (alias NGD)
//
// D<n> selects a restart delay n > 1; E selects the scheduled eta
// (1.25 decaying by 0.02 per step to 1.15) instead of the fixed eta = 1.
// parse_solver_name and format_solver_name round-trip over this grammar.

namespace cpnest {

inline SolverConfig parse_solver_name(const std::string& name) {
    SolverConfig cfg;
    if (name == "ALS") {
        cfg.variant = SolverVariant::als;
        return cfg.normalized();
    }
    if (name == "Gradient-Descent" || name == "GD") {
        cfg.variant = SolverVariant::gradient_descent;
        return cfg.normalized();
    }
    if (name == "Nesterov-Gradient" || name == "NGD") {
        cfg.variant = SolverVariant::nesterov_gradient;
        return cfg.normalized();
    }

    std::vector<std::string> tokens;
    std::stringstream ss(name);
    std::string tok;
    while (std::getline(ss, tok, '-')) tokens.push_back(tok);
    if (tokens.size() < 3 || tokens[0] != "Nesterov" || tokens[1] != "ALS")
        throw std::invalid_argument("unknown solver name: " + name);

    bool saw_momentum = false, saw_restart = false, saw_delay = false, saw_eta = false,
         saw_ls = false;
    for (std::size_t idx = 2; idx < tokens.size(); ++idx) {
        const std::string& part = tokens[idx];
        if (part == "LS") {
            if (saw_ls || saw_momentum || saw_restart || saw_delay || saw_eta)
                throw std::invalid_argument("LS cannot be combined with other suffixes: " + name);
            saw_ls = true;
        } else if (part == "SN" || part == "SG" || part == "S1") {
            if (saw_momentum) throw std::invalid_argument("duplicate momentum token: " + name);
            saw_momentum = true;
            cfg.momentum.kind = (part == "SN")   ? MomentumKind::sn
                                : (part == "SG") ? MomentumKind::sg
                                                 : MomentumKind::s1;
        } else if (part == "RF" || part == "RG" || part == "RX") {
            if (saw_restart) throw std::invalid_argument("duplicate restart token: " + name);
            saw_restart = true;
            cfg.restart.kind = (part == "RF")   ? RestartKind::rf
                               : (part == "RG") ? RestartKind::rg
                                                : RestartKind::rx;
        } else if (part.size() >= 2 && part[0] == 'D') {
            if (saw_delay) throw std::invalid_argument("duplicate delay token: " + name);
            char* end = nullptr;
            const long d = std::strtol(part.c_str() + 1, &end, 10);
            if (end == nullptr || *end != '\0' || d < 1)
                throw std::invalid_argument("bad delay token in solver name: " + name);
            saw_delay = true;
            cfg.restart.delay = static_cast<int>(d);
        } else if (part == "E") {
            if (saw_eta) throw std::invalid_argument("duplicate eta token: " + name);
            saw_eta = true;
            cfg.restart.eta_mode = EtaMode::scheduled;
        } else {
            throw std::invalid_argument("unknown solver name token '" + part + "' in " + name);
        }
    }

    if (saw_ls) {
        if (saw_momentum || saw_restart || saw_delay || saw_eta)
            throw std::invalid_argument("LS cannot be combined with other suffixes: " + name);
        cfg.variant = SolverVariant::nesterov_als_ls;
        return cfg.normalized();
    }
    if (!saw_momentum)
        throw std::invalid_argument("solver name needs a momentum token (SN/SG/S1): " + name);
    if (!saw_restart) {
        if (saw_delay || saw_eta)
            throw std::invalid_argument("delay/eta suffixes need a restart token: " + name);
        cfg.variant = (cfg.momentum.kind == MomentumKind::sn)
                          ? SolverVariant::nesterov_als_direct
                          : SolverVariant::nesterov_als_restarted;
        cfg.restart.kind = RestartKind::none;
        return cfg.normalized();
    }
    cfg.variant = SolverVariant::nesterov_als_restarted;
    return cfg.normalized();
}

inline std::string format_solver_name(const SolverConfig& cfg_in) {
    const SolverConfig cfg = cfg_in.normalized();
    switch (cfg.variant) {
        case SolverVariant::als:
            return "ALS";
        case SolverVariant::gradient_descent:
            return "Gradient-Descent";
        case SolverVariant::nesterov_gradient:
            return "Nesterov-Gradient";
        case SolverVariant::nesterov_als_ls:
            return "Nesterov-ALS-LS";
        case SolverVariant::nesterov_als_direct:
            return "Nesterov-ALS-SN";
        case SolverVariant::nesterov_als_restarted:
            break;
    }
    std::string name = "Nesterov-ALS";
    switch (cfg.restart.kind) {
        case RestartKind::rf: name += "-RF"; break;
        case RestartKind::rg: name += "-RG"; break;
        case RestartKind::rx: name += "-RX"; break;
        case RestartKind::none: break;
    }
    switch (cfg.momentum.kind) {
        case MomentumKind::sn: name += "-SN"; break;
        case MomentumKind::sg: name += "-SG"; break;
        case MomentumKind::s1: name += "-S1"; break;
        case MomentumKind::zero: name += "-S0"; break;  // internal; not parseable
    }
    if (cfg.restart.kind != RestartKind::none) {
        if (cfg.restart.delay > 1) name += "-D" + std::to_string(cfg.restart.delay);
        if (cfg.restart.eta_mode == EtaMode::scheduled) name += "-E";
    }
    return name;
}

}  // namespace cpnest
