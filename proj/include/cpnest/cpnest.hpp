#pragma once

// Umbrella header for the cpnest library: CP tensor decomposition by ALS
// with Nesterov-type acceleration, plus the synthetic benchmark generator
// and the performance-profile harness.

#include "cpnest/curve.hpp"
#include "cpnest/kruskal.hpp"
#include "cpnest/line_search.hpp"
#include "cpnest/plan.hpp"
#include "cpnest/problems.hpp"
#include "cpnest/rng.hpp"
#include "cpnest/solver.hpp"
#include "cpnest/solver_name.hpp"
#include "cpnest/svg.hpp"
#include "cpnest/tau_profile.hpp"
#include "cpnest/tensor.hpp"
#include "cpnest/tensor_io.hpp"
#include "cpnest/trace_io.hpp"
#include "cpnest/version.hpp"
