#pragma once

#include "dppm/baselines.hpp"
#include "dppm/core.hpp"
#include "dppm/diagnostics.hpp"
#include "dppm/dppm_solver.hpp"
#include "dppm/errors.hpp"
#include "dppm/harness.hpp"
#include "dppm/rng.hpp"
#include "dppm/scalar_search.hpp"
#include "dppm/trace.hpp"
