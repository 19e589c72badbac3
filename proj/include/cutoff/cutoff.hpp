#pragma once

#include "cutoff/core/error.hpp"
#include "cutoff/core/numeric.hpp"
#include "cutoff/core/parallel.hpp"
#include "cutoff/core/rng.hpp"
#include "cutoff/degrees.hpp"
#include "cutoff/experiment.hpp"
#include "cutoff/graph.hpp"
#include "cutoff/limits.hpp"
#include "cutoff/paths.hpp"
#include "cutoff/walk.hpp"
