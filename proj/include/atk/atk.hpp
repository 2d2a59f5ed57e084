#pragma once

// Umbrella header for the average-top-k learning library.

#include "aggregate.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "svm_dual.hpp"
#include "synthetic.hpp"
#include "version.hpp"
