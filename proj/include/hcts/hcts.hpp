#pragma once

// Umbrella header.
#include "benchmark.hpp"
#include "classifier.hpp"
#include "dataset.hpp"
#include "dissim.hpp"
#include "error.hpp"
#include "hc_engine.hpp"
#include "hierarchy.hpp"
#include "stats.hpp"
#include "synthgen.hpp"
