#pragma once

// Umbrella header for the sepgd library.

#include "sepgd/bounds.hpp"
#include "sepgd/certify.hpp"
#include "sepgd/config.hpp"
#include "sepgd/data.hpp"
#include "sepgd/experiments.hpp"
#include "sepgd/grid.hpp"
#include "sepgd/loss.hpp"
#include "sepgd/optimize.hpp"
#include "sepgd/report_io.hpp"
#include "sepgd/rng.hpp"
#include "sepgd/stats.hpp"
#include "sepgd/tail.hpp"
