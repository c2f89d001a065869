#pragma once

#include "baseline_masks.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "harness.hpp"
#include "images.hpp"
#include "io.hpp"
#include "mask.hpp"
#include "mask_design.hpp"
#include "metrics.hpp"
#include "optics_sim.hpp"
#include "parallel.hpp"
#include "reconstruct.hpp"
#include "rng.hpp"
