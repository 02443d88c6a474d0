#pragma once
// Umbrella header for the cubecoda library.

#include "cubecoda/composition.hpp"
#include "cubecoda/coordinates.hpp"
#include "cubecoda/cube.hpp"
#include "cubecoda/io.hpp"
#include "cubecoda/sbp.hpp"
#include "cubecoda/stats.hpp"
