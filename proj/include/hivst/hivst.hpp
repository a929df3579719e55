#pragma once
// Umbrella header: the whole library in one include.

#include "hivst/model.hpp"        // IWYU pragma: export
#include "hivst/ngm.hpp"          // IWYU pragma: export
#include "hivst/engine.hpp"       // IWYU pragma: export
#include "hivst/calibration.hpp"  // IWYU pragma: export
#include "hivst/scenario.hpp"     // IWYU pragma: export
#include "hivst/io.hpp"           // IWYU pragma: export
