#pragma once

// Umbrella header.

#include "sudakov/acceptance.hpp"
#include "sudakov/allocation.hpp"
#include "sudakov/chaining.hpp"
#include "sudakov/errors.hpp"
#include "sudakov/experiment.hpp"
#include "sudakov/families.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/measure_io.hpp"
#include "sudakov/minoration.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/parallel.hpp"
#include "sudakov/pointset.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/sampling.hpp"
#include "sudakov/special.hpp"
