#pragma once

// Umbrella header for the forecast-error monitoring toolkit.

#include "femon/arma.hpp"
#include "femon/calibration.hpp"
#include "femon/csv.hpp"
#include "femon/detector.hpp"
#include "femon/ets.hpp"
#include "femon/forecast.hpp"
#include "femon/linreg.hpp"
#include "femon/lrv.hpp"
#include "femon/optim.hpp"
#include "femon/parallel.hpp"
#include "femon/rng.hpp"
#include "femon/series.hpp"
#include "femon/simlab.hpp"
#include "femon/stats.hpp"
