#pragma once

#include "heatgauge/diffusion.hpp"
#include "heatgauge/errors.hpp"
#include "heatgauge/estimators.hpp"
#include "heatgauge/gamma_calculus.hpp"
#include "heatgauge/geometry.hpp"
#include "heatgauge/measure_core.hpp"
#include "heatgauge/polynomial.hpp"
#include "heatgauge/quadrature.hpp"
#include "heatgauge/report.hpp"
#include "heatgauge/rng.hpp"
#include "heatgauge/suites.hpp"
#include "heatgauge/verifier.hpp"
