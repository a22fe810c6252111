#pragma once

#include "fpp/rng.hpp"
#include "fpp/lattice.hpp"
#include "fpp/weights.hpp"
#include "fpp/geodesic.hpp"
#include "fpp/regression.hpp"
#include "fpp/parallel.hpp"
#include "fpp/fluctuation.hpp"
#include "fpp/oriented.hpp"
#include "fpp/shape.hpp"
