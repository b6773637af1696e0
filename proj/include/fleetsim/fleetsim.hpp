#pragma once

#include "fleetsim/analysis.hpp"
#include "fleetsim/engine.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/geometry.hpp"
#include "fleetsim/io.hpp"
#include "fleetsim/policies.hpp"
#include "fleetsim/rng.hpp"
#include "fleetsim/stats.hpp"
#include "fleetsim/units.hpp"
