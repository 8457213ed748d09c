#pragma once

#include "sdiag/mode_system.hpp"
#include "sdiag/polynomial.hpp"
#include "sdiag/decomposition.hpp"
#include "sdiag/closed_form.hpp"
#include "sdiag/grid.hpp"
#include "sdiag/ep_locator.hpp"
#include "sdiag/hybridization.hpp"
#include "sdiag/cooling.hpp"
