#pragma once

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/nonlinearity.hpp"
#include "acflow/krylov.hpp"
#include "acflow/stepper.hpp"
#include "acflow/schedules.hpp"
#include "acflow/diagnostics.hpp"
#include "acflow/acoustic.hpp"
#include "acflow/config.hpp"
#include "acflow/drivers.hpp"
