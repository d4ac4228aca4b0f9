#pragma once

// Everything except the CLI front end.

#include "copson/errors.hpp"
#include "copson/quadrature.hpp"
#include "copson/weights.hpp"
#include "copson/core.hpp"
#include "copson/discretizer.hpp"
#include "copson/conditions.hpp"
#include "copson/discrete_conditions.hpp"
#include "copson/variational.hpp"
#include "copson/experiments.hpp"
#include "copson/json_io.hpp"
#include "copson/persistence.hpp"
