#pragma once

#include "ctnoise/discretization.hpp"
#include "ctnoise/errors.hpp"
#include "ctnoise/experiments.hpp"
#include "ctnoise/io.hpp"
#include "ctnoise/observation.hpp"
#include "ctnoise/phantoms.hpp"
#include "ctnoise/poisson.hpp"
#include "ctnoise/quadrature.hpp"
#include "ctnoise/reduce.hpp"
#include "ctnoise/rng.hpp"
#include "ctnoise/stat_tests.hpp"
#include "ctnoise/statistics.hpp"
