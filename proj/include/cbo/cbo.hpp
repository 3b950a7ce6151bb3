#pragma once

#include "config.hpp"
#include "consensus.hpp"
#include "core.hpp"
#include "dynamics.hpp"
#include "experiments.hpp"
#include "objectives.hpp"
#include "parallel.hpp"
#include "report_io.hpp"
#include "rng.hpp"
