#pragma once

#include "wptn/cli.hpp"
#include "wptn/energy.hpp"
#include "wptn/engine.hpp"
#include "wptn/metrics.hpp"
#include "wptn/model.hpp"
#include "wptn/optimize.hpp"
#include "wptn/protocols.hpp"
#include "wptn/radio.hpp"
#include "wptn/rng.hpp"
#include "wptn/scenario.hpp"
#include "wptn/sim_time.hpp"
#include "wptn/trace.hpp"
