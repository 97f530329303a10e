#pragma once

#include "hermvas/asymptotics.hpp"
#include "hermvas/errors.hpp"
#include "hermvas/estimators.hpp"
#include "hermvas/hermite_sim.hpp"
#include "hermvas/io.hpp"
#include "hermvas/mc_harness.hpp"
#include "hermvas/stats.hpp"
#include "hermvas/vasicek.hpp"
