#pragma once

#include "types.hpp"
#include "geometry.hpp"
#include "random.hpp"
#include "normal.hpp"
#include "channel.hpp"
#include "solver.hpp"
#include "asymptotics.hpp"
#include "parallel.hpp"
#include "montecarlo.hpp"
#include "io.hpp"
#include "config.hpp"
