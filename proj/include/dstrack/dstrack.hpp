#pragma once

#include "dstrack/assignment.hpp"
#include "dstrack/bench.hpp"
#include "dstrack/error.hpp"
#include "dstrack/filter.hpp"
#include "dstrack/geometry.hpp"
#include "dstrack/io.hpp"
#include "dstrack/metrics.hpp"
#include "dstrack/scenario.hpp"
#include "dstrack/tracker.hpp"
