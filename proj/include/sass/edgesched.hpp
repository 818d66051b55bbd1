#pragma once

#include "sass/edgesched/metrics.hpp"
#include "sass/edgesched/simulator.hpp"
#include "sass/edgesched/task.hpp"
#include "sass/edgesched/topology.hpp"
#include "sass/edgesched/workload.hpp"
