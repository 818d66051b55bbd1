#pragma once

#include "sass/harness/fusion_experiment.hpp"
#include "sass/harness/fusion_scenario.hpp"
#include "sass/harness/report.hpp"
#include "sass/harness/sched_experiment.hpp"
#include "sass/harness/sync_experiment.hpp"
#include "sass/harness/sync_scenario.hpp"
