#pragma once

#include "sass/timebase/align.hpp"
#include "sass/timebase/buffer.hpp"
#include "sass/timebase/clock_model.hpp"
#include "sass/timebase/sample.hpp"
