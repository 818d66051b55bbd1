#pragma once

#include "sass/eventsync/dba.hpp"
#include "sass/eventsync/dtw.hpp"
#include "sass/eventsync/events.hpp"
#include "sass/eventsync/features.hpp"
#include "sass/eventsync/hmm.hpp"
#include "sass/eventsync/imu.hpp"
#include "sass/eventsync/series.hpp"
#include "sass/eventsync/signal.hpp"
#include "sass/eventsync/sync.hpp"
#include "sass/eventsync/video.hpp"
