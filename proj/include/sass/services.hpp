#pragma once

#include "sass/services/actions.hpp"
#include "sass/services/api.hpp"
#include "sass/services/capture.hpp"
#include "sass/services/clock.hpp"
#include "sass/services/device.hpp"
#include "sass/services/distill.hpp"
#include "sass/services/registry.hpp"
#include "sass/services/storage.hpp"
#include "sass/services/token.hpp"
