#pragma once

#include "sass/fusion/dedup.hpp"
#include "sass/fusion/evaluate.hpp"
#include "sass/fusion/homography.hpp"
#include "sass/fusion/transform.hpp"
#include "sass/fusion/transform_net.hpp"
#include "sass/fusion/types.hpp"
