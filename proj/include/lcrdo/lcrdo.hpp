#pragma once

#include "lcrdo/channel.hpp"
#include "lcrdo/config.hpp"
#include "lcrdo/engine.hpp"
#include "lcrdo/errors.hpp"
#include "lcrdo/export.hpp"
#include "lcrdo/image.hpp"
#include "lcrdo/mac.hpp"
#include "lcrdo/media.hpp"
#include "lcrdo/metrics.hpp"
#include "lcrdo/receiver.hpp"
#include "lcrdo/rng.hpp"
#include "lcrdo/transmitters.hpp"
