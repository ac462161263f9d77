#pragma once

// Everything except the HTTP gateway (teledrive/session/gateway.hpp), which
// pulls in cpp-httplib.

#include "teledrive/control_law.hpp"
#include "teledrive/decoder/pipeline.hpp"
#include "teledrive/link/channels.hpp"
#include "teledrive/link/clock_sync.hpp"
#include "teledrive/link/codec.hpp"
#include "teledrive/link/safety.hpp"
#include "teledrive/reaction.hpp"
#include "teledrive/scoring.hpp"
#include "teledrive/session/driving.hpp"
#include "teledrive/session/remote.hpp"
#include "teledrive/session/replay.hpp"
#include "teledrive/session/rt_task.hpp"
#include "teledrive/session/run.hpp"
#include "teledrive/stats/tests.hpp"
#include "teledrive/vehicle/brake_trial.hpp"
#include "teledrive/vehicle/detectors.hpp"
