#pragma once

#include <optional>

#include <json.hpp>

#include "teledrive/session/driving.hpp"
#include "teledrive/session/rt_task.hpp"

namespace teledrive::session {

struct RunOutcome {
  RunRecord record;
  nlohmann::json report;
  bool aborted{false};
};

/// Runs a configured session headless, in simulated time.
inline RunOutcome run_session(const SessionConfig& cfg, std::optional<decoder::DecoderModels> models = std::nullopt) {
  RunOutcome out;
  if (is_driving(cfg.task)) {
    if (cfg.pilot.kind == PilotKind::Ui) throw ConfigError("the ui pilot needs the ui-gateway subcommand");
    DrivingSession s(cfg, load_world_document(cfg.world), std::move(models));
    out.record = s.run();
    out.aborted = s.end() == RunEnd::Aborted;
  } else {
    if (cfg.pilot.kind == PilotKind::Ui) throw ConfigError("reaction tasks run with a scripted or decoder pilot");
    out.record = run_rt_task(cfg, std::move(models));
  }
  out.report = out.record.report();
  return out;
}

}  // namespace teledrive::session
