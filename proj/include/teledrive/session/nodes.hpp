#pragma once

// The two ends of the link. OperatorStation owns the overlay control law and
// clock sync; VehicleNode owns the vehicle, the safety supervisor and the
// detectors. Neither does I/O: callers move frames between them, either over
// the simulated link or real sockets.

#include <optional>
#include <vector>

#include "teledrive/control_law.hpp"
#include "teledrive/link/clock_sync.hpp"
#include "teledrive/link/frames.hpp"
#include "teledrive/link/safety.hpp"
#include "teledrive/scoring.hpp"
#include "teledrive/session/config.hpp"
#include "teledrive/vehicle/detectors.hpp"
#include "teledrive/vehicle/world.hpp"

namespace teledrive::session {

inline bool cold_steering_for(Task t) { return t == Task::McityTeledrive || t == Task::ObstacleTeledrive; }

class OperatorStation {
 public:
  explicit OperatorStation(const SessionConfig& cfg) : cfg_(cfg) {
    control_.cold_steer_enabled = cold_steering_for(cfg.task);
  }

  void on_state(const link::StateFrame& f) {
    if (!latest_ || f.seq > latest_->seq) latest_ = f;
  }

  void on_clock_reply(link::ClockProbe p, double now) {
    p.t3 = now;
    sync_.add(p);
  }

  std::optional<link::ClockProbe> maybe_probe(double now) {
    if (now + 1e-9 < next_probe_) return std::nullopt;
    next_probe_ = now + cfg_.net.probe_period;
    return link::ClockProbe{++probe_seq_, now, 0, 0, 0};
  }

  /// Vehicle clock minus operator clock, as estimated so far.
  double offset() const { return sync_.offset().value_or(0.0); }

  /// Age of the newest state frame; before the first one, time since start.
  double lag(double now) const {
    if (!latest_) return std::max(0.0, now);
    return link::lag_monitor(now, latest_->t_send, -offset());
  }

  /// One control-law step with the cursor; returns the frame to send.
  link::ControlFrame command(double now, const CursorSample& cursor, double dt) {
    if (cursor.click) control_ = apply_click(control_, cfg_.ramp);
    const TickResult r = tick(control_, cursor, cfg_.overlay, cfg_.ramp, dt);
    control_ = r.state;
    rejected_ += r.rejected ? 1 : 0;
    const CommandTriple c = to_vehicle_command(control_);
    return link::ControlFrame{++seq_, now, c.steering, c.speed, c.brake, sync_.last_rtt() / 2.0};
  }

  const ControlState& control() const { return control_; }
  const std::optional<link::StateFrame>& latest_state() const { return latest_; }
  std::uint32_t seq() const { return seq_; }
  int rejected_samples() const { return rejected_; }

 private:
  SessionConfig cfg_;
  ControlState control_;
  link::ClockSync sync_;
  std::optional<link::StateFrame> latest_;
  std::uint32_t seq_{0}, probe_seq_{0};
  double next_probe_{0};
  int rejected_{0};
};

inline VehicleState start_pose(const WorldModel& world) {
  VehicleState v;
  const auto p = world.route.path.point_at(0);
  v.x = p.x;
  v.y = p.y;
  v.heading = world.route.path.heading_at(0);
  v.mode = VehicleMode::SafetyOverride;
  return v;
}

enum class RunEnd { Running, Complete, Aborted, Timeout, Parked };

inline const char* to_string(RunEnd e) {
  switch (e) {
    case RunEnd::Running: return "running";
    case RunEnd::Complete: return "complete";
    case RunEnd::Aborted: return "aborted";
    case RunEnd::Timeout: return "timeout";
    case RunEnd::Parked: return "parked";
  }
  return "?";
}

class VehicleNode {
 public:
  VehicleNode(const SessionConfig& cfg, const WorldModel& world)
      : cfg_(cfg),
        world_(&world),
        vehicle_(start_pose(world)),
        safety_(link::make_safety_state(cfg.net.lag_threshold)),
        detector_(world, cfg.vehicle, cfg.detectors),
        progress_(world.route),
        offroute_(cfg.offroute_limit) {}

  void on_control(const link::ControlFrame& f) {
    if (!remote_ || f.seq > remote_->seq) remote_ = f;
  }

  link::ClockProbe on_probe(link::ClockProbe p, double vehicle_now) const {
    p.t1 = vehicle_now;
    p.t2 = vehicle_now;
    return p;
  }

  struct Step {
    link::StateFrame frame;
    std::vector<InfractionEvent> infractions;
    bool mode_changed{false};
  };

  /// Integrates the vehicle up to time t (ms) and runs the detectors.
  Step step(double t, const link::SafetyInputs& in, std::uint32_t seq) {
    Step out;
    const link::SafetyMode before = safety_.mode;
    safety_ = link::safety_step(safety_, in);
    out.mode_changed = safety_.mode != before;
    vehicle_.mode = link::vehicle_mode_for(safety_.mode);
    vehicle_.epb = safety_.mode == link::SafetyMode::Parked;
    const CommandTriple remote =
        remote_ ? CommandTriple{remote_->steering, remote_->speed, remote_->brake} : CommandTriple{0.5, 0.0, false};
    const CommandTriple applied = link::gate_command(safety_.mode, remote);
    const VehicleState prev = vehicle_;
    vehicle_ = step_dynamics(vehicle_, applied, cfg_.vehicle, cfg_.dt() / 1000.0).state;
    if (!aborted_) {
      out.infractions = detector_.detect(prev, vehicle_, t, cfg_.dt());
      const geom::Vec2 c = center_point(vehicle_, cfg_.vehicle);
      progress_.update(c);
      aborted_ = offroute_.update(progress_.on_corridor(c), t);
      for (const auto& e : out.infractions) events_.push_back(e);
    }
    out.frame = link::StateFrame{seq,          t + cfg_.net.clock_offset, vehicle_.speed, vehicle_.wheel_angle,
                                 vehicle_.mode, vehicle_.epb,              vehicle_.x,     vehicle_.y,
                                 vehicle_.heading};
    return out;
  }

  RunEnd status(double t, bool more_events_pending) const {
    if (aborted_) return RunEnd::Aborted;
    if (progress_.complete()) return RunEnd::Complete;
    if (safety_.mode == link::SafetyMode::Parked && !more_events_pending) return RunEnd::Parked;
    if (t >= cfg_.max_duration - 1e-9) return RunEnd::Timeout;
    return RunEnd::Running;
  }

  InfractionCounts counts() const {
    return counts_from_events(events_, RouteOutcome{progress_.completion(), aborted_});
  }

  const VehicleState& vehicle() const { return vehicle_; }
  const link::SafetyState& safety() const { return safety_; }
  const std::optional<link::ControlFrame>& remote() const { return remote_; }
  const std::vector<InfractionEvent>& infractions() const { return events_; }
  double completion() const { return progress_.completion(); }
  bool aborted() const { return aborted_; }

 private:
  SessionConfig cfg_;
  const WorldModel* world_;
  VehicleState vehicle_;
  link::SafetyState safety_;
  InfractionDetector detector_;
  RouteProgress progress_;
  OffRouteMonitor offroute_;
  std::optional<link::ControlFrame> remote_;
  std::vector<InfractionEvent> events_;
  bool aborted_{false};
};

}  // namespace teledrive::session
