#pragma once

// Overlay control law: cursor position and clicks become steering, speed and
// brake commands through the hot-zone ramps of the driving overlay.
//
// Coordinates are normalized screen coordinates: x grows to the right, y grows
// downward, so the "top" hot zone is y < top_hot.

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace teledrive {

struct OverlayGeometry {
  double left_hot{0.2};         // x < left_hot
  double right_hot{0.2};        // x > 1 - right_hot
  double top_hot{0.2};          // y < top_hot
  double bottom_hot{0.2};       // y > 1 - bottom_hot
  double cold_half_width{0.1};  // |x - 0.5| <= cold_half_width

  bool valid() const {
    return left_hot > 0 && right_hot > 0 && top_hot > 0 && bottom_hot > 0 &&
           cold_half_width >= 0 && left_hot < 0.5 - cold_half_width &&
           0.5 + cold_half_width < 1.0 - right_hot && top_hot < 1.0 - bottom_hot;
  }
};

struct CursorSample {
  double x{0.5};
  double y{0.5};
  bool click{false};
  double t{0};  // ms, session clock
};

struct RampConfig {
  double tau_steer{800};   // ms
  double tau_speed{800};   // ms
  double cold_gain{0.1};   // 1/s
  double brake_hold{1000}; // ms

  bool valid() const { return tau_steer > 0 && tau_speed > 0 && cold_gain >= 0 && brake_hold > 0; }
};

struct ControlState {
  double steering_cmd{0.5};
  double speed_cmd{0.0};
  double brake_hold_remaining{0.0};  // ms
  bool cold_steer_enabled{false};

  friend bool operator==(const ControlState&, const ControlState&) = default;
};

struct CommandTriple {
  double steering{0.5};
  double speed{0.0};
  bool brake{false};

  friend bool operator==(const CommandTriple&, const CommandTriple&) = default;
};

enum class HorizontalZone { LeftHot, Neutral, Cold, RightHot };
enum class VerticalZone { TopHot, Neutral, BottomHot };

inline HorizontalZone horizontal_zone(double x, const OverlayGeometry& g) {
  if (x < g.left_hot) return HorizontalZone::LeftHot;
  if (x > 1.0 - g.right_hot) return HorizontalZone::RightHot;
  if (std::abs(x - 0.5) <= g.cold_half_width) return HorizontalZone::Cold;
  return HorizontalZone::Neutral;
}

inline VerticalZone vertical_zone(double y, const OverlayGeometry& g) {
  if (y < g.top_hot) return VerticalZone::TopHot;
  if (y > 1.0 - g.bottom_hot) return VerticalZone::BottomHot;
  return VerticalZone::Neutral;
}

inline CursorSample clamp_cursor(CursorSample s) {
  s.x = std::clamp(s.x, 0.0, 1.0);
  s.y = std::clamp(s.y, 0.0, 1.0);
  return s;
}

struct TickResult {
  ControlState state;
  bool rejected{false};
};

namespace detail {
// First-order approach of `value` toward `limit` over dt with time constant tau.
inline double approach(double value, double limit, double dt, double tau) {
  const double alpha = -std::expm1(-dt / tau);
  return value + alpha * (limit - value);
}
}  // namespace detail

/// One control-law step of length dt (ms).
///
/// Steering ramps toward 0 (left hot zone) or 1 (right hot zone); in the cold
/// zone it moves at cold_gain * (x - 0.5) per second when cold steering is
/// enabled. Speed ramps toward 1 in the top zone and 0 in the bottom zone and
/// holds elsewhere. A pending brake hold pins speed to zero; if the hold runs
/// out inside this step, the speed ramp gets the leftover time.
inline TickResult tick(const ControlState& state, const CursorSample& raw, const OverlayGeometry& geom,
                       const RampConfig& cfg, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("tick: dt must be positive and finite");
  if (!std::isfinite(raw.x) || !std::isfinite(raw.y)) return {state, true};

  const CursorSample cur = clamp_cursor(raw);
  ControlState next = state;

  switch (horizontal_zone(cur.x, geom)) {
    case HorizontalZone::LeftHot:
      next.steering_cmd = detail::approach(state.steering_cmd, 0.0, dt, cfg.tau_steer);
      break;
    case HorizontalZone::RightHot:
      next.steering_cmd = detail::approach(state.steering_cmd, 1.0, dt, cfg.tau_steer);
      break;
    case HorizontalZone::Cold:
      if (state.cold_steer_enabled)
        next.steering_cmd = state.steering_cmd + cfg.cold_gain * (cur.x - 0.5) * (dt / 1000.0);
      break;
    case HorizontalZone::Neutral:
      break;
  }
  next.steering_cmd = std::clamp(next.steering_cmd, 0.0, 1.0);

  double ramp_dt = dt;
  if (state.brake_hold_remaining > 0) {
    next.brake_hold_remaining = std::max(0.0, state.brake_hold_remaining - dt);
    ramp_dt = dt - state.brake_hold_remaining;
    next.speed_cmd = 0.0;
  }
  if (next.brake_hold_remaining <= 0 && ramp_dt > 0) {
    switch (vertical_zone(cur.y, geom)) {
      case VerticalZone::TopHot:
        next.speed_cmd = detail::approach(next.speed_cmd, 1.0, ramp_dt, cfg.tau_speed);
        break;
      case VerticalZone::BottomHot:
        next.speed_cmd = detail::approach(next.speed_cmd, 0.0, ramp_dt, cfg.tau_speed);
        break;
      case VerticalZone::Neutral:
        break;
    }
  }
  next.speed_cmd = std::clamp(next.speed_cmd, 0.0, 1.0);
  return {next, false};
}

/// Full-stop braking: speed drops to zero and stays there for cfg.brake_hold.
inline ControlState apply_click(ControlState state, const RampConfig& cfg) {
  state.speed_cmd = 0.0;
  state.brake_hold_remaining = cfg.brake_hold;
  return state;
}

inline CommandTriple to_vehicle_command(const ControlState& s) {
  const bool brake = s.brake_hold_remaining > 0;
  return {std::clamp(s.steering_cmd, 0.0, 1.0), brake ? 0.0 : std::clamp(s.speed_cmd, 0.0, 1.0), brake};
}

}  // namespace teledrive
