#pragma once

// Kinematic bicycle vehicle driven by normalized steering/speed/brake commands.
//
// Pose is the rear-axle center in a right-handed world frame (x east, y north,
// heading counterclockwise from +x). A positive steering-wheel angle is a
// clockwise wheel turn, i.e. a right turn.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "teledrive/control_law.hpp"
#include "teledrive/vehicle/geometry.hpp"

namespace teledrive {

inline constexpr double kMaxWheelAngleDeg = 601.5;
inline constexpr double kMetersPerSecondPerMph = 0.44704;

enum class VehicleMode { Teleop, SafetyOverride, Parked };

inline const char* to_string(VehicleMode m) {
  switch (m) {
    case VehicleMode::Teleop: return "TELEOP";
    case VehicleMode::SafetyOverride: return "SAFETY_OVERRIDE";
    case VehicleMode::Parked: return "PARKED";
  }
  return "?";
}

inline VehicleMode vehicle_mode_from_string(const std::string& s) {
  if (s == "TELEOP") return VehicleMode::Teleop;
  if (s == "SAFETY_OVERRIDE") return VehicleMode::SafetyOverride;
  if (s == "PARKED") return VehicleMode::Parked;
  throw std::invalid_argument("unknown vehicle mode: " + s);
}

struct VehicleParams {
  double speed_cap{4.0};         // mph
  double wheelbase{2.97};        // m
  double steer_ratio{16.0};      // steering-wheel degrees per road-wheel degree
  double accel_tau{1.0};         // s
  double brake_stop_time{2.0};   // s needed to stop from brake_ref_speed
  double brake_ref_speed{5.0};   // mph
  double front_overhang{0.9};    // m ahead of the front axle
  double rear_overhang{0.84};    // m behind the rear axle
  double half_width{0.95};       // m

  bool valid() const {
    return speed_cap > 0 && wheelbase > 0 && steer_ratio > 0 && accel_tau > 0 && brake_stop_time > 0 &&
           brake_ref_speed > 0 && front_overhang >= 0 && rear_overhang >= 0 && half_width > 0;
  }
  double brake_decel_mph_per_s() const { return brake_ref_speed / brake_stop_time; }
  double front_extent() const { return wheelbase + front_overhang; }
};

inline VehicleParams teledrive_params() { return {}; }
inline VehicleParams town_params() {
  VehicleParams p;
  p.speed_cap = 5.0;
  return p;
}

struct VehicleState {
  double x{0}, y{0};
  double heading{0};      // rad
  double speed{0};        // mph
  double wheel_angle{0};  // deg
  VehicleMode mode{VehicleMode::Teleop};
  bool epb{false};
  CommandTriple last_command{};

  friend bool operator==(const VehicleState&, const VehicleState&) = default;

  geom::Vec2 position() const { return {x, y}; }
};

inline double wheel_angle_for(double steering_cmd) {
  return std::clamp((steering_cmd - 0.5) * 2.0 * kMaxWheelAngleDeg, -kMaxWheelAngleDeg, kMaxWheelAngleDeg);
}

inline geom::Polygon footprint(const VehicleState& s, const VehicleParams& p) {
  return geom::oriented_box(s.position(), s.heading, p.rear_overhang, p.front_extent(), p.half_width);
}

inline geom::Vec2 front_point(const VehicleState& s, const VehicleParams& p) {
  return s.position() + geom::heading_vector(s.heading) * p.front_extent();
}

inline geom::Vec2 center_point(const VehicleState& s, const VehicleParams& p) {
  return s.position() + geom::heading_vector(s.heading) * (0.5 * (p.front_extent() - p.rear_overhang));
}

struct DynamicsResult {
  VehicleState state;
  bool rejected_command{false};
};

/// Advances the vehicle by dt seconds.
///
/// In TELEOP the command is applied; SAFETY_OVERRIDE and PARKED ignore it and
/// brake to a stop at the brake deceleration, holding the current wheel angle.
/// A non-finite command is replaced by the previous one.
inline DynamicsResult step_dynamics(const VehicleState& state, CommandTriple cmd, const VehicleParams& params,
                                    double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("step_dynamics: dt must be positive");
  DynamicsResult out{state, false};
  VehicleState& next = out.state;

  if (!std::isfinite(cmd.steering) || !std::isfinite(cmd.speed)) {
    cmd = state.last_command;
    out.rejected_command = true;
  }
  cmd.steering = std::clamp(cmd.steering, 0.0, 1.0);
  cmd.speed = std::clamp(cmd.speed, 0.0, 1.0);

  bool braking = false;
  double target = 0.0;
  if (state.mode == VehicleMode::Teleop) {
    next.last_command = cmd;
    next.wheel_angle = wheel_angle_for(cmd.steering);
    braking = cmd.brake;
    target = braking ? 0.0 : cmd.speed * params.speed_cap;
  } else {
    braking = true;
  }

  const double v0 = state.speed;
  double v1;
  if (braking) {
    v1 = std::max(0.0, v0 - params.brake_decel_mph_per_s() * dt);
    if (v1 < 1e-9) v1 = 0.0;
  } else {
    v1 = v0 + (target - v0) * -std::expm1(-dt / params.accel_tau);
  }
  v1 = std::clamp(v1, 0.0, params.speed_cap);
  next.speed = v1;

  const double v_mean = 0.5 * (v0 + v1) * kMetersPerSecondPerMph;
  const double road_angle = -geom::deg2rad(next.wheel_angle / params.steer_ratio);
  const double yaw_rate = v_mean / params.wheelbase * std::tan(road_angle);
  const double h0 = state.heading;
  if (std::abs(yaw_rate) * dt > 1e-9) {
    const double h1 = h0 + yaw_rate * dt;
    const double r = v_mean / yaw_rate;
    next.x = state.x + r * (std::sin(h1) - std::sin(h0));
    next.y = state.y - r * (std::cos(h1) - std::cos(h0));
    next.heading = geom::wrap_angle(h1);
  } else {
    next.x = state.x + v_mean * dt * std::cos(h0);
    next.y = state.y + v_mean * dt * std::sin(h0);
  }
  return out;
}

}  // namespace teledrive
