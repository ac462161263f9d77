#pragma once

// Safety supervisor: activation gate, lag / manual-brake override and EPB exit.

#include <stdexcept>
#include <string>

#include "teledrive/control_law.hpp"
#include "teledrive/vehicle/vehicle.hpp"

namespace teledrive::link {

enum class SafetyMode { Inactive, Teleop, SafetyOverride, Parked };

inline const char* to_string(SafetyMode m) {
  switch (m) {
    case SafetyMode::Inactive: return "INACTIVE";
    case SafetyMode::Teleop: return "TELEOP";
    case SafetyMode::SafetyOverride: return "SAFETY_OVERRIDE";
    case SafetyMode::Parked: return "PARKED";
  }
  return "?";
}

inline constexpr double kMinLagThreshold = 1000;
inline constexpr double kMaxLagThreshold = 2000;

struct SafetyState {
  SafetyMode mode{SafetyMode::Inactive};
  double lag_threshold{1500};  // ms
  double last_frame_age{0};    // ms, lag seen at the last step

  friend bool operator==(const SafetyState&, const SafetyState&) = default;
};

inline SafetyState make_safety_state(double lag_threshold = 1500) {
  if (!(lag_threshold >= kMinLagThreshold && lag_threshold <= kMaxLagThreshold))
    throw std::invalid_argument("lag threshold must lie in [1000, 2000] ms");
  return SafetyState{SafetyMode::Inactive, lag_threshold, 0};
}

struct SafetyInputs {
  double lag{0};  // ms
  bool epb{false};
  bool activation_msg{false};
  bool operator_brake{false};
};

/// One supervisor tick. EPB always parks; PARKED and INACTIVE leave only via
/// an activation message; an active session drops to SAFETY_OVERRIDE while the
/// lag exceeds the threshold or the safety driver brakes.
inline SafetyState safety_step(SafetyState s, const SafetyInputs& in) {
  s.last_frame_age = in.lag;
  if (in.epb) {
    s.mode = SafetyMode::Parked;
    return s;
  }
  const bool hazard = in.lag > s.lag_threshold || in.operator_brake;
  switch (s.mode) {
    case SafetyMode::Inactive:
    case SafetyMode::Parked:
      if (in.activation_msg) s.mode = hazard ? SafetyMode::SafetyOverride : SafetyMode::Teleop;
      break;
    case SafetyMode::Teleop:
    case SafetyMode::SafetyOverride:
      s.mode = hazard ? SafetyMode::SafetyOverride : SafetyMode::Teleop;
      break;
  }
  return s;
}

/// The command the vehicle actually receives: remote commands pass only in TELEOP.
inline CommandTriple gate_command(SafetyMode mode, const CommandTriple& remote) {
  if (mode == SafetyMode::Teleop) return remote;
  return {0.5, 0.0, true};
}

/// Vehicle-side mode for a supervisor mode; an inactive session holds like an override.
inline VehicleMode vehicle_mode_for(SafetyMode m) {
  switch (m) {
    case SafetyMode::Teleop: return VehicleMode::Teleop;
    case SafetyMode::Parked: return VehicleMode::Parked;
    case SafetyMode::Inactive:
    case SafetyMode::SafetyOverride: return VehicleMode::SafetyOverride;
  }
  return VehicleMode::SafetyOverride;
}

}  // namespace teledrive::link
