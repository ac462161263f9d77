#pragma once

#include <cstdint>

#include "teledrive/vehicle/vehicle.hpp"

namespace teledrive::link {

/// Operator -> vehicle, carried on the reliable control stream.
struct ControlFrame {
  std::uint32_t seq{0};
  double t_send{0};  // ms, sender clock
  double steering{0.5};
  double speed{0};
  bool brake{false};
  double latency_est{0};  // ms, operator's current view of link lag (telemetry)

  friend bool operator==(const ControlFrame&, const ControlFrame&) = default;
};

/// Vehicle -> operator datagram. Pose fields feed the top-down viewport that
/// stands in for the camera feed.
struct StateFrame {
  std::uint32_t seq{0};
  double t_send{0};  // ms, vehicle clock
  double speed{0};   // mph
  double wheel_angle{0};
  VehicleMode mode{VehicleMode::Teleop};
  bool epb{false};
  double x{0}, y{0}, heading{0};

  friend bool operator==(const StateFrame&, const StateFrame&) = default;
};

/// Four-timestamp clock probe; t0/t3 on the requester clock, t1/t2 on the responder clock.
struct ClockProbe {
  std::uint32_t seq{0};
  double t0{0}, t1{0}, t2{0}, t3{0};

  friend bool operator==(const ClockProbe&, const ClockProbe&) = default;
};

}  // namespace teledrive::link
