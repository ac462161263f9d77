#pragma once

// Braking reaction trial: an obstacle appears ahead of a vehicle cruising at
// constant speed, timed so that without braking the vehicle reaches it after
// the time-to-collision budget.

#include <optional>

#include "teledrive/vehicle/vehicle.hpp"

namespace teledrive {

struct BrakeTrialTiming {
  double time_to_collision{5000};  // ms at cruise speed
  double brake_to_stop{2000};      // ms from cruise speed to standstill
  double reaction_budget{3000};    // ms; time_to_collision - brake_to_stop
  double cruise_speed{5.0};        // mph
};

struct BrakeTrialGeometry {
  geom::Polygon obstacle;
  double gap{0};  // m from the front bumper to the obstacle face at spawn
  BrakeTrialTiming timing;
};

inline VehicleParams brake_trial_params() {
  VehicleParams p;
  p.speed_cap = 5.0;
  p.brake_ref_speed = 5.0;
  p.brake_stop_time = 2.0;
  return p;
}

/// Places the obstacle straight ahead so its face is time_to_collision away at cruise speed.
inline BrakeTrialGeometry spawn_brake_trial(const VehicleState& vehicle, const VehicleParams& params,
                                            BrakeTrialTiming timing = {}, double obstacle_depth = 0.8,
                                            double obstacle_half_width = 0.4) {
  BrakeTrialGeometry g;
  g.timing = timing;
  g.gap = timing.cruise_speed * kMetersPerSecondPerMph * timing.time_to_collision / 1000.0;
  const geom::Vec2 face = front_point(vehicle, params) + geom::heading_vector(vehicle.heading) * g.gap;
  g.obstacle = geom::oriented_box(face, vehicle.heading, 0.0, obstacle_depth, obstacle_half_width);
  return g;
}

struct BrakeTrialResult {
  bool collided{false};
  double collision_time{-1};  // ms after spawn
  double stop_time{-1};       // ms after brake onset when speed reached 0
};

/// Simulates one GO phase. The brake latches on at `brake_onset` (ms after spawn).
inline BrakeTrialResult simulate_brake_trial(VehicleState vehicle, const VehicleParams& params,
                                             const BrakeTrialGeometry& trial, std::optional<double> brake_onset,
                                             double dt_ms = 20.0, double horizon_ms = 8000.0) {
  BrakeTrialResult r;
  const CommandTriple cruise{0.5, trial.timing.cruise_speed / params.speed_cap, false};
  const CommandTriple brake{0.5, 0.0, true};
  for (double t = 0; t < horizon_ms;) {
    const bool braking = brake_onset && t >= *brake_onset;
    vehicle = step_dynamics(vehicle, braking ? brake : cruise, params, dt_ms / 1000.0).state;
    t += dt_ms;
    if (braking && r.stop_time < 0 && vehicle.speed == 0.0) r.stop_time = t - *brake_onset;
    if (geom::convex_intersect(footprint(vehicle, params), trial.obstacle)) {
      r.collided = true;
      r.collision_time = t;
      break;
    }
    if (r.stop_time >= 0) break;
  }
  return r;
}

}  // namespace teledrive
