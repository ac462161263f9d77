#pragma once

// Infraction detection, route progress and the off-route abort rule.

#include <algorithm>
#include <limits>
#include <vector>

#include "teledrive/vehicle/infractions.hpp"
#include "teledrive/vehicle/vehicle.hpp"
#include "teledrive/vehicle/world.hpp"

namespace teledrive {

struct DetectorConfig {
  double lane_margin{0.2};       // m beyond the lane half-width
  double lane_debounce{500};     // ms an excursion must last
  double stop_eps{0.1};          // mph
  double stop_dwell{1000};       // ms
};

/// Offset of `p` from the nearest lane centerline minus that lane's half-width
/// (positive = outside the lane).
inline double lane_excess(const WorldModel& world, geom::Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& lane : world.lanes) {
    const auto pr = lane.centerline.project(p);
    best = std::min(best, pr.distance - lane.width / 2.0);
  }
  return best;
}

/// Stateful detector; feed consecutive (prev, next) vehicle states.
class InfractionDetector {
 public:
  InfractionDetector(const WorldModel& world, VehicleParams params, DetectorConfig cfg = {})
      : world_(&world),
        params_(params),
        cfg_(cfg),
        in_contact_(world.obstacles.size(), false),
        stop_dwell_(world.stop_signs.size(), 0.0),
        stop_ok_(world.stop_signs.size(), false) {}

  std::vector<InfractionEvent> detect(const VehicleState& prev, const VehicleState& next, double t, double dt_ms) {
    std::vector<InfractionEvent> events;
    const WorldModel& w = *world_;

    const auto fp = footprint(next, params_);
    for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
      const bool contact = geom::convex_intersect(fp, w.obstacles[i].polygon);
      if (contact && !in_contact_[i]) events.push_back({InfractionKind::Collision, t, 1.0, w.obstacles[i].id});
      in_contact_[i] = contact;
    }

    const double excess = lane_excess(w, center_point(next, params_));
    if (excess > cfg_.lane_margin) {
      if (excursion_start_ < 0) excursion_start_ = t;
      if (!excursion_reported_ && t - excursion_start_ >= cfg_.lane_debounce) {
        events.push_back({InfractionKind::LaneDeviation, t, 1.0, "lane"});
        excursion_reported_ = true;
      }
    } else {
      excursion_start_ = -1;
      excursion_reported_ = false;
    }

    const geom::Vec2 f0 = front_point(prev, params_), f1 = front_point(next, params_);
    const geom::Vec2 step = f1 - f0;
    for (std::size_t i = 0; i < w.stop_signs.size(); ++i) {
      const auto& sign = w.stop_signs[i];
      const bool inside = geom::point_in_polygon(sign.approach, f1);
      if (inside && next.speed < cfg_.stop_eps) {
        stop_dwell_[i] += dt_ms;
        if (stop_dwell_[i] >= cfg_.stop_dwell) stop_ok_[i] = true;
      } else {
        stop_dwell_[i] = 0.0;
      }
      if (geom::dot(step, sign.travel_dir) > 0 && geom::segments_intersect(f0, f1, sign.line_a, sign.line_b)) {
        if (!stop_ok_[i]) events.push_back({InfractionKind::RanStop, t, 1.0, sign.id});
        stop_ok_[i] = false;
        stop_dwell_[i] = 0.0;
      }
    }

    for (const auto& light : w.traffic_lights) {
      if (geom::dot(step, light.travel_dir) > 0 && geom::segments_intersect(f0, f1, light.line_a, light.line_b) &&
          light.schedule.phase_at(t) == LightPhase::Red)
        events.push_back({InfractionKind::RanRed, t, 1.0, light.id});
    }
    return events;
  }

 private:
  const WorldModel* world_;
  VehicleParams params_;
  DetectorConfig cfg_;
  std::vector<bool> in_contact_;
  std::vector<double> stop_dwell_;
  std::vector<bool> stop_ok_;
  double excursion_start_{-1};
  bool excursion_reported_{false};
};

/// Furthest route arc length reached inside the corridor; never decreases.
class RouteProgress {
 public:
  RouteProgress(const Route& route, double lookahead = 15.0, double lookback = 5.0)
      : route_(&route), lookahead_(lookahead), lookback_(lookback) {}

  /// Updates with a new position and returns C in [0,1].
  double update(geom::Vec2 p) {
    const auto pr = project(p);
    if (pr.distance <= route_->corridor) progress_ = std::max(progress_, pr.s);
    return completion();
  }

  /// Distance from the route near the current progress.
  bool on_corridor(geom::Vec2 p) const { return project(p).distance <= route_->corridor; }

  double progress() const { return progress_; }
  double completion() const { return std::clamp(progress_ / route_->length(), 0.0, 1.0); }
  bool complete() const { return progress_ >= route_->length() - 1e-9; }

 private:
  geom::Projection project(geom::Vec2 p) const {
    return route_->path.project(p, progress_ - lookback_, progress_ + lookahead_);
  }

  const Route* route_;
  double lookahead_, lookback_;
  double progress_{0};
};

/// Aborts once the vehicle has been off the corridor for more than `limit_ms`.
class OffRouteMonitor {
 public:
  explicit OffRouteMonitor(double limit_ms = 10000) : limit_(limit_ms) {}

  /// Returns true once the run must be aborted (sticky).
  bool update(bool on_corridor, double t_ms) {
    if (aborted_) return true;
    if (on_corridor) {
      off_since_ = -1;
    } else {
      if (off_since_ < 0) off_since_ = t_ms;
      if (t_ms - off_since_ > limit_) aborted_ = true;
    }
    return aborted_;
  }

  bool aborted() const { return aborted_; }

 private:
  double limit_;
  double off_since_{-1};
  bool aborted_{false};
};

}  // namespace teledrive
