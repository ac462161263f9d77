#pragma once

// Synthetic operators for driving tasks.
//
// ScriptedDriver plays the human: it watches the vehicle state frames and its
// own overlay, and moves the cursor into whichever hot zone pushes steering and
// speed toward a pure-pursuit target. It stops for stop signs and red lights
// with a click plus the bottom zone.
//
// DecoderDriver puts the decode pipeline in the loop: the scripted target
// becomes an intended cursor velocity, which the synthesizer turns into
// broadband windows, which the decoder turns back into a cursor.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "teledrive/control_law.hpp"
#include "teledrive/decoder/pipeline.hpp"
#include "teledrive/decoder/synth.hpp"
#include "teledrive/link/frames.hpp"
#include "teledrive/session/config.hpp"
#include "teledrive/vehicle/detectors.hpp"
#include "teledrive/vehicle/world.hpp"

namespace teledrive::session {

struct PilotObservation {
  double t{0};                            // operator clock, ms
  std::optional<link::StateFrame> state;  // latest state frame received
  ControlState control;                   // what the overlay shows
};

struct CursorIntent {
  double x{0.5}, y{0.5};
  bool click{false};  // click event on this tick
};

/// Cursor positions the scripted operator uses.
struct ZoneTargets {
  double left, right, hold_x, top, bottom, hold_y;
};

inline ZoneTargets zone_targets(const OverlayGeometry& g) {
  return {g.left_hot / 2,
          1.0 - g.right_hot / 2,
          (g.left_hot + 0.5 - g.cold_half_width) / 2,
          g.top_hot / 2,
          1.0 - g.bottom_hot / 2,
          0.5};
}

class ScriptedDriver {
 public:
  ScriptedDriver(const WorldModel& world, const VehicleParams& params, const OverlayGeometry& overlay,
                 const DetectorConfig& det)
      : world_(&world), params_(params), zones_(zone_targets(overlay)), det_(det) {
    for (std::size_t i = 0; i < world.stop_signs.size(); ++i) stops_.push_back({world.stop_signs[i].route_s, -1, i});
    for (std::size_t i = 0; i < world.traffic_lights.size(); ++i)
      stops_.push_back({world.traffic_lights[i].route_s, static_cast<int>(i), i});
    std::sort(stops_.begin(), stops_.end(), [](const Stop& a, const Stop& b) { return a.s < b.s; });
  }

  CursorIntent decide(const PilotObservation& obs) {
    CursorIntent out{zones_.hold_x, zones_.hold_y, false};
    if (!obs.state) return out;
    const auto& st = *obs.state;
    VehicleState v;
    v.x = st.x;
    v.y = st.y;
    v.heading = st.heading;
    v.speed = st.speed;
    const geom::Polyline& route = world_->route.path;

    const auto pc = route.project(center_point(v, params_), s_ - 5.0, s_ + 15.0);
    if (pc.distance < world_->route.corridor * 2) s_ = std::max(s_, pc.s);
    const double s_front = route.project(front_point(v, params_), s_ - 2.0, s_ + 15.0).s;

    // Steering: pure pursuit from the rear axle.
    const double v_ms = st.speed * kMetersPerSecondPerMph;
    const double look = std::max(3.5, 3.0 + 1.5 * v_ms);
    const double s_target = pc.s + look;
    geom::Vec2 target;
    if (s_target <= route.length()) {
      target = route.point_at(s_target);
    } else {
      target = route.point_at(route.length()) +
               geom::heading_vector(route.heading_at(route.length())) * (s_target - route.length());
    }
    const geom::Vec2 to = target - v.position();
    const double alpha = geom::wrap_angle(std::atan2(to.y, to.x) - v.heading);
    const double delta = std::atan2(2.0 * params_.wheelbase * std::sin(alpha), std::max(geom::norm(to), 1e-6));
    const double wheel = -geom::rad2deg(delta) * params_.steer_ratio;
    const double want_steer = std::clamp(0.5 + wheel / (2.0 * kMaxWheelAngleDeg), 0.0, 1.0);
    const double err = want_steer - obs.control.steering_cmd;
    if (err > kSteerTolerance) out.x = zones_.right;
    else if (err < -kSteerTolerance) out.x = zones_.left;

    // Speed and stops.
    out.y = zones_.top;
    while (next_ < stops_.size() && s_front > stops_[next_].s + 0.5) {
      ++next_;
      phase_ = Phase::Cruise;
    }
    if (next_ < stops_.size()) {
      const Stop& stop = stops_[next_];
      const double d = stop.s - s_front;
      const double trigger = 2.0 + 0.6 * params_.speed_cap;
      switch (phase_) {
        case Phase::Cruise:
          if (d < trigger && d > 0) {
            if (must_stop(stop, obs.t, d, v_ms)) {
              phase_ = Phase::Stopping;
              out.click = true;
              out.y = zones_.bottom;
            } else {
              phase_ = Phase::Released;
            }
          }
          break;
        case Phase::Stopping:
          out.y = zones_.bottom;
          if (obs.control.brake_hold_remaining <= 0 && st.speed >= 0.02) out.click = true;
          if (st.speed < 0.02) {
            phase_ = Phase::Holding;
            held_since_ = obs.t;
          }
          break;
        case Phase::Holding:
          out.y = zones_.bottom;
          if (may_go(stop, obs.t)) phase_ = Phase::Released;
          break;
        case Phase::Released:
          break;
      }
    }
    return out;
  }

  double route_s() const { return s_; }

 private:
  static constexpr double kSteerTolerance = 0.015;

  struct Stop {
    double s;
    int light;  // -1 for a stop sign
    std::size_t index;
  };
  enum class Phase { Cruise, Stopping, Holding, Released };

  bool must_stop(const Stop& stop, double t, double d, double v_ms) const {
    if (stop.light < 0) return true;
    const auto& sched = world_->traffic_lights[static_cast<std::size_t>(stop.light)].schedule;
    const double eta = d / std::max(v_ms, 0.5) * 1000.0 + 1500.0;
    return sched.phase_at(t) == LightPhase::Red || sched.phase_at(t + eta) == LightPhase::Red;
  }

  bool may_go(const Stop& stop, double t) const {
    if (stop.light < 0) return t - held_since_ >= det_.stop_dwell + 600.0;
    const auto& sched = world_->traffic_lights[static_cast<std::size_t>(stop.light)].schedule;
    return sched.phase_at(t) == LightPhase::Green && sched.remaining(t) > 7000.0;
  }

  const WorldModel* world_;
  VehicleParams params_;
  ZoneTargets zones_;
  DetectorConfig det_;
  std::vector<Stop> stops_;
  std::size_t next_{0};
  Phase phase_{Phase::Cruise};
  double held_since_{0};
  double s_{0};
};

// ---------------------------------------------------------------------------

/// Trains a decoder on a synthetic calibration block.
inline decoder::DecoderModels calibrate_decoder(const DecoderPilotConfig& dc) {
  decoder::SynthConfig sc{dc.channels, dc.sample_rate, dc.bin_rate, dc.snr};
  const auto intent = decoder::training_intent(dc.training_bins, dc.seed * 2 + 1, dc.bin_rate);
  decoder::SignalSynthesizer gen(sc, dc.seed, dc.seed * 2 + 2);
  decoder::SynthSession s;
  for (const auto& i : intent) s.windows.push_back(gen.window(i));
  s.labels = intent;
  decoder::TrainOptions opt;
  opt.components = dc.components;
  opt.smoothing = dc.smoothing;
  return decoder::train_decoder(s, decoder::haar_fenet(), dc.bin_rate, opt);
}

/// Intent -> synthetic recording -> decoder, one bin at a time.
class NeuralLoop {
 public:
  NeuralLoop(const DecoderPilotConfig& dc, decoder::DecoderModels models, std::uint64_t noise_seed)
      : dc_(dc),
        gen_({dc.channels, dc.sample_rate, dc.bin_rate, dc.snr}, dc.seed, noise_seed),
        pipe_(std::move(models)) {}

  /// Advances to time t (ms). `target` is where the operator wants the cursor;
  /// `click` starts an intended click burst. Returns the decoded cursor with a
  /// click flag on the decoder's rising edges.
  CursorIntent step(double t, double target_x, double target_y, bool click) {
    if (click) click_bins_left_ = kClickBins;
    CursorIntent out{pipe_.output().x, pipe_.output().y, false};
    const auto bin = static_cast<long long>(std::floor(t * dc_.bin_rate / 1000.0 + 1e-9));
    while (bin_ < bin) {
      ++bin_;
      const auto& o = pipe_.output();
      decoder::IntentSample in;
      in.vx = std::clamp(dc_.gain * (target_x - o.x), -kMaxIntent, kMaxIntent);
      in.vy = std::clamp(dc_.gain * (target_y - o.y), -kMaxIntent, kMaxIntent);
      in.click = click_bins_left_ > 0;
      if (click_bins_left_ > 0) --click_bins_left_;
      const bool was_on = pipe_.output().click;
      const auto& d = pipe_.step(gen_.window(in));
      if (d.click && !was_on) out.click = true;
      out.x = d.x;
      out.y = d.y;
    }
    return out;
  }

  const decoder::DecoderPipeline& pipeline() const { return pipe_; }

 private:
  static constexpr int kClickBins = 6;
  static constexpr double kMaxIntent = 1.5;
  DecoderPilotConfig dc_;
  decoder::SignalSynthesizer gen_;
  decoder::DecoderPipeline pipe_;
  long long bin_{0};
  int click_bins_left_{0};
};

class DecoderDriver {
 public:
  DecoderDriver(ScriptedDriver policy, const DecoderPilotConfig& dc, decoder::DecoderModels models,
                std::uint64_t noise_seed)
      : policy_(std::move(policy)), loop_(dc, std::move(models), noise_seed) {}

  CursorIntent decide(const PilotObservation& obs) {
    const CursorIntent want = policy_.decide(obs);
    return loop_.step(obs.t, want.x, want.y, want.click);
  }

  const NeuralLoop& loop() const { return loop_; }

 private:
  ScriptedDriver policy_;
  NeuralLoop loop_;
};

}  // namespace teledrive::session
