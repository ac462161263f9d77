#pragma once

// Session configuration: one structured-text (JSON) document per run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "teledrive/control_law.hpp"
#include "teledrive/link/channels.hpp"
#include "teledrive/link/safety.hpp"
#include "teledrive/reaction.hpp"
#include "teledrive/scoring.hpp"
#include "teledrive/vehicle/brake_trial.hpp"
#include "teledrive/vehicle/detectors.hpp"
#include "teledrive/vehicle/vehicle.hpp"

#ifndef TELEDRIVE_DATA_DIR
#define TELEDRIVE_DATA_DIR "data"
#endif

namespace teledrive::session {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Task { SimpleRt, BrakingRt, McityTeledrive, TownDrive, ObstacleTeledrive };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::SimpleRt: return "simple_rt";
    case Task::BrakingRt: return "braking_rt";
    case Task::McityTeledrive: return "mcity_teledrive";
    case Task::TownDrive: return "town_drive";
    case Task::ObstacleTeledrive: return "obstacle_teledrive";
  }
  return "?";
}

inline Task task_from_string(const std::string& s) {
  for (Task t : {Task::SimpleRt, Task::BrakingRt, Task::McityTeledrive, Task::TownDrive, Task::ObstacleTeledrive})
    if (s == to_string(t)) return t;
  throw ConfigError("unknown task '" + s + "'");
}

inline bool is_driving(Task t) { return t != Task::SimpleRt && t != Task::BrakingRt; }

inline TaskMode score_mode(Task t) {
  switch (t) {
    case Task::McityTeledrive: return TaskMode::Mcity;
    case Task::TownDrive: return TaskMode::Town;
    default: return TaskMode::Obstacle;
  }
}

enum class PilotKind { Ui, Scripted, Decoder };

inline const char* to_string(PilotKind k) {
  switch (k) {
    case PilotKind::Ui: return "ui";
    case PilotKind::Scripted: return "scripted";
    case PilotKind::Decoder: return "decoder";
  }
  return "?";
}

inline PilotKind pilot_kind_from_string(const std::string& s) {
  for (PilotKind k : {PilotKind::Ui, PilotKind::Scripted, PilotKind::Decoder})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown pilot '" + s + "'");
}

struct DecoderPilotConfig {
  std::uint64_t seed{1};
  double snr{10};
  std::size_t channels{8};
  double sample_rate{30000};
  double bin_rate{30};
  std::size_t training_bins{3000};
  std::size_t components{6};
  double smoothing{0.5};
  double gain{6.0};  // 1/s, intent velocity per unit cursor error
};

struct PilotConfig {
  PilotKind kind{PilotKind::Scripted};
  DecoderPilotConfig decoder;
  // Reaction tasks: the synthetic participant.
  LatencyDistribution latency{300, 0, 0};
  ErrorRates errors{};
};

struct ScheduledEvent {
  double t{0};       // ms
  std::string kind;  // activate | epb | operator_brake | release_brake | impair
  std::string flow;  // impair: control | state | clock
  link::Impairment impairment{};

  friend bool operator==(const ScheduledEvent&, const ScheduledEvent&) = default;
};

struct NetConfig {
  link::LinkConfig link{};
  double lag_threshold{1500};
  double clock_offset{0};    // ms, vehicle clock minus operator clock
  double probe_period{250};  // ms
  std::string host{"127.0.0.1"};
  int control_port{47100};
  int state_port{47101};
};

struct SessionConfig {
  Task task{Task::ObstacleTeledrive};
  std::string world;  // path, resolved against the config file directory or the data dir
  OverlayGeometry overlay{};
  RampConfig ramp{};
  VehicleParams vehicle{};
  DetectorConfig detectors{};
  NetConfig net{};
  PilotConfig pilot{};
  std::uint64_t seed{1};
  double tick_rate{50};          // Hz
  double max_duration{600000};   // ms
  double offroute_limit{10000};  // ms
  std::vector<ScheduledEvent> events{{0, "activate", "", {}}};

  double dt() const { return 1000.0 / tick_rate; }
};

/// Data directory: $TELEDRIVE_DATA if set, else the build-time default.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("TELEDRIVE_DATA"); env && *env) return env;
  return TELEDRIVE_DATA_DIR;
}

/// Resolves a referenced file: absolute, relative to `base`, or under the data dir.
inline std::filesystem::path resolve_data_file(const std::string& name, const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  const fs::path p(name);
  if (p.is_absolute()) return p;
  if (!base.empty() && fs::exists(base / p)) return base / p;
  if (fs::exists(p)) return p;
  return data_dir() / p;
}

namespace config_detail {

using nlohmann::json;

template <class T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline link::Impairment impairment(const json& j, link::Impairment d) {
  opt(j, "delay", d.delay);
  opt(j, "jitter", d.jitter);
  opt(j, "loss", d.loss);
  if (d.delay < 0 || d.jitter < 0 || d.loss < 0 || d.loss > 1) throw ConfigError("bad link impairment: " + j.dump());
  return d;
}

inline json to_json(const link::Impairment& i) { return {{"delay", i.delay}, {"jitter", i.jitter}, {"loss", i.loss}}; }

}  // namespace config_detail

inline SessionConfig config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  SessionConfig c;
  try {
    if (j.value("version", 1) != 1) throw ConfigError("unsupported config version");
    c.task = task_from_string(j.at("task").get<std::string>());
    opt(j, "world", c.world);
    opt(j, "seed", c.seed);
    opt(j, "tick_rate", c.tick_rate);
    opt(j, "max_duration", c.max_duration);
    opt(j, "offroute_limit", c.offroute_limit);
    c.net.link.seed = c.seed;

    if (c.task == Task::TownDrive) c.vehicle = town_params();
    if (c.task == Task::BrakingRt) c.vehicle = brake_trial_params();
    if (j.contains("vehicle")) {
      const auto& v = j["vehicle"];
      opt(v, "speed_cap", c.vehicle.speed_cap);
      opt(v, "wheelbase", c.vehicle.wheelbase);
      opt(v, "steer_ratio", c.vehicle.steer_ratio);
      opt(v, "accel_tau", c.vehicle.accel_tau);
      opt(v, "brake_stop_time", c.vehicle.brake_stop_time);
      opt(v, "brake_ref_speed", c.vehicle.brake_ref_speed);
      opt(v, "front_overhang", c.vehicle.front_overhang);
      opt(v, "rear_overhang", c.vehicle.rear_overhang);
      opt(v, "half_width", c.vehicle.half_width);
    }
    if (j.contains("overlay")) {
      const auto& o = j["overlay"];
      opt(o, "left_hot", c.overlay.left_hot);
      opt(o, "right_hot", c.overlay.right_hot);
      opt(o, "top_hot", c.overlay.top_hot);
      opt(o, "bottom_hot", c.overlay.bottom_hot);
      opt(o, "cold_half_width", c.overlay.cold_half_width);
    }
    if (j.contains("ramp")) {
      const auto& r = j["ramp"];
      opt(r, "tau_steer", c.ramp.tau_steer);
      opt(r, "tau_speed", c.ramp.tau_speed);
      opt(r, "cold_gain", c.ramp.cold_gain);
      opt(r, "brake_hold", c.ramp.brake_hold);
    }
    if (j.contains("detectors")) {
      const auto& d = j["detectors"];
      opt(d, "lane_margin", c.detectors.lane_margin);
      opt(d, "lane_debounce", c.detectors.lane_debounce);
      opt(d, "stop_eps", c.detectors.stop_eps);
      opt(d, "stop_dwell", c.detectors.stop_dwell);
    }
    if (j.contains("link")) {
      const auto& l = j["link"];
      if (l.contains("control")) c.net.link.control = impairment(l["control"], c.net.link.control);
      if (l.contains("state")) c.net.link.state = impairment(l["state"], c.net.link.state);
      if (l.contains("clock")) c.net.link.clock = impairment(l["clock"], c.net.link.clock);
      opt(l, "seed", c.net.link.seed);
      opt(l, "lag_threshold", c.net.lag_threshold);
      opt(l, "clock_offset", c.net.clock_offset);
      opt(l, "probe_period", c.net.probe_period);
      opt(l, "host", c.net.host);
      opt(l, "control_port", c.net.control_port);
      opt(l, "state_port", c.net.state_port);
    }
    if (j.contains("pilot")) {
      const auto& p = j["pilot"];
      c.pilot.kind = pilot_kind_from_string(p.value("kind", std::string{"scripted"}));
      if (p.contains("decoder")) {
        const auto& d = p["decoder"];
        auto& dc = c.pilot.decoder;
        opt(d, "seed", dc.seed);
        opt(d, "snr", dc.snr);
        opt(d, "channels", dc.channels);
        opt(d, "sample_rate", dc.sample_rate);
        opt(d, "bin_rate", dc.bin_rate);
        opt(d, "training_bins", dc.training_bins);
        opt(d, "components", dc.components);
        opt(d, "smoothing", dc.smoothing);
        opt(d, "gain", dc.gain);
        if (!(dc.snr > 0) || dc.channels == 0 || !(dc.bin_rate > 0) || !(dc.sample_rate >= dc.bin_rate) ||
            dc.training_bins < 10 || dc.components == 0 || dc.smoothing < 0 || dc.smoothing > 1)
          throw ConfigError("bad decoder pilot settings");
      }
      if (p.contains("latency")) {
        opt(p["latency"], "mean", c.pilot.latency.mean);
        opt(p["latency"], "sd", c.pilot.latency.sd);
        opt(p["latency"], "min", c.pilot.latency.min);
      }
      if (p.contains("errors")) {
        opt(p["errors"], "false_positive", c.pilot.errors.false_positive);
        opt(p["errors"], "miss", c.pilot.errors.miss);
      }
    }
    if (j.contains("events")) {
      c.events.clear();
      for (const auto& e : j["events"]) {
        ScheduledEvent ev;
        ev.t = e.at("t").get<double>();
        ev.kind = e.at("kind").get<std::string>();
        if (ev.kind == "impair") {
          ev.flow = e.at("flow").get<std::string>();
          if (ev.flow != "control" && ev.flow != "state" && ev.flow != "clock")
            throw ConfigError("impair event needs flow control|state|clock");
          ev.impairment = impairment(e, {});
        } else if (ev.kind != "activate" && ev.kind != "epb" && ev.kind != "operator_brake" &&
                   ev.kind != "release_brake") {
          throw ConfigError("unknown scheduled event '" + ev.kind + "'");
        }
        if (!(ev.t >= 0)) throw ConfigError("scheduled event time must be >= 0");
        c.events.push_back(ev);
      }
      std::stable_sort(c.events.begin(), c.events.end(),
                       [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.t < b.t; });
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(c.tick_rate > 0) || !std::isfinite(c.tick_rate)) throw ConfigError("tick_rate must be positive");
  if (!(c.max_duration > 0)) throw ConfigError("max_duration must be positive");
  if (!c.vehicle.valid()) throw ConfigError("invalid vehicle parameters");
  if (!c.overlay.valid()) throw ConfigError("invalid overlay geometry");
  if (!c.ramp.valid()) throw ConfigError("invalid ramp config");
  if (!(c.net.lag_threshold >= link::kMinLagThreshold && c.net.lag_threshold <= link::kMaxLagThreshold))
    throw ConfigError("lag_threshold must lie in [1000, 2000] ms");
  if (!(c.net.probe_period > 0)) throw ConfigError("probe_period must be positive");
  if (is_driving(c.task) && c.world.empty()) throw ConfigError("driving tasks need a world file");
  if (c.pilot.latency.mean < 0 || c.pilot.latency.sd < 0 || c.pilot.errors.false_positive < 0 ||
      c.pilot.errors.false_positive > 1 || c.pilot.errors.miss < 0 || c.pilot.errors.miss > 1)
    throw ConfigError("bad pilot latency or error rates");
  return c;
}

/// Canonical snapshot; config_from_json(to_json(c)) reproduces c.
inline nlohmann::json to_json(const SessionConfig& c) {
  using namespace config_detail;
  json events = json::array();
  for (const auto& e : c.events) {
    json ej{{"t", e.t}, {"kind", e.kind}};
    if (e.kind == "impair") {
      ej["flow"] = e.flow;
      ej["delay"] = e.impairment.delay;
      ej["jitter"] = e.impairment.jitter;
      ej["loss"] = e.impairment.loss;
    }
    events.push_back(ej);
  }
  const auto& d = c.pilot.decoder;
  return {
      {"version", 1},
      {"task", to_string(c.task)},
      {"world", c.world},
      {"seed", c.seed},
      {"tick_rate", c.tick_rate},
      {"max_duration", c.max_duration},
      {"offroute_limit", c.offroute_limit},
      {"vehicle",
       {{"speed_cap", c.vehicle.speed_cap},
        {"wheelbase", c.vehicle.wheelbase},
        {"steer_ratio", c.vehicle.steer_ratio},
        {"accel_tau", c.vehicle.accel_tau},
        {"brake_stop_time", c.vehicle.brake_stop_time},
        {"brake_ref_speed", c.vehicle.brake_ref_speed},
        {"front_overhang", c.vehicle.front_overhang},
        {"rear_overhang", c.vehicle.rear_overhang},
        {"half_width", c.vehicle.half_width}}},
      {"overlay",
       {{"left_hot", c.overlay.left_hot},
        {"right_hot", c.overlay.right_hot},
        {"top_hot", c.overlay.top_hot},
        {"bottom_hot", c.overlay.bottom_hot},
        {"cold_half_width", c.overlay.cold_half_width}}},
      {"ramp",
       {{"tau_steer", c.ramp.tau_steer},
        {"tau_speed", c.ramp.tau_speed},
        {"cold_gain", c.ramp.cold_gain},
        {"brake_hold", c.ramp.brake_hold}}},
      {"detectors",
       {{"lane_margin", c.detectors.lane_margin},
        {"lane_debounce", c.detectors.lane_debounce},
        {"stop_eps", c.detectors.stop_eps},
        {"stop_dwell", c.detectors.stop_dwell}}},
      {"link",
       {{"control", to_json(c.net.link.control)},
        {"state", to_json(c.net.link.state)},
        {"clock", to_json(c.net.link.clock)},
        {"seed", c.net.link.seed},
        {"lag_threshold", c.net.lag_threshold},
        {"clock_offset", c.net.clock_offset},
        {"probe_period", c.net.probe_period},
        {"host", c.net.host},
        {"control_port", c.net.control_port},
        {"state_port", c.net.state_port}}},
      {"pilot",
       {{"kind", to_string(c.pilot.kind)},
        {"decoder",
         {{"seed", d.seed},
          {"snr", d.snr},
          {"channels", d.channels},
          {"sample_rate", d.sample_rate},
          {"bin_rate", d.bin_rate},
          {"training_bins", d.training_bins},
          {"components", d.components},
          {"smoothing", d.smoothing},
          {"gain", d.gain}}},
        {"latency", {{"mean", c.pilot.latency.mean}, {"sd", c.pilot.latency.sd}, {"min", c.pilot.latency.min}}},
        {"errors", {{"false_positive", c.pilot.errors.false_positive}, {"miss", c.pilot.errors.miss}}}}},
      {"events", events},
  };
}

inline SessionConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + file.string() + ": " + e.what());
  }
  SessionConfig c = config_from_json(j);
  if (!c.world.empty()) {
    const auto p = resolve_data_file(c.world, file.parent_path());
    if (!std::filesystem::exists(p)) throw ConfigError("world file not found: " + c.world);
    c.world = p.string();
  }
  return c;
}

}  // namespace teledrive::session
