#pragma once

// Reaction-time task sessions: schedule, synthetic participant, labeling.

#include <algorithm>
#include <optional>
#include <vector>

#include <json.hpp>

#include "teledrive/reaction.hpp"
#include "teledrive/session/config.hpp"
#include "teledrive/session/pilot.hpp"
#include "teledrive/session/record.hpp"
#include "teledrive/vehicle/brake_trial.hpp"

namespace teledrive::session {

inline nlohmann::json trial_json(const TrialSpec& s, const char* phase) {
  return {{"type", "trial"},      {"t", s.start},
          {"i", s.index},         {"phase", phase},
          {"kind", to_string(s.kind)},
          {"onset", s.stimulus_onset},
          {"duration", s.stimulus_duration},
          {"length", s.length},   {"cue", s.auditory_cue}};
}

inline TrialSpec trial_from_json(const nlohmann::json& j) {
  TrialSpec s;
  s.index = j.at("i").get<int>();
  s.kind = j.at("kind").get<std::string>() == "GO" ? TrialKind::Go : TrialKind::NoGo;
  s.start = j.at("t").get<double>();
  s.stimulus_onset = j.at("onset").get<double>();
  s.stimulus_duration = j.at("duration").get<double>();
  s.length = j.at("length").get<double>();
  s.auditory_cue = j.at("cue").get<bool>();
  return s;
}

inline nlohmann::json outcome_json(const TrialSpec& s, const char* phase, const TrialOutcome& o) {
  nlohmann::json j{{"type", "outcome"}, {"t", s.end()}, {"i", s.index}, {"phase", phase}, {"label", to_string(o.label)}};
  j["rt"] = o.valid_rt ? nlohmann::json(*o.valid_rt) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json metrics_json(Task task, const RTMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"type", "report"},
          {"task", to_string(task)},
          {"tp", m.tp},
          {"tn", m.tn},
          {"fp", m.fp},
          {"fn", m.fn},
          {"accuracy", opt(m.accuracy)},
          {"sensitivity", opt(m.sensitivity)},
          {"specificity", opt(m.specificity)},
          {"n_valid", m.valid_rts.size()},
          {"rt_mean", opt(m.rt_mean)},
          {"rt_sd", opt(m.rt_sd)}};
}

/// Click times for a schedule of (GO/NO-GO) trials from the configured pilot.
inline std::vector<double> participant_clicks(const SessionConfig& cfg, const std::vector<TrialSpec>& trials,
                                              std::optional<decoder::DecoderModels> models = std::nullopt) {
  std::vector<double> intended = scripted_operator(trials, cfg.pilot.latency, cfg.pilot.errors, cfg.seed * 7 + 5);
  std::sort(intended.begin(), intended.end());
  if (cfg.pilot.kind != PilotKind::Decoder) return intended;

  // Through the decoder: intended clicks become click bursts in the synthetic
  // recording; decoded rising edges are the clicks.
  const auto& dc = cfg.pilot.decoder;
  NeuralLoop loop(dc, models ? std::move(*models) : calibrate_decoder(dc), dc.seed * 2 + 3 + cfg.seed * 1000003ULL);
  const double end = trials.empty() ? 0.0 : trials.back().end();
  const double bin_ms = 1000.0 / dc.bin_rate;
  std::vector<double> out;
  std::size_t next = 0;
  for (long long b = 1; static_cast<double>(b) * bin_ms <= end; ++b) {
    const double t = static_cast<double>(b) * bin_ms;
    bool click = false;
    while (next < intended.size() && intended[next] <= t) {
      click = true;
      ++next;
    }
    if (loop.step(t, 0.5, 0.5, click).click) out.push_back(t);
  }
  return out;
}

inline std::vector<TrialSpec> flatten(const std::vector<BrakingTrial>& run) {
  std::vector<TrialSpec> out;
  for (const auto& b : run) {
    out.push_back(b.nogo);
    out.push_back(b.go);
  }
  return out;
}

inline VehicleState cruise_state(const SessionConfig& cfg) {
  VehicleState v;
  v.speed = BrakeTrialTiming{}.cruise_speed;
  v.mode = VehicleMode::Teleop;
  v.last_command = {0.5, v.speed / cfg.vehicle.speed_cap, false};
  return v;
}

inline nlohmann::json brake_result_json(const TrialSpec& go, const std::optional<double>& onset,
                                        const BrakeTrialResult& r) {
  return {{"type", "brake_result"},
          {"t", go.end()},
          {"i", go.index},
          {"onset", onset ? nlohmann::json(*onset) : nlohmann::json(nullptr)},
          {"collided", r.collided},
          {"collision_time", r.collision_time},
          {"stop_time", r.stop_time}};
}

/// Labels every trial of a run from its clicks and appends the log lines.
/// Braking GO phases are re-simulated from the first click.
inline RTMetrics label_run(const SessionConfig& cfg, const std::vector<TrialSpec>& trials,
                           const std::vector<double>& clicks, RunRecord* rec) {
  std::vector<TrialOutcome> outcomes;
  const bool braking = cfg.task == Task::BrakingRt;
  for (const auto& spec : trials) {
    const char* phase = braking ? (spec.kind == TrialKind::Go ? "go" : "nogo") : "trial";
    std::vector<nlohmann::json> lines;
    lines.push_back(trial_json(spec, phase));
    if (!braking) {
      lines.push_back({{"type", "stimulus_on"}, {"t", spec.onset_time()}, {"i", spec.index}, {"cue", spec.auditory_cue}});
      lines.push_back({{"type", "stimulus_off"}, {"t", spec.onset_time() + spec.stimulus_duration}, {"i", spec.index}});
    } else if (spec.kind == TrialKind::Go) {
      lines.push_back({{"type", "spawn"}, {"t", spec.onset_time()}, {"i", spec.index}});
    }
    const auto mine = clicks_in(spec, clicks);
    for (double c : mine) lines.push_back({{"type", "click"}, {"t", c}});
    bool collided = false;
    std::optional<nlohmann::json> brake_line;
    if (braking && spec.kind == TrialKind::Go) {
      const VehicleState v = cruise_state(cfg);
      const auto geom = spawn_brake_trial(v, cfg.vehicle);
      std::optional<double> onset;
      if (!mine.empty()) onset = mine.front() - spec.onset_time();
      const auto r = simulate_brake_trial(v, cfg.vehicle, geom, onset, cfg.dt(), spec.length);
      collided = r.collided;
      brake_line = brake_result_json(spec, onset, r);
    }
    const TrialOutcome o = label_trial(spec, mine, collided);
    outcomes.push_back(o);
    std::stable_sort(lines.begin(), lines.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
      return a.at("t").get<double>() < b.at("t").get<double>();
    });
    if (rec) {
      for (const auto& l : lines) rec->add(l);
      if (brake_line) rec->add(*brake_line);
      rec->add(outcome_json(spec, phase, o));
    }
  }
  return run_metrics(outcomes);
}

inline std::vector<TrialSpec> rt_schedule(const SessionConfig& cfg) {
  if (cfg.task == Task::SimpleRt) return gen_simple_run(cfg.seed);
  if (cfg.task == Task::BrakingRt) return flatten(gen_braking_run(cfg.seed));
  throw ConfigError("not a reaction-time task");
}

inline RunRecord run_rt_task(const SessionConfig& cfg, std::optional<decoder::DecoderModels> models = std::nullopt) {
  RunRecord rec;
  rec.add({{"type", "header"}, {"format", kRecordFormat}, {"config", to_json(cfg)}, {"world", nullptr}});
  const auto trials = rt_schedule(cfg);
  const auto clicks = participant_clicks(cfg, trials, std::move(models));
  const RTMetrics m = label_run(cfg, trials, clicks, &rec);
  rec.add(metrics_json(cfg.task, m));
  return rec;
}

}  // namespace teledrive::session
