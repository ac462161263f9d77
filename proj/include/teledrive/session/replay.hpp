#pragma once

// Replay: recompute every derived value in a run record from its inputs and
// compare. Inputs are the cursor samples, link deliveries (which control frame
// the vehicle held, which state frame the operator held, the offset estimate)
// and operator events; everything else must be reproduced exactly.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "teledrive/session/driving.hpp"
#include "teledrive/session/record.hpp"
#include "teledrive/session/rt_task.hpp"

namespace teledrive::session {

struct ReplayResult {
  bool match{true};
  bool partial{false};
  std::vector<std::string> mismatches;
  nlohmann::json report;  // recomputed
};

namespace replay_detail {

using nlohmann::json;

struct Checker {
  ReplayResult& r;
  void fail(std::size_t line, const std::string& what) {
    r.match = false;
    if (r.mismatches.size() < 20) r.mismatches.push_back("line " + std::to_string(line + 1) + ": " + what);
  }
  template <class A, class B>
  void eq(std::size_t line, const char* what, const A& logged, const B& computed) {
    if (!(logged == computed)) {
      std::ostringstream os;
      os << what << " logged " << json(logged).dump() << " recomputed " << json(computed).dump();
      fail(line, os.str());
    }
  }
};

inline void replay_driving(const RunRecord& rec, const SessionConfig& cfg, const json& world_doc, ReplayResult& out) {
  Checker chk{out};
  const WorldModel world = world_from_json(world_doc);
  VehicleNode veh(cfg, world);
  ControlState ctrl;
  ctrl.cold_steer_enabled = cold_steering_for(cfg.task);
  std::map<std::uint32_t, link::ControlFrame> sent;
  std::vector<InfractionEvent> expected;
  std::size_t expected_pos = 0;
  std::size_t next_cfg_event = 0;
  std::uint64_t k = 0;
  double t = 0;
  std::uint32_t last_rx = 0, last_st = 0;
  bool activation = false, epb = false, op_brake = false;
  std::vector<std::string> tick_events;
  const double dt = cfg.dt();
  std::optional<json> logged_report;
  RunEnd end = RunEnd::Running;

  for (std::size_t li = 1; li < rec.lines.size(); ++li) {
    const json j = json::parse(rec.lines[li]);
    const std::string type = j.value("type", "");
    try {
      if (type == "event") {
        const std::string kind = j.at("kind").get<std::string>();
        chk.eq(li, "event time", j.at("t").get<double>(), static_cast<double>(k + 1) * dt);
        if (kind == "activate") activation = true;
        else if (kind == "epb") epb = true;
        else if (kind == "operator_brake") op_brake = true;
        else if (kind == "release_brake") op_brake = false;
        tick_events.push_back(kind);
      } else if (type == "tick") {
        if (expected_pos != expected.size()) chk.fail(li, "missing infraction events");
        expected.clear();
        expected_pos = 0;
        ++k;
        t = static_cast<double>(k) * dt;
        chk.eq(li, "tick time", j.at("t").get<double>(), t);

        // Scheduled events due by now must all be in the log.
        std::vector<std::string> due;
        while (next_cfg_event < cfg.events.size() && cfg.events[next_cfg_event].t <= t + 1e-9)
          due.push_back(cfg.events[next_cfg_event++].kind);
        if (tick_events.size() < due.size() || !std::equal(due.begin(), due.end(), tick_events.begin()))
          chk.fail(li, "scheduled events do not match the config");

        const auto& cj = j.at("cur");
        const CursorSample cur{cj.at(0).get<double>(), cj.at(1).get<double>(), cj.at(2).get<bool>(), t};
        if (cur.click) ctrl = apply_click(ctrl, cfg.ramp);
        ctrl = tick(ctrl, cur, cfg.overlay, cfg.ramp, dt).state;
        const CommandTriple c = to_vehicle_command(ctrl);
        const auto& cmd = j.at("cmd");
        chk.eq(li, "cmd.seq", cmd.at(0).get<std::uint32_t>(), static_cast<std::uint32_t>(k));
        chk.eq(li, "cmd.steering", cmd.at(1).get<double>(), c.steering);
        chk.eq(li, "cmd.speed", cmd.at(2).get<double>(), c.speed);
        chk.eq(li, "cmd.brake", cmd.at(3).get<bool>(), c.brake);
        sent[static_cast<std::uint32_t>(k)] =
            link::ControlFrame{static_cast<std::uint32_t>(k), t, c.steering, c.speed, c.brake, cmd.at(4).get<double>()};

        const auto rx = j.at("rx").get<std::uint32_t>();
        if (rx < last_rx || rx >= k) chk.fail(li, "control delivery out of order");
        if (rx > 0 && sent.count(rx)) veh.on_control(sent[rx]);
        last_rx = rx;

        double lag = t;
        if (!j.at("st").is_null()) {
          const auto st_seq = j["st"].at(0).get<std::uint32_t>();
          const double st_t = j["st"].at(1).get<double>();
          if (st_seq < last_st || st_seq >= k) chk.fail(li, "state delivery out of order");
          chk.eq(li, "state t_send", st_t, static_cast<double>(st_seq) * dt + cfg.net.clock_offset);
          last_st = st_seq;
          lag = link::lag_monitor(t, st_t, -j.at("off").get<double>());
        }
        chk.eq(li, "lag", j.at("lag").get<double>(), lag);

        const auto s = veh.step(t, link::SafetyInputs{lag, epb, activation, op_brake}, static_cast<std::uint32_t>(k));
        activation = epb = false;
        tick_events.clear();
        chk.eq(li, "mode", j.at("mode").get<std::string>(), std::string(to_string(veh.safety().mode)));
        const auto& vj = j.at("veh");
        const auto& v = veh.vehicle();
        chk.eq(li, "veh.x", vj.at(0).get<double>(), v.x);
        chk.eq(li, "veh.y", vj.at(1).get<double>(), v.y);
        chk.eq(li, "veh.heading", vj.at(2).get<double>(), v.heading);
        chk.eq(li, "veh.speed", vj.at(3).get<double>(), v.speed);
        chk.eq(li, "veh.wheel_angle", vj.at(4).get<double>(), v.wheel_angle);
        expected = s.infractions;
        const bool more = next_cfg_event < cfg.events.size();
        end = veh.status(t, more);
      } else if (type == "infraction") {
        if (expected_pos >= expected.size()) {
          chk.fail(li, "unexpected infraction event");
        } else {
          chk.eq(li, "infraction", j, infraction_json(expected[expected_pos++]));
        }
      } else if (type == "report") {
        logged_report = j;
      } else {
        chk.fail(li, "unknown event type '" + type + "'");
      }
    } catch (const json::exception& e) {
      chk.fail(li, std::string("malformed event: ") + e.what());
    }
  }
  if (expected_pos != expected.size()) chk.fail(rec.lines.size() - 1, "missing infraction events");

  // A gateway run can be stopped early; the stored end reason is then an input.
  RunEnd report_end = end == RunEnd::Running ? RunEnd::Timeout : end;
  if (logged_report && end == RunEnd::Running && logged_report->value("end", "") == "timeout") report_end = RunEnd::Timeout;
  out.report = driving_report(cfg.task, report_end, veh.counts(), k, t);
  if (!logged_report) {
    out.partial = true;
    out.report["partial"] = true;
  } else {
    chk.eq(rec.lines.size() - 1, "report", *logged_report, out.report);
  }
}

inline void replay_rt(const RunRecord& rec, const SessionConfig& cfg, ReplayResult& out) {
  Checker chk{out};
  const auto trials = rt_schedule(cfg);
  std::vector<double> clicks;
  std::size_t done = 0;
  std::optional<json> logged_report;
  for (std::size_t li = 1; li < rec.lines.size(); ++li) {
    const json j = json::parse(rec.lines[li]);
    const std::string type = j.value("type", "");
    if (type == "click") clicks.push_back(j.at("t").get<double>());
    if (type == "outcome") ++done;
    if (type == "report") logged_report = j;
  }
  if (done > trials.size()) {
    chk.fail(rec.lines.size() - 1, "more outcomes than scheduled trials");
    done = trials.size();
  }
  const std::vector<TrialSpec> finished(trials.begin(), trials.begin() + static_cast<std::ptrdiff_t>(done));
  RunRecord again;
  const RTMetrics m = label_run(cfg, finished, clicks, &again);
  out.report = metrics_json(cfg.task, m);

  // Every logged line after the header must match the recomputed log.
  std::size_t li = 1;
  for (const auto& line : again.lines) {
    if (li >= rec.lines.size()) break;
    if (json::parse(rec.lines[li]) != json::parse(line)) chk.fail(li, "event differs from recomputation: " + rec.lines[li]);
    ++li;
  }
  const std::size_t tail = rec.lines.size() - (logged_report ? 1 : 0);
  if (logged_report && li != tail) chk.fail(li, "unexpected extra events");

  if (!logged_report || done != trials.size()) {
    out.partial = true;
    out.report["partial"] = true;
  } else {
    chk.eq(rec.lines.size() - 1, "report", *logged_report, out.report);
  }
}

}  // namespace replay_detail

inline ReplayResult replay(const LoadedRecord& loaded) {
  ReplayResult out;
  const auto& rec = loaded.record;
  const auto header = rec.header();
  SessionConfig cfg = config_from_json(header.at("config"));
  if (is_driving(cfg.task)) {
    replay_detail::replay_driving(rec, cfg, header.at("world"), out);
  } else {
    replay_detail::replay_rt(rec, cfg, out);
  }
  if (loaded.truncated && !out.partial) {
    out.partial = true;
    out.report["partial"] = true;
  }
  return out;
}

inline ReplayResult replay(const RunRecord& rec) { return replay(LoadedRecord{rec, false}); }

}  // namespace teledrive::session
