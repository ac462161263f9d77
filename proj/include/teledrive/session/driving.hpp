#pragma once

// Closed-loop driving session over the simulated link, one tick at a time.
//
// Tick k happens at t = k * dt. Order within a tick: scheduled events, link
// deliveries, operator (pilot -> control law -> control frame, clock probe),
// vehicle (supervisor -> gated command -> dynamics -> detectors -> state
// frame). Everything is seeded, so a config reproduces its record byte for byte.

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "teledrive/link/channels.hpp"
#include "teledrive/link/codec.hpp"
#include "teledrive/session/config.hpp"
#include "teledrive/session/nodes.hpp"
#include "teledrive/session/pilot.hpp"
#include "teledrive/session/record.hpp"

namespace teledrive::session {

inline nlohmann::json load_world_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open world file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("world file " + path + ": " + e.what());
  }
}

inline nlohmann::json infraction_json(const InfractionEvent& e) {
  return {{"type", "infraction"}, {"t", e.t}, {"kind", to_string(e.kind)}, {"weight", e.weight}, {"source", e.source}};
}

inline nlohmann::json counts_json(const InfractionCounts& c) {
  return {{"completion", c.completion},
          {"collisions", c.collisions},
          {"lane_deviations", c.lane_deviations},
          {"signal_violations", c.signal_violations}};
}

inline nlohmann::json driving_report(Task task, RunEnd end, const InfractionCounts& counts, std::uint64_t ticks,
                                     double t) {
  const TaskMode mode = score_mode(task);
  return {{"type", "report"},
          {"task", to_string(task)},
          {"mode", to_string(mode)},
          {"end", to_string(end)},
          {"aborted", end == RunEnd::Aborted},
          {"counts", counts_json(counts)},
          {"score", driving_score(counts, mode)},
          {"ticks", ticks},
          {"duration_ms", t}};
}

inline nlohmann::json record_header(const SessionConfig& cfg, const nlohmann::json& world) {
  return {{"type", "header"}, {"format", kRecordFormat}, {"config", to_json(cfg)}, {"world", world}};
}

/// A control frame as sent, with the cursor sample that produced it.
struct SentFrame {
  link::ControlFrame frame;
  CursorSample cursor;
};

class DrivingSession {
 public:
  DrivingSession(SessionConfig cfg, nlohmann::json world_doc,
                 std::optional<decoder::DecoderModels> models = std::nullopt)
      : cfg_(std::move(cfg)),
        world_doc_(std::move(world_doc)),
        world_(std::make_unique<WorldModel>(world_from_json(world_doc_))),
        link_(link::link_channels(cfg_.net.link)),
        op_(cfg_),
        veh_(cfg_, *world_) {
    if (!is_driving(cfg_.task)) throw ConfigError("not a driving task: " + std::string(to_string(cfg_.task)));
    if (cfg_.world.empty()) cfg_.world = world_doc_.value("name", std::string{"inline"});
    ScriptedDriver policy(*world_, cfg_.vehicle, cfg_.overlay, cfg_.detectors);
    if (cfg_.pilot.kind == PilotKind::Scripted) {
      scripted_.emplace(policy);
    } else if (cfg_.pilot.kind == PilotKind::Decoder) {
      const auto& dc = cfg_.pilot.decoder;
      decoder_.emplace(policy, dc, models ? std::move(*models) : calibrate_decoder(dc),
                       dc.seed * 2 + 3 + cfg_.seed * 1000003ULL);
    }
    record_.add(record_header(cfg_, world_doc_));
  }

  /// External operator commands (gateway buttons); applied at the next tick.
  void command(const std::string& kind) { pending_commands_.push_back(kind); }

  /// Cursor for the ui pilot; the click flag is consumed by the next tick.
  void set_ui_cursor(const CursorSample& c) {
    const bool click = ui_cursor_.click || c.click;
    ui_cursor_ = c;
    ui_cursor_.click = click;
  }

  bool finished() const { return end_ != RunEnd::Running; }
  RunEnd end() const { return end_; }

  void step() {
    if (finished()) return;
    ++k_;
    const double dt = cfg_.dt();
    const double t = static_cast<double>(k_) * dt;

    bool activation = false, epb = false;
    auto apply = [&](const ScheduledEvent& ev) {
      nlohmann::json j{{"type", "event"}, {"t", t}, {"kind", ev.kind}};
      if (ev.kind == "activate") activation = true;
      else if (ev.kind == "epb") epb = true;
      else if (ev.kind == "operator_brake") operator_brake_ = true;
      else if (ev.kind == "release_brake") operator_brake_ = false;
      else if (ev.kind == "impair") {
        if (ev.flow == "control") link_.control.set_impairment(ev.impairment);
        if (ev.flow == "state") link_.state.set_impairment(ev.impairment);
        if (ev.flow == "clock") {
          link_.clock_up.set_impairment(ev.impairment);
          link_.clock_down.set_impairment(ev.impairment);
        }
        j["flow"] = ev.flow;
        j["delay"] = ev.impairment.delay;
        j["jitter"] = ev.impairment.jitter;
        j["loss"] = ev.impairment.loss;
      }
      record_.add(j);
    };
    while (next_event_ < cfg_.events.size() && cfg_.events[next_event_].t <= t + 1e-9) apply(cfg_.events[next_event_++]);
    for (const auto& kind : pending_commands_) apply(ScheduledEvent{t, kind, "", {}});
    pending_commands_.clear();

    // Deliveries.
    const double vt = t + cfg_.net.clock_offset;
    ctrl_decoder_.feed(link_.control.receive(t));
    while (auto f = ctrl_decoder_.next()) veh_.on_control(*f);
    for (const auto& p : link_.clock_up.receive(t))
      link_.clock_down.send(link::encode_payload(veh_.on_probe(link::decode_payload_as<link::ClockProbe>(p), vt)), t);
    for (const auto& s : link_.state.receive(t)) op_.on_state(link::decode_payload_as<link::StateFrame>(s));
    for (const auto& c : link_.clock_down.receive(t))
      op_.on_clock_reply(link::decode_payload_as<link::ClockProbe>(c), t);

    // Operator.
    const double lag = op_.lag(t);
    const PilotObservation obs{t, op_.latest_state(), op_.control()};
    CursorSample cur{0.5, 0.5, false, t};
    if (scripted_) {
      const auto i = scripted_->decide(obs);
      cur = {i.x, i.y, i.click, t};
    } else if (decoder_) {
      const auto i = decoder_->decide(obs);
      cur = {i.x, i.y, i.click, t};
    } else {
      cur = ui_cursor_;
      cur.t = t;
      ui_cursor_.click = false;
    }
    const link::ControlFrame frame = op_.command(t, cur, dt);
    link_.control.send(link::encode_stream(frame), t);
    sent_.push_back(SentFrame{frame, cur});
    if (sent_.size() > kSentWindow) sent_.pop_front();
    if (auto probe = op_.maybe_probe(t)) link_.clock_up.send(link::encode_payload(*probe), t);

    // Vehicle.
    const auto vs = veh_.step(t, link::SafetyInputs{lag, epb, activation, operator_brake_}, static_cast<std::uint32_t>(k_));
    link_.state.send(link::encode_payload(vs.frame), t);

    const auto& v = veh_.vehicle();
    nlohmann::json tick{{"type", "tick"},
                        {"t", t},
                        {"cur", {cur.x, cur.y, cur.click}},
                        {"cmd", {frame.seq, frame.steering, frame.speed, frame.brake, frame.latency_est}},
                        {"rx", veh_.remote() ? veh_.remote()->seq : 0u},
                        {"lag", lag},
                        {"off", op_.offset()},
                        {"mode", to_string(veh_.safety().mode)},
                        {"veh", {v.x, v.y, v.heading, v.speed, v.wheel_angle}}};
    if (const auto& st = op_.latest_state()) tick["st"] = {st->seq, st->t_send};
    else tick["st"] = nullptr;
    record_.add(tick);
    for (const auto& e : vs.infractions) record_.add(infraction_json(e));

    t_ = t;
    const bool more = next_event_ < cfg_.events.size() || !pending_commands_.empty();
    end_ = veh_.status(t, more);
    if (end_ != RunEnd::Running) record_.add(report());
  }

  /// Runs to completion and returns the record.
  const RunRecord& run() {
    while (!finished()) step();
    return record_;
  }

  /// Ends an open-ended (gateway) run early.
  void stop() {
    if (finished()) return;
    end_ = RunEnd::Timeout;
    record_.add(report());
  }

  nlohmann::json report() const {
    return driving_report(cfg_.task, end_ == RunEnd::Running ? RunEnd::Timeout : end_, veh_.counts(), k_, t_);
  }

  const RunRecord& record() const { return record_; }
  const SessionConfig& config() const { return cfg_; }
  const WorldModel& world() const { return *world_; }
  const nlohmann::json& world_document() const { return world_doc_; }
  const OperatorStation& operator_station() const { return op_; }
  const VehicleNode& vehicle_node() const { return veh_; }
  const std::deque<SentFrame>& sent_frames() const { return sent_; }
  double time() const { return t_; }
  std::uint64_t ticks() const { return k_; }
  const DecoderDriver* decoder_driver() const { return decoder_ ? &*decoder_ : nullptr; }

 private:
  static constexpr std::size_t kSentWindow = 4096;

  SessionConfig cfg_;
  nlohmann::json world_doc_;
  std::unique_ptr<WorldModel> world_;
  link::LinkChannels link_;
  link::StreamDecoder ctrl_decoder_;
  OperatorStation op_;
  VehicleNode veh_;
  std::optional<ScriptedDriver> scripted_;
  std::optional<DecoderDriver> decoder_;
  CursorSample ui_cursor_{};
  std::vector<std::string> pending_commands_;
  std::deque<SentFrame> sent_;
  RunRecord record_;
  std::size_t next_event_{0};
  bool operator_brake_{false};
  std::uint64_t k_{0};
  double t_{0};
  RunEnd end_{RunEnd::Running};
};

}  // namespace teledrive::session
