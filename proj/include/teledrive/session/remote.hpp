#pragma once

// The two link ends as separate processes over real sockets: control frames on
// TCP, state frames and clock probes on UDP. Each side ticks on its own wall
// clock, so the clock offset the pilot estimates is real.
//
// The vehicle supervisor cannot see the pilot's state-frame age here; it uses
// the age of the newest control frame it received instead.

#include <chrono>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "teledrive/link/codec.hpp"
#include "teledrive/link/socket.hpp"
#include "teledrive/session/driving.hpp"

namespace teledrive::session {

struct RemoteOptions {
  std::string host{"127.0.0.1"};
  int control_port{47100};
  int state_port{47101};
  double time_scale{1.0};
  int connect_timeout_ms{10000};
  std::ostream* log{nullptr};
};

namespace remote_detail {

/// Fixed-rate tick schedule on the wall clock, scaled.
class Ticker {
 public:
  Ticker(double dt_ms, double scale)
      : period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double, std::milli>(dt_ms / scale))),
        next_(std::chrono::steady_clock::now()) {}
  void wait() {
    next_ += period_;
    std::this_thread::sleep_until(next_);
  }

 private:
  std::chrono::steady_clock::duration period_;
  std::chrono::steady_clock::time_point next_;
};

inline void check_options(const RemoteOptions& o) {
  if (!(o.time_scale > 0)) throw ConfigError("time scale must be positive");
}

}  // namespace remote_detail

/// Vehicle side. Returns the driving report once the run ends or the pilot hangs up.
inline nlohmann::json serve_vehicle(const SessionConfig& cfg, const nlohmann::json& world_doc, const RemoteOptions& opt) {
  remote_detail::check_options(opt);
  const WorldModel world = world_from_json(world_doc);
  VehicleNode veh(cfg, world);
  link::TcpListener listener(opt.host, opt.control_port);
  link::UdpSocket udp = link::UdpSocket::bind(opt.host, opt.state_port);
  if (opt.log) *opt.log << "vehicle: waiting for a pilot on " << opt.host << ":" << listener.port() << std::endl;
  auto conn = listener.accept(opt.connect_timeout_ms);
  if (!conn) throw link::SocketError("no pilot connected within the timeout");
  if (opt.log) *opt.log << "vehicle: pilot connected" << std::endl;

  link::StreamDecoder decoder;
  remote_detail::Ticker ticker(cfg.dt(), opt.time_scale);
  std::size_t next_event = 0;
  bool operator_brake = false;
  std::optional<double> last_rx;
  std::uint64_t k = 0;
  double t = 0;
  RunEnd end = RunEnd::Running;
  bool hung_up = false;
  while (end == RunEnd::Running) {
    ticker.wait();
    ++k;
    t = static_cast<double>(k) * cfg.dt();
    const double vt = t + cfg.net.clock_offset;

    bool activation = false, epb = false;
    while (next_event < cfg.events.size() && cfg.events[next_event].t <= t + 1e-9) {
      const auto& ev = cfg.events[next_event++];
      if (ev.kind == "activate") activation = true;
      else if (ev.kind == "epb") epb = true;
      else if (ev.kind == "operator_brake") operator_brake = true;
      else if (ev.kind == "release_brake") operator_brake = false;
    }

    decoder.feed(conn->receive());
    while (auto f = decoder.next()) {
      veh.on_control(*f);
      last_rx = t;
    }
    if (conn->closed()) {
      hung_up = true;
      break;
    }
    for (const auto& d : udp.receive()) {
      try {
        const auto frame = link::decode_payload(d);
        if (const auto* p = std::get_if<link::ClockProbe>(&frame))
          udp.send(link::encode_payload(veh.on_probe(*p, vt)));
      } catch (const link::ParseError&) {
        // A garbled datagram is dropped, as the link would.
      }
    }

    const double lag = last_rx ? t - *last_rx : t;
    const auto s = veh.step(t, link::SafetyInputs{lag, epb, activation, operator_brake}, static_cast<std::uint32_t>(k));
    udp.send(link::encode_payload(s.frame));
    if (opt.log && s.mode_changed) *opt.log << "vehicle: t=" << t << " mode " << to_string(veh.safety().mode) << std::endl;
    end = veh.status(t, next_event < cfg.events.size());
  }
  conn->close();
  auto report = driving_report(cfg.task, end == RunEnd::Running ? RunEnd::Timeout : end, veh.counts(), k, t);
  report["pilot_hung_up"] = hung_up;
  return report;
}

/// Pilot side. Returns a link summary once the vehicle closes the control stream.
inline nlohmann::json run_pilot(const SessionConfig& cfg, const nlohmann::json& world_doc,
                                std::optional<decoder::DecoderModels> models, const RemoteOptions& opt) {
  remote_detail::check_options(opt);
  if (cfg.pilot.kind == PilotKind::Ui) throw ConfigError("the pilot subcommand drives with a scripted or decoder pilot");
  const WorldModel world = world_from_json(world_doc);
  ScriptedDriver policy(world, cfg.vehicle, cfg.overlay, cfg.detectors);
  std::optional<ScriptedDriver> scripted;
  std::optional<DecoderDriver> decoder_pilot;
  if (cfg.pilot.kind == PilotKind::Scripted) {
    scripted.emplace(policy);
  } else {
    const auto& dc = cfg.pilot.decoder;
    decoder_pilot.emplace(policy, dc, models ? std::move(*models) : calibrate_decoder(dc),
                          dc.seed * 2 + 3 + cfg.seed * 1000003ULL);
  }

  std::optional<link::TcpStream> conn;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(opt.connect_timeout_ms);
  while (!conn) {
    try {
      conn = link::TcpStream::connect(opt.host, opt.control_port);
    } catch (const link::SocketError&) {
      if (std::chrono::steady_clock::now() > deadline) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  link::UdpSocket udp = link::UdpSocket::connect(opt.host, opt.state_port);
  if (opt.log) *opt.log << "pilot: connected to " << opt.host << ":" << opt.control_port << std::endl;

  OperatorStation op(cfg);
  remote_detail::Ticker ticker(cfg.dt(), opt.time_scale);
  std::uint64_t k = 0, states = 0, replies = 0;
  double t = 0, lag = 0;
  const double limit = cfg.max_duration + 10000.0;
  while (t < limit) {
    ticker.wait();
    ++k;
    t = static_cast<double>(k) * cfg.dt();
    for (const auto& d : udp.receive()) {
      try {
        const auto frame = link::decode_payload(d);
        if (const auto* s = std::get_if<link::StateFrame>(&frame)) {
          op.on_state(*s);
          ++states;
        } else if (const auto* p = std::get_if<link::ClockProbe>(&frame)) {
          op.on_clock_reply(*p, t);
          ++replies;
        }
      } catch (const link::ParseError&) {
      }
    }
    lag = op.lag(t);
    const PilotObservation obs{t, op.latest_state(), op.control()};
    const CursorIntent i = scripted ? scripted->decide(obs) : decoder_pilot->decide(obs);
    const auto frame = op.command(t, CursorSample{i.x, i.y, i.click, t}, cfg.dt());
    if (auto probe = op.maybe_probe(t)) udp.send(link::encode_payload(*probe));
    conn->receive();
    if (conn->closed() || !conn->send_all(link::encode_stream(frame))) break;
  }
  nlohmann::json out{{"type", "pilot_summary"},
                     {"frames_sent", op.seq()},
                     {"states_received", states},
                     {"clock_replies", replies},
                     {"offset_estimate", op.offset()},
                     {"last_lag", lag},
                     {"duration_ms", t}};
  out["last_state"] = op.latest_state() ? nlohmann::json{{"seq", op.latest_state()->seq},
                                                         {"speed", op.latest_state()->speed},
                                                         {"mode", to_string(op.latest_state()->mode)}}
                                        : nlohmann::json(nullptr);
  return out;
}

}  // namespace teledrive::session
