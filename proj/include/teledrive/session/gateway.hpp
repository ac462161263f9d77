#pragma once

// UI gateway: a real-time driving session with the ui pilot, re-exported over
// HTTP as versioned JSON messages. The browser never sees the wire protocol;
// it posts cursor input and commands and reads snapshots (poll or SSE).
//
//   GET  /api/v1/schema            message schema
//   GET  /api/v1/snapshot          latest snapshot
//   GET  /api/v1/world             world document + overlay geometry
//   GET  /api/v1/frames?since=N    control frames with seq > N, with their cursor
//   GET  /api/v1/stream            snapshots as server-sent events
//   POST /api/v1/input             {"schema","type":"input","x","y","click"}
//   POST /api/v1/command           {"schema","type":"command","action"}

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <json.hpp>

// Before httplib: <resolv.h> defines a _res macro that breaks Eigen's headers.
#include "teledrive/session/driving.hpp"

#include <httplib.h>

namespace teledrive::session {

inline constexpr const char* kGatewaySchema = "teledrive-gateway/1";
inline constexpr double kInputQuantum = 1.0 / 2048.0;

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cursor coordinates travel as multiples of 1/2048, clamped to [0,1].
inline double quantize_input(double v) {
  if (!std::isfinite(v)) throw GatewayError("input coordinate is not finite");
  return std::round(std::clamp(v, 0.0, 1.0) * 2048.0) * kInputQuantum;
}

inline nlohmann::json control_frame_json(const link::ControlFrame& f) {
  return {{"seq", f.seq},           {"t_send", f.t_send}, {"steering", f.steering},
          {"speed", f.speed},       {"brake", f.brake},   {"latency_est", f.latency_est}};
}

inline nlohmann::json state_frame_json(const link::StateFrame& f) {
  return {{"seq", f.seq},     {"t_send", f.t_send},           {"speed", f.speed},
          {"wheel_angle", f.wheel_angle}, {"mode", to_string(f.mode)}, {"epb", f.epb},
          {"x", f.x},         {"y", f.y},                     {"heading", f.heading}};
}

inline nlohmann::json overlay_geometry_json(const OverlayGeometry& g) {
  return {{"left_hot", g.left_hot},
          {"right_hot", g.right_hot},
          {"top_hot", g.top_hot},
          {"bottom_hot", g.bottom_hot},
          {"cold_half_width", g.cold_half_width}};
}

inline nlohmann::json gateway_schema() {
  using nlohmann::json;
  return {{"schema", kGatewaySchema},
          {"input_quantum", kInputQuantum},
          {"messages",
           {{"snapshot",
             {{"direction", "gateway->ui"},
              {"fields", json::array({"schema", "type", "t", "tick", "control", "state", "cursor", "overlay", "lag",
                                      "mode", "run"})}}},
            {"control_frame",
             {{"direction", "gateway->ui"},
              {"fields", json::array({"seq", "t_send", "steering", "speed", "brake", "latency_est", "cursor"})}}},
            {"state_frame",
             {{"direction", "gateway->ui"},
              {"fields",
               json::array({"seq", "t_send", "speed", "wheel_angle", "mode", "epb", "x", "y", "heading"})}}},
            {"input", {{"direction", "ui->gateway"}, {"fields", json::array({"schema", "type", "x", "y", "click"})}}},
            {"command",
             {{"direction", "ui->gateway"},
              {"fields", json::array({"schema", "type", "action"})},
              {"actions", json::array({"activate", "epb", "operator_brake", "release_brake", "stop", "restart"})}}}}}};
}

namespace gateway_detail {

inline void check_envelope(const nlohmann::json& j, const char* type) {
  if (!j.is_object()) throw GatewayError("message must be an object");
  if (j.value("schema", "") != kGatewaySchema)
    throw GatewayError(std::string("unsupported schema, expected ") + kGatewaySchema);
  if (j.value("type", "") != type) throw GatewayError(std::string("expected a '") + type + "' message");
}

}  // namespace gateway_detail

inline CursorSample parse_gateway_input(const nlohmann::json& j) {
  gateway_detail::check_envelope(j, "input");
  try {
    return CursorSample{quantize_input(j.at("x").get<double>()), quantize_input(j.at("y").get<double>()),
                        j.value("click", false), 0.0};
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("bad input message: ") + e.what());
  }
}

inline std::string parse_gateway_command(const nlohmann::json& j) {
  gateway_detail::check_envelope(j, "command");
  const std::string a = j.value("action", "");
  for (const char* ok : {"activate", "epb", "operator_brake", "release_brake", "stop", "restart"})
    if (a == ok) return a;
  throw GatewayError("unknown command action '" + a + "'");
}

inline nlohmann::json gateway_snapshot(const DrivingSession& s) {
  using nlohmann::json;
  const auto& op = s.operator_station();
  const auto& veh = s.vehicle_node();
  const auto& cfg = s.config();
  const double lag = op.lag(s.time());
  json j{{"schema", kGatewaySchema}, {"type", "snapshot"}, {"t", s.time()}, {"tick", s.ticks()}};
  if (s.sent_frames().empty()) {
    j["control"] = nullptr;
    j["cursor"] = nullptr;
  } else {
    const auto& last = s.sent_frames().back();
    j["control"] = control_frame_json(last.frame);
    j["cursor"] = {{"x", last.cursor.x}, {"y", last.cursor.y}, {"click", last.cursor.click}};
  }
  // The ui draws the vehicle from what the operator received, never the truth.
  j["state"] = op.latest_state() ? state_frame_json(*op.latest_state()) : json(nullptr);
  const auto& c = op.control();
  j["overlay"] = {{"steering_cmd", c.steering_cmd},
                  {"speed_cmd", c.speed_cmd},
                  {"brake_hold_remaining", c.brake_hold_remaining},
                  {"brake_active", c.brake_hold_remaining > 0},
                  {"geometry", overlay_geometry_json(cfg.overlay)}};
  j["lag"] = {{"ms", lag}, {"threshold", cfg.net.lag_threshold}, {"critical", lag > cfg.net.lag_threshold}};
  j["mode"] = to_string(veh.safety().mode);
  j["run"] = {{"end", to_string(s.end())},
              {"completion", veh.completion()},
              {"counts", counts_json(veh.counts())},
              {"score", driving_score(veh.counts(), score_mode(cfg.task))}};
  return j;
}

struct GatewayOptions {
  std::string host{"127.0.0.1"};
  int port{8080};  // 0 picks a free port
  std::string web_root;
  double time_scale{1.0};
  std::string record_path;  // written when the gateway stops
};

class GatewayServer {
 public:
  GatewayServer(SessionConfig cfg, nlohmann::json world_doc, GatewayOptions opt)
      : cfg_(std::move(cfg)), world_doc_(std::move(world_doc)), opt_(std::move(opt)) {
    if (cfg_.pilot.kind != PilotKind::Ui) throw ConfigError("ui-gateway needs pilot.kind = ui");
    if (!(opt_.time_scale > 0)) throw ConfigError("time scale must be positive");
    session_ = std::make_unique<DrivingSession>(cfg_, world_doc_);
    routes();
  }

  ~GatewayServer() { stop(); }

  /// Binds and starts the tick and HTTP threads; returns the bound port.
  int start() {
    if (opt_.port == 0) {
      port_ = http_.bind_to_any_port(opt_.host);
    } else if (http_.bind_to_port(opt_.host, opt_.port)) {
      port_ = opt_.port;
    }
    if (port_ <= 0) throw GatewayError("cannot bind " + opt_.host + ":" + std::to_string(opt_.port));
    running_ = true;
    ticker_ = std::thread([this] { tick_loop(); });
    listener_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (!running_.exchange(false)) return;
    http_.stop();
    if (listener_.joinable()) listener_.join();
    if (ticker_.joinable()) ticker_.join();
    std::lock_guard lk(mu_);
    session_->stop();
    if (!opt_.record_path.empty()) save_record(session_->record(), opt_.record_path);
  }

  /// Blocks until the run ends or stop() is called elsewhere.
  void wait() {
    while (running_) {
      {
        std::lock_guard lk(mu_);
        if (session_->finished() && !keep_open_) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  /// Keeps serving the frozen final snapshot after the run ends.
  void keep_open(bool v) { keep_open_ = v; }

  int port() const { return port_; }

  template <class F>
  auto with_session(F&& f) {
    std::lock_guard lk(mu_);
    return f(*session_);
  }

 private:
  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration<double, std::milli>(cfg_.dt() / opt_.time_scale);
    auto next = clock::now();
    while (running_) {
      next += std::chrono::duration_cast<clock::duration>(period);
      std::this_thread::sleep_until(next);
      std::lock_guard lk(mu_);
      if (!session_->finished()) session_->step();
    }
  }

  static void reply(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void reply_error(httplib::Response& res, int status, const std::string& msg) {
    reply(res, {{"schema", kGatewaySchema}, {"type", "error"}, {"error", msg}}, status);
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const GatewayError& e) {
      reply_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
  }

  void routes() {
    http_.Get("/api/v1/schema", [](const httplib::Request&, httplib::Response& res) { reply(res, gateway_schema()); });

    http_.Get("/api/v1/snapshot", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lk(mu_);
      reply(res, gateway_snapshot(*session_));
    });

    http_.Get("/api/v1/world", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, {{"schema", kGatewaySchema},
                  {"type", "world"},
                  {"world", world_doc_},
                  {"overlay", overlay_geometry_json(cfg_.overlay)},
                  {"lag_threshold", cfg_.net.lag_threshold},
                  {"tick_rate", cfg_.tick_rate}});
    });

    http_.Get("/api/v1/frames", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::uint32_t since = 0;
        if (req.has_param("since")) {
          const std::string v = req.get_param_value("since");
          auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), since);
          if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
            throw GatewayError("since must be a non-negative integer");
        }
        nlohmann::json frames = nlohmann::json::array();
        std::lock_guard lk(mu_);
        for (const auto& s : session_->sent_frames()) {
          if (s.frame.seq <= since) continue;
          auto f = control_frame_json(s.frame);
          f["cursor"] = {{"x", s.cursor.x}, {"y", s.cursor.y}, {"click", s.cursor.click}};
          frames.push_back(std::move(f));
        }
        reply(res, {{"schema", kGatewaySchema}, {"type", "frames"}, {"frames", std::move(frames)}});
      });
    });

    http_.Get("/api/v1/stream", [this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this](std::size_t, httplib::DataSink& sink) {
        std::uint64_t last = ~0ULL;
        while (running_ && sink.is_writable()) {
          std::string msg;
          {
            std::lock_guard lk(mu_);
            if (session_->ticks() != last) {
              last = session_->ticks();
              msg = "event: snapshot\ndata: " + gateway_snapshot(*session_).dump() + "\n\n";
            }
          }
          if (!msg.empty() && !sink.write(msg.data(), msg.size())) return false;
          std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        sink.done();
        return true;
      });
    });

    http_.Post("/api/v1/input", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const CursorSample c = parse_gateway_input(nlohmann::json::parse(req.body));
        std::lock_guard lk(mu_);
        session_->set_ui_cursor(c);
        reply(res, {{"schema", kGatewaySchema}, {"type", "ack"}, {"x", c.x}, {"y", c.y}, {"click", c.click}});
      });
    });

    http_.Post("/api/v1/command", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string action = parse_gateway_command(nlohmann::json::parse(req.body));
        std::lock_guard lk(mu_);
        if (action == "stop") {
          session_->stop();
        } else if (action == "restart") {
          session_ = std::make_unique<DrivingSession>(cfg_, world_doc_);
        } else {
          session_->command(action);
        }
        reply(res, {{"schema", kGatewaySchema}, {"type", "ack"}, {"action", action}});
      });
    });

    if (!opt_.web_root.empty()) {
      if (!std::filesystem::is_directory(opt_.web_root)) throw ConfigError("web root is not a directory: " + opt_.web_root);
      http_.set_mount_point("/", opt_.web_root);
    } else {
      http_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "<!doctype html><title>teledrive gateway</title>"
            "<p>No web bundle mounted. Pass --web-root to serve the operator ui; the JSON API lives under /api/v1.</p>",
            "text/html");
      });
    }
  }

  SessionConfig cfg_;
  nlohmann::json world_doc_;
  GatewayOptions opt_;
  std::unique_ptr<DrivingSession> session_;
  std::mutex mu_;
  httplib::Server http_;
  std::thread ticker_, listener_;
  std::atomic<bool> running_{false};
  std::atomic<bool> keep_open_{false};
  int port_{-1};
};

}  // namespace teledrive::session
