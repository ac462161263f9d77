#pragma once

// World model: lanes, the route to drive, obstacles, stop signs and traffic
// lights, plus the structured-text world-file loader.
//
// World files may place features relative to the route ("route_s" arc length
// plus lateral "offset", positive to the left), and describe polylines either
// as explicit points or as a turtle path of straights, arcs and lane changes.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "teledrive/vehicle/geometry.hpp"

namespace teledrive {

struct WorldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Lane {
  std::string id;
  geom::Polyline centerline;
  double width{3.5};
};

struct Route {
  geom::Polyline path;
  double corridor{3.0};  // m, half-width of the on-route corridor

  double length() const { return path.length(); }
};

struct Obstacle {
  std::string id;
  geom::Polygon polygon;
};

struct StopSign {
  std::string id;
  geom::Vec2 line_a, line_b;
  geom::Polygon approach;
  geom::Vec2 travel_dir;  // unit vector; crossings count only in this direction
  double route_s{0};
};

enum class LightPhase { Green, Yellow, Red };

inline const char* to_string(LightPhase p) {
  switch (p) {
    case LightPhase::Green: return "green";
    case LightPhase::Yellow: return "yellow";
    case LightPhase::Red: return "red";
  }
  return "?";
}

struct PhaseSchedule {
  double green{10000}, yellow{3000}, red{10000}, offset{0};  // ms

  double cycle() const { return green + yellow + red; }

  LightPhase phase_at(double t_ms) const {
    double u = std::fmod(t_ms + offset, cycle());
    if (u < 0) u += cycle();
    if (u < green) return LightPhase::Green;
    if (u < green + yellow) return LightPhase::Yellow;
    return LightPhase::Red;
  }

  /// Milliseconds until the current phase ends.
  double remaining(double t_ms) const {
    double u = std::fmod(t_ms + offset, cycle());
    if (u < 0) u += cycle();
    if (u < green) return green - u;
    if (u < green + yellow) return green + yellow - u;
    return cycle() - u;
  }
};

struct TrafficLight {
  std::string id;
  geom::Vec2 line_a, line_b;
  geom::Polygon approach;
  geom::Vec2 travel_dir;
  double route_s{0};
  PhaseSchedule schedule;
};

struct WorldModel {
  std::string name;
  std::vector<Lane> lanes;
  Route route;
  std::vector<Obstacle> obstacles;
  std::vector<StopSign> stop_signs;
  std::vector<TrafficLight> traffic_lights;
};

namespace world_detail {

using nlohmann::json;

inline geom::Vec2 vec(const json& j) {
  if (!j.is_array() || j.size() != 2) throw WorldError("expected [x, y] point, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

inline constexpr double kSampleStep = 0.5;

inline std::vector<geom::Vec2> turtle_path(const json& j) {
  geom::Vec2 p = vec(j.at("start"));
  double h = geom::deg2rad(j.value("heading_deg", 0.0));
  std::vector<geom::Vec2> pts{p};
  for (const auto& seg : j.at("segments")) {
    if (seg.contains("straight")) {
      const double len = seg["straight"].get<double>();
      if (!(len > 0)) throw WorldError("straight segment must have positive length");
      const int n = std::max(1, static_cast<int>(std::ceil(len / kSampleStep)));
      const geom::Vec2 d = geom::heading_vector(h);
      const geom::Vec2 p0 = p;
      for (int i = 1; i <= n; ++i) pts.push_back(p0 + d * (len * i / n));
      p = pts.back();
    } else if (seg.contains("arc")) {
      const double r = seg["arc"].at("radius").get<double>();
      const double turn = geom::deg2rad(seg["arc"].at("turn_deg").get<double>());
      if (!(r > 0) || turn == 0) throw WorldError("arc needs positive radius and non-zero turn");
      const double sign = turn > 0 ? 1.0 : -1.0;
      const geom::Vec2 center = p + geom::left_normal(geom::heading_vector(h)) * (sign * r);
      const int n = std::max(2, static_cast<int>(std::ceil(std::abs(turn) * r / kSampleStep)));
      const double h0 = h;
      for (int i = 1; i <= n; ++i) {
        const double hi = h0 + turn * i / n;
        pts.push_back(center - geom::left_normal(geom::heading_vector(hi)) * (sign * r));
      }
      h = h0 + turn;
      p = pts.back();
    } else if (seg.contains("lane_change")) {
      const double off = seg["lane_change"].at("offset").get<double>();
      const double len = seg["lane_change"].at("length").get<double>();
      if (!(len > 0)) throw WorldError("lane_change needs positive length");
      const int n = std::max(2, static_cast<int>(std::ceil(len / kSampleStep)));
      const geom::Vec2 d = geom::heading_vector(h);
      const geom::Vec2 l = geom::left_normal(d);
      const geom::Vec2 p0 = p;
      for (int i = 1; i <= n; ++i) {
        const double u = static_cast<double>(i) / n;
        const double lat = off * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
        pts.push_back(p0 + d * (len * u) + l * lat);
      }
      p = pts.back();
    } else {
      throw WorldError("unknown path segment: " + seg.dump());
    }
  }
  return pts;
}

inline geom::Polyline path(const json& j) {
  std::vector<geom::Vec2> pts;
  if (j.contains("points")) {
    for (const auto& q : j["points"]) pts.push_back(vec(q));
  } else if (j.contains("segments")) {
    pts = turtle_path(j);
  } else {
    throw WorldError("path needs 'points' or 'segments'");
  }
  try {
    return geom::Polyline(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw WorldError(std::string("bad path: ") + e.what());
  }
}

inline geom::Polygon polygon(const json& j) {
  geom::Polygon poly;
  for (const auto& q : j) poly.push_back(vec(q));
  if (poly.size() < 3 || std::abs(geom::signed_area(poly)) < 1e-9) throw WorldError("degenerate polygon");
  return poly;
}

// Band polygon covering the route between s0 and s1, +-half_width laterally.
inline geom::Polygon route_band(const geom::Polyline& route, double s0, double s1, double half_width) {
  s0 = std::max(0.0, s0);
  s1 = std::min(route.length(), s1);
  const int n = std::max(1, static_cast<int>(std::ceil((s1 - s0) / kSampleStep)));
  std::vector<geom::Vec2> left, right;
  for (int i = 0; i <= n; ++i) {
    const double s = s0 + (s1 - s0) * i / n;
    const geom::Vec2 c = route.point_at(s);
    const geom::Vec2 nrm = geom::left_normal(geom::heading_vector(route.heading_at(s)));
    left.push_back(c + nrm * half_width);
    right.push_back(c - nrm * half_width);
  }
  geom::Polygon poly(right.begin(), right.end());
  poly.insert(poly.end(), left.rbegin(), left.rend());
  return poly;
}

struct LinePlacement {
  geom::Vec2 a, b, dir;
  geom::Polygon approach;
  double s;
};

inline LinePlacement line_on_route(const json& j, const geom::Polyline& route) {
  const double s = j.at("route_s").get<double>();
  if (s < 0 || s > route.length()) throw WorldError("route_s out of range: " + std::to_string(s));
  const double hw = j.value("half_width", 2.0);
  const double approach = j.value("approach", 12.0);
  const geom::Vec2 c = route.point_at(s);
  const geom::Vec2 d = geom::heading_vector(route.heading_at(s));
  const geom::Vec2 n = geom::left_normal(d);
  return {c - n * hw, c + n * hw, d, route_band(route, s - approach, s, hw), s};
}

}  // namespace world_detail

/// Builds a world from its structured-text description.
inline WorldModel world_from_json(const nlohmann::json& j) {
  using namespace world_detail;
  WorldModel w;
  try {
    if (j.value("version", 1) != 1) throw WorldError("unsupported world version");
    w.name = j.value("name", std::string{"world"});
    w.route.path = path(j.at("route").at("path"));
    w.route.corridor = j["route"].value("corridor", 3.0);
    if (!(w.route.corridor > 0)) throw WorldError("route corridor must be positive");
    const geom::Polyline& route = w.route.path;

    if (j.contains("lanes")) {
      for (const auto& lj : j["lanes"]) {
        Lane lane;
        lane.id = lj.value("id", "lane" + std::to_string(w.lanes.size()));
        lane.width = lj.value("width", 3.5);
        lane.centerline = lj.value("from_route", false) ? route : path(lj.at("path"));
        if (!(lane.width > 0)) throw WorldError("lane width must be positive");
        w.lanes.push_back(std::move(lane));
      }
    } else {
      w.lanes.push_back({"route", route, j.value("lane_width", 3.5)});
    }

    for (const auto& oj : j.value("obstacles", json::array())) {
      Obstacle o;
      o.id = oj.value("id", "obstacle" + std::to_string(w.obstacles.size()));
      if (oj.contains("polygon")) {
        o.polygon = polygon(oj["polygon"]);
      } else {
        const double s = oj.at("route_s").get<double>();
        const double off = oj.value("offset", 0.0);
        const auto size = oj.value("size", std::vector<double>{0.5, 0.5});
        if (size.size() != 2 || !(size[0] > 0) || !(size[1] > 0)) throw WorldError("bad obstacle size");
        const double h = route.heading_at(s);
        const geom::Vec2 c = route.point_at(s) + geom::left_normal(geom::heading_vector(h)) * off;
        o.polygon = geom::oriented_box(c, h, size[0] / 2, size[0] / 2, size[1] / 2);
      }
      w.obstacles.push_back(std::move(o));
    }

    for (const auto& sj : j.value("stop_signs", json::array())) {
      const auto pl = line_on_route(sj, route);
      w.stop_signs.push_back({sj.value("id", "stop" + std::to_string(w.stop_signs.size())), pl.a, pl.b,
                              pl.approach, pl.dir, pl.s});
    }

    for (const auto& tj : j.value("traffic_lights", json::array())) {
      const auto pl = line_on_route(tj, route);
      PhaseSchedule ps;
      const auto& ph = tj.at("phases");
      ps.green = ph.at("green").get<double>();
      ps.yellow = ph.at("yellow").get<double>();
      ps.red = ph.at("red").get<double>();
      ps.offset = ph.value("offset", 0.0);
      if (!(ps.green > 0) || ps.yellow < 0 || !(ps.red > 0)) throw WorldError("bad light phases");
      w.traffic_lights.push_back({tj.value("id", "light" + std::to_string(w.traffic_lights.size())), pl.a, pl.b,
                                  pl.approach, pl.dir, pl.s, ps});
    }
  } catch (const nlohmann::json::exception& e) {
    throw WorldError(std::string("world file: ") + e.what());
  }
  return w;
}

inline WorldModel load_world(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw WorldError("cannot open world file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw WorldError("world file " + file.string() + ": " + e.what());
  }
  return world_from_json(j);
}

}  // namespace teledrive
