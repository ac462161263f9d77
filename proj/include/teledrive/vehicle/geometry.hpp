#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace teledrive::geom {

struct Vec2 {
  double x{0};
  double y{0};

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 heading_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }
inline Vec2 left_normal(Vec2 d) { return {-d.y, d.x}; }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

struct Projection {
  double s{0};         // arc length of the closest point
  double distance{0};  // unsigned distance to the polyline
  double lateral{0};   // signed offset, positive to the left of travel
  Vec2 point;
};

/// Polyline with cumulative arc length.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts) : points_(std::move(pts)) {
    if (points_.size() < 2) throw std::invalid_argument("polyline needs at least two points");
    cumulative_.resize(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] + norm(points_[i] - points_[i - 1]);
    if (!(length() > 0)) throw std::invalid_argument("polyline has zero length");
  }

  const std::vector<Vec2>& points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  double s_at(std::size_t i) const { return cumulative_[i]; }

  Vec2 point_at(double s) const {
    const auto [i, u] = locate(s);
    return points_[i] + (points_[i + 1] - points_[i]) * u;
  }

  double heading_at(double s) const {
    const auto [i, u] = locate(s);
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
  }

  /// Closest point restricted to arc lengths within [s_lo, s_hi].
  Projection project(Vec2 p, double s_lo = -std::numeric_limits<double>::infinity(),
                     double s_hi = std::numeric_limits<double>::infinity()) const {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const double a = cumulative_[i], b = cumulative_[i + 1];
      if (b < s_lo || a > s_hi) continue;
      const Vec2 d = points_[i + 1] - points_[i];
      const double len2 = dot(d, d);
      if (len2 <= 0) continue;
      double u = std::clamp(dot(p - points_[i], d) / len2, 0.0, 1.0);
      const double seg_len = b - a;
      const double u_lo = std::clamp((s_lo - a) / seg_len, 0.0, 1.0);
      const double u_hi = std::clamp((s_hi - a) / seg_len, 0.0, 1.0);
      u = std::clamp(u, u_lo, u_hi);
      const Vec2 q = points_[i] + d * u;
      const double dist = norm(p - q);
      if (dist < best.distance) {
        best.distance = dist;
        best.s = a + u * seg_len;
        best.point = q;
        best.lateral = cross(d, p - q) >= 0 ? dist : -dist;
      }
    }
    return best;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    i = std::min(i, points_.size() - 2);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    return {i, seg > 0 ? (s - cumulative_[i]) / seg : 0.0};
  }

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

/// Proper or touching intersection of segments ab and cd.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
  auto on_seg = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  if (o1 == 0 && on_seg(a, c, b)) return true;
  if (o2 == 0 && on_seg(a, d, b)) return true;
  if (o3 == 0 && on_seg(c, a, d)) return true;
  if (o4 == 0 && on_seg(c, b, d)) return true;
  return false;
}

using Polygon = std::vector<Vec2>;

inline double signed_area(const Polygon& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline bool point_in_polygon(const Polygon& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

/// Separating-axis test for two convex polygons.
inline bool convex_intersect(const Polygon& a, const Polygon& b) {
  auto separated_on_edges = [](const Polygon& p, const Polygon& q) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Vec2 e = p[(i + 1) % p.size()] - p[i];
      const Vec2 axis = left_normal(e);
      double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
      double qmin = pmin, qmax = -pmin;
      for (const Vec2& v : p) {
        const double d = dot(v, axis);
        pmin = std::min(pmin, d);
        pmax = std::max(pmax, d);
      }
      for (const Vec2& v : q) {
        const double d = dot(v, axis);
        qmin = std::min(qmin, d);
        qmax = std::max(qmax, d);
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !separated_on_edges(a, b) && !separated_on_edges(b, a);
}

/// Oriented rectangle: `rear_overhang` behind and `front_extent` ahead of `origin` along heading.
inline Polygon oriented_box(Vec2 origin, double heading, double rear_extent, double front_extent, double half_width) {
  const Vec2 f = heading_vector(heading);
  const Vec2 l = left_normal(f);
  return {origin - f * rear_extent - l * half_width, origin + f * front_extent - l * half_width,
          origin + f * front_extent + l * half_width, origin - f * rear_extent + l * half_width};
}

}  // namespace teledrive::geom
