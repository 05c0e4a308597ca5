#pragma once

// Planar world geometry: poses, routes built from line and arc segments,
// landmark maps and cross-track error.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace agrisim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Route continuity / on-circle tolerance in meters.
inline constexpr double kRouteTolerance = 1e-6;

/// Wraps an angle into (-pi, pi]. Throws on non-finite input.
inline double normalize_angle(double theta)
{
  if (!std::isfinite(theta)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  double r = std::remainder(theta, kTwoPi);
  // remainder() can land a few ulps on either side of -pi for inputs that are
  // odd multiples of pi; the convention maps that boundary to +pi.
  if (r <= -kPi + 8.0 * std::numeric_limits<double>::epsilon() * kPi) {
    r += kTwoPi;
  }
  return std::min(r, kPi);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

using Waypoint = Vec2;

/// Vehicle pose in the global frame. psi is CCW-positive and kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

inline Pose2D make_pose(double x, double y, double psi)
{
  return {x, y, normalize_angle(psi)};
}

enum class SegmentKind { Line, Arc };
enum class TurnDirection { Ccw, Cw };

/// Point on a segment closest to a query point.
struct SegmentProjection {
  double distance = 0.0;  // unsigned distance to the segment
  double along = 0.0;     // arc length from segment start to the closest point
};

struct RouteSegment {
  SegmentKind kind = SegmentKind::Line;
  Vec2 start;
  Vec2 end;
  double radius = 0.0;                        // Arc only
  TurnDirection direction = TurnDirection::Ccw;  // Arc only

  static RouteSegment line(Vec2 a, Vec2 b) { return {SegmentKind::Line, a, b, 0.0, TurnDirection::Ccw}; }
  static RouteSegment arc(Vec2 a, Vec2 b, double r, TurnDirection dir)
  {
    return {SegmentKind::Arc, a, b, r, dir};
  }

  double chord() const { return distance(start, end); }

  // Arcs are the minor arc (sweep <= pi) between start and end on a circle of
  // the given radius; the center sits left of the chord for CCW turns.
  Vec2 center() const
  {
    const Vec2 c = end - start;
    const double len = norm(c);
    const Vec2 mid = 0.5 * (start + end);
    const double half = 0.5 * len;
    const double h = std::sqrt(std::max(0.0, radius * radius - half * half));
    const Vec2 left{-c.y / len, c.x / len};
    return direction == TurnDirection::Ccw ? mid + h * left : mid - h * left;
  }

  /// Unsigned sweep angle of an arc.
  double sweep() const
  {
    const double s = std::clamp(chord() / (2.0 * radius), 0.0, 1.0);
    return 2.0 * std::asin(s);
  }

  double length() const { return kind == SegmentKind::Line ? chord() : radius * sweep(); }

  Vec2 point_at(double s) const
  {
    if (kind == SegmentKind::Line) {
      const double len = chord();
      return start + (s / len) * (end - start);
    }
    const Vec2 c = center();
    const double a0 = std::atan2(start.y - c.y, start.x - c.x);
    const double sign = direction == TurnDirection::Ccw ? 1.0 : -1.0;
    const double a = a0 + sign * s / radius;
    return {c.x + radius * std::cos(a), c.y + radius * std::sin(a)};
  }

  SegmentProjection project(Vec2 p) const
  {
    if (kind == SegmentKind::Line) {
      const Vec2 d = end - start;
      const double len2 = dot(d, d);
      const double t = len2 > 0.0 ? std::clamp(dot(p - start, d) / len2, 0.0, 1.0) : 0.0;
      const Vec2 q = start + t * d;
      return {distance(p, q), t * std::sqrt(len2)};
    }
    const Vec2 c = center();
    const double sw = sweep();
    const double a0 = std::atan2(start.y - c.y, start.x - c.x);
    const double rp = distance(p, c);
    if (rp > 0.0) {
      const double ap = std::atan2(p.y - c.y, p.x - c.x);
      double rel = direction == TurnDirection::Ccw ? ap - a0 : a0 - ap;
      rel = std::fmod(rel, kTwoPi);
      if (rel < 0.0) rel += kTwoPi;
      if (rel <= sw) {
        return {std::abs(rp - radius), rel * radius};
      }
    }
    const double ds = distance(p, start);
    const double de = distance(p, end);
    return ds <= de ? SegmentProjection{ds, 0.0} : SegmentProjection{de, length()};
  }
};

struct RouteViolation {
  std::size_t segment = 0;
  std::string rule;
  std::string detail;
};

class Route {
 public:
  Route() = default;
  explicit Route(std::vector<RouteSegment> segments) : segments_(std::move(segments)) {}

  /// Straight-line route through the waypoints. Fewer than two waypoints gives
  /// an empty (invalid) route.
  static Route from_waypoints(const std::vector<Waypoint>& pts)
  {
    std::vector<RouteSegment> segs;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      segs.push_back(RouteSegment::line(pts[i - 1], pts[i]));
    }
    return Route(std::move(segs));
  }

  const std::vector<RouteSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  std::vector<Waypoint> waypoints() const
  {
    std::vector<Waypoint> pts;
    if (segments_.empty()) return pts;
    pts.push_back(segments_.front().start);
    for (const auto& s : segments_) pts.push_back(s.end);
    return pts;
  }

  double length() const
  {
    double total = 0.0;
    for (const auto& s : segments_) total += s.length();
    return total;
  }

  /// Waypoints sampled along the true geometry with at most `spacing` meters
  /// between consecutive points; every segment endpoint is kept.
  std::vector<Waypoint> densify(double spacing) const
  {
    if (!(spacing > 0.0)) throw std::invalid_argument("densify: spacing must be positive");
    std::vector<Waypoint> pts;
    if (segments_.empty()) return pts;
    pts.push_back(segments_.front().start);
    for (const auto& s : segments_) {
      const double len = s.length();
      const auto n = static_cast<int>(std::ceil(len / spacing - 1e-9));
      for (int i = 1; i < n; ++i) pts.push_back(s.point_at(len * i / n));
      pts.push_back(s.end);
    }
    return pts;
  }

 private:
  std::vector<RouteSegment> segments_;
};

inline std::vector<RouteViolation> validate_route(const Route& route)
{
  std::vector<RouteViolation> out;
  const auto& segs = route.segments();
  if (segs.empty()) {
    out.push_back({0, "min-length", "route needs at least two waypoints"});
    return out;
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    const bool finite = std::isfinite(s.start.x) && std::isfinite(s.start.y) &&
                        std::isfinite(s.end.x) && std::isfinite(s.end.y);
    if (!finite) {
      out.push_back({i, "finite", "non-finite coordinate"});
      continue;
    }
    if (s.kind == SegmentKind::Line) {
      if (!(s.chord() > 0.0)) out.push_back({i, "line-length", "line segment has zero length"});
    } else {
      if (!(s.radius > 0.0)) {
        out.push_back({i, "arc-radius", "arc radius must be positive"});
      } else if (s.chord() > 2.0 * s.radius + kRouteTolerance) {
        out.push_back({i, "arc-circle", "endpoints do not fit on a circle of the given radius"});
      } else if (!(s.chord() > 0.0)) {
        out.push_back({i, "arc-length", "arc has coincident endpoints"});
      }
    }
    if (i + 1 < segs.size() && distance(s.end, segs[i + 1].start) > kRouteTolerance) {
      out.push_back({i + 1, "continuity",
                     "gap of " + std::to_string(distance(s.end, segs[i + 1].start)) + " m to previous segment"});
    }
  }
  return out;
}

/// Unsigned distance from the pose position to the nearest point of the route.
inline double xte(const Pose2D& pose, const Route& route)
{
  if (route.empty()) throw std::invalid_argument("xte: empty route");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : route.segments()) best = std::min(best, s.project(pose.position()).distance);
  return best;
}

/// Sidewall line in general form. Note the coefficient order: A multiplies y
/// and B multiplies x, i.e. A*y + B*x + C = 0.
struct WallLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  bool degenerate() const { return a == 0.0 && b == 0.0; }
};

struct RfidTag {
  int id = 0;
  Vec2 position;
};

/// Feeding area along the wall: along-wall coordinate of `center` +/- half_width.
struct FeedZone {
  Vec2 center;
  double half_width = 0.0;
};

struct LandmarkMap {
  std::vector<Vec2> poles;
  std::optional<WallLine> sidewall;
  std::vector<RfidTag> rfid_tags;
  std::vector<FeedZone> feed_zones;
  std::optional<double> tag_spacing;

  const RfidTag* find_tag(int id) const
  {
    for (const auto& t : rfid_tags) {
      if (t.id == id) return &t;
    }
    return nullptr;
  }

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (sidewall && sidewall->degenerate()) out.emplace_back("sidewall: A and B are both zero");
    for (std::size_t i = 0; i < rfid_tags.size(); ++i) {
      for (std::size_t j = i + 1; j < rfid_tags.size(); ++j) {
        if (rfid_tags[i].id == rfid_tags[j].id) {
          out.push_back("rfid: duplicate tag id " + std::to_string(rfid_tags[i].id));
        }
      }
    }
    if (tag_spacing && (*tag_spacing < 0.3 || *tag_spacing > 20.0)) {
      out.emplace_back("rfid: declared tag spacing outside [0.3, 20] m");
    }
    for (const auto& z : feed_zones) {
      if (!(z.half_width > 0.0)) out.emplace_back("feed zone: half width must be positive");
    }
    return out;
  }
};

/// Rigid transform applied to points: rotate by `angle` about the origin, then translate.
struct RigidTransform {
  double angle = 0.0;
  Vec2 offset;

  Vec2 apply(Vec2 p) const
  {
    const double c = std::cos(angle), s = std::sin(angle);
    return Vec2{c * p.x - s * p.y, s * p.x + c * p.y} + offset;
  }
  Pose2D apply(const Pose2D& p) const
  {
    const Vec2 q = apply(p.position());
    return make_pose(q.x, q.y, p.psi + angle);
  }
  RouteSegment apply(const RouteSegment& s) const
  {
    RouteSegment out = s;
    out.start = apply(s.start);
    out.end = apply(s.end);
    return out;
  }
  Route apply(const Route& r) const
  {
    std::vector<RouteSegment> segs;
    for (const auto& s : r.segments()) segs.push_back(apply(s));
    return Route(std::move(segs));
  }
};

}  // namespace agrisim
