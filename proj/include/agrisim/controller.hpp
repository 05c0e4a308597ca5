#pragma once

// Discrete-event controller: waypoint route manager, three path-tracking
// steering laws and the feeding sequencer.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/world.hpp"

namespace agrisim {

struct RouteExhausted : std::logic_error {
  using std::logic_error::logic_error;
};

/// Waypoint sequence with the NextWayPoint contract: advancing requires more
/// than one remaining waypoint.
class RouteManager {
 public:
  RouteManager() = default;
  explicit RouteManager(const std::vector<Waypoint>& waypoints) : waypoints_(waypoints.begin(), waypoints.end()) {}

  Waypoint next_waypoint()
  {
    if (waypoints_.size() <= 1) throw RouteExhausted("next_waypoint: fewer than two waypoints remain");
    current_ = waypoints_.front();
    waypoints_.pop_front();
    next_ = waypoints_.front();
    return *current_;
  }

  std::size_t remaining() const { return waypoints_.size(); }
  const std::deque<Waypoint>& waypoints() const { return waypoints_; }
  const std::optional<Waypoint>& current() const { return current_; }
  const std::optional<Waypoint>& next() const { return next_; }

 private:
  std::deque<Waypoint> waypoints_;
  std::optional<Waypoint> current_;
  std::optional<Waypoint> next_;
};

enum class TrackingMethod { HeadingError, LateralError, LineSegment };

struct TrackerConfig {
  TrackingMethod method = TrackingMethod::LineSegment;
  double look_ahead = 1.0;    // m
  double gain_heading = 1.0;  // rad/rad
  double gain_lateral = 0.5;  // rad/m
  double max_steer = 0.6;     // rad

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (!(look_ahead > 0.0)) out.emplace_back("look_ahead must be positive");
    if (!(gain_heading > 0.0)) out.emplace_back("gain_heading must be positive");
    if (!(gain_lateral > 0.0)) out.emplace_back("gain_lateral must be positive");
    if (!(max_steer > 0.0)) out.emplace_back("max_steer must be positive");
    return out;
  }
};

inline double clamp_steer(double delta, const TrackerConfig& cfg) { return std::clamp(delta, -cfg.max_steer, cfg.max_steer); }

/// Method 1: proportional on the heading error towards a single waypoint.
inline double steer_method1(const Pose2D& pose, Waypoint target, const TrackerConfig& cfg)
{
  const double bearing = std::atan2(target.y - pose.y, target.x - pose.x);
  return clamp_steer(cfg.gain_heading * normalize_angle(bearing - pose.psi), cfg);
}

inline constexpr double kMinChord = 1e-6;

/// Signed lateral offset of a point from the directed line a->b (left positive).
inline double lateral_offset(Vec2 p, Waypoint a, Waypoint b)
{
  const Vec2 d = b - a;
  const double len = norm(d);
  if (len < kMinChord) throw std::invalid_argument("lateral_offset: degenerate chord");
  return cross(d, p - a) / len;
}

/// Method 2: lateral-error feedback on the chord a->b plus a chord-heading term.
inline double steer_method2(const Pose2D& pose, Waypoint a, Waypoint b, const TrackerConfig& cfg)
{
  const double e_lat = lateral_offset(pose.position(), a, b);
  const double chord_heading = std::atan2(b.y - a.y, b.x - a.x);
  return clamp_steer(-cfg.gain_lateral * e_lat + cfg.gain_heading * normalize_angle(chord_heading - pose.psi), cfg);
}

/// Look-ahead point on segment a->b: the projection advanced by l_d, clamped to the segment.
inline Vec2 carrot_point(Vec2 p, Waypoint a, Waypoint b, double look_ahead)
{
  const Vec2 d = b - a;
  const double len = norm(d);
  if (len < kMinChord) throw std::invalid_argument("carrot_point: degenerate segment");
  const Vec2 dir = (1.0 / len) * d;
  const double s = std::clamp(dot(p - a, dir) + look_ahead, 0.0, len);
  return a + s * dir;
}

/// Method 3: pure pursuit towards the look-ahead point on the segment.
inline double steer_method3(const Pose2D& pose, Waypoint a, Waypoint b, const TrackerConfig& cfg)
{
  const Vec2 c = carrot_point(pose.position(), a, b, cfg.look_ahead);
  const double bearing = std::atan2(c.y - pose.y, c.x - pose.x);
  return clamp_steer(cfg.gain_heading * normalize_angle(bearing - pose.psi), cfg);
}

/// Whether the tracker should move on to the next waypoint pair. Methods 1-2
/// test distance to the waypoint being approached (mgr.next()); method 3 tests
/// the along-track progress on current->next.
inline bool advance_check(const Pose2D& pose, const RouteManager& mgr, double look_ahead, TrackingMethod method)
{
  if (!mgr.current() || !mgr.next()) throw std::logic_error("advance_check: route manager not started");
  const Waypoint a = *mgr.current();
  const Waypoint b = *mgr.next();
  if (method == TrackingMethod::LineSegment) {
    const Vec2 d = b - a;
    const double len = norm(d);
    if (len < kMinChord) return true;
    const double along = dot(pose.position() - a, (1.0 / len) * d);
    return along >= len - look_ahead;
  }
  return distance(pose.position(), b) <= look_ahead;
}

/// Drives a RouteManager with one of the three steering laws.
class PathTracker {
 public:
  PathTracker(const std::vector<Waypoint>& waypoints, TrackerConfig cfg) : mgr_(waypoints), cfg_(cfg)
  {
    const auto problems = cfg_.validate();
    if (!problems.empty()) throw std::invalid_argument("tracker: " + problems.front());
    mgr_.next_waypoint();
  }

  /// Steering command for the current pose; advances waypoints as needed.
  double steer(const Pose2D& pose)
  {
    while (!finished_ && advance_check(pose, mgr_, cfg_.look_ahead, cfg_.method)) {
      if (mgr_.remaining() > 1) {
        mgr_.next_waypoint();
      } else {
        finished_ = true;
      }
    }
    const Waypoint a = *mgr_.current();
    const Waypoint b = *mgr_.next();
    switch (cfg_.method) {
      case TrackingMethod::HeadingError:
        return steer_method1(pose, b, cfg_);
      case TrackingMethod::LateralError:
        return steer_method2(pose, a, b, cfg_);
      case TrackingMethod::LineSegment:
        return steer_method3(pose, a, b, cfg_);
    }
    return 0.0;
  }

  bool finished() const { return finished_; }
  const RouteManager& manager() const { return mgr_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  RouteManager mgr_;
  TrackerConfig cfg_;
  bool finished_ = false;
};

// --- feeding ----------------------------------------------------------------

struct Placement {
  double position = 0.0;  // m, along-wall coordinate
  double grams = 150.0;
};

struct FeedPlan {
  std::vector<Placement> placements;
  double half_tolerance = 0.08;  // m
  Vec2 axis_origin;               // along-wall coordinate zero
  double axis_heading = 0.0;      // rad, direction of increasing along-wall coordinate
  double entry_position = 0.0;    // m, along-wall coordinate where the arm is deployed
  double deploy_time = 5.0;       // s
  double speed_cap = 0.25;        // m/s

  double along(Vec2 p) const
  {
    return dot(p - axis_origin, Vec2{std::cos(axis_heading), std::sin(axis_heading)});
  }

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < placements.size(); ++i) {
      if (placements[i].grams < 80.0 || placements[i].grams > 300.0) {
        out.push_back("placement " + std::to_string(i) + ": grams outside [80, 300]");
      }
      if (i > 0 && !(placements[i].position > placements[i - 1].position)) {
        out.push_back("placement " + std::to_string(i) + ": positions must be strictly increasing");
      }
    }
    if (!(half_tolerance > 0.0)) out.emplace_back("placement tolerance must be positive");
    if (!(speed_cap > 0.0)) out.emplace_back("speed cap must be positive");
    return out;
  }
};

enum class FeedPhase { Transit, StopDeploy, Feeding, Done };

struct Dispense {
  std::size_t index = 0;
  double grams = 0.0;
};

struct ControlOutput {
  double speed = 0.0;  // u_o
  double steer = 0.0;  // delta_o
  std::optional<Dispense> dispense;
};

struct FeedState {
  FeedPhase phase = FeedPhase::Transit;
  double deploy_started = 0.0;
  std::size_t next = 0;
  std::vector<std::size_t> skipped;  // placements passed without dispensing
};

/// Speed and dispense decisions for one controller period. Steering is left
/// to the path tracker.
inline ControlOutput feed_step(const Pose2D& estimated, const FeedPlan& plan, FeedState& state, double time,
                               double cruise_speed)
{
  ControlOutput out;
  const double pos = plan.along(estimated.position());
  const double speed = std::min(cruise_speed, plan.speed_cap);
  switch (state.phase) {
    case FeedPhase::Transit:
      if (pos >= plan.entry_position) {
        state.phase = FeedPhase::StopDeploy;
        state.deploy_started = time;
        out.speed = 0.0;
      } else {
        out.speed = speed;
      }
      break;
    case FeedPhase::StopDeploy:
      out.speed = 0.0;
      if (time - state.deploy_started >= plan.deploy_time) {
        state.phase = FeedPhase::Feeding;
        out.speed = speed;
      }
      break;
    case FeedPhase::Feeding:
      out.speed = speed;
      while (state.next < plan.placements.size() &&
             pos > plan.placements[state.next].position + plan.half_tolerance) {
        state.skipped.push_back(state.next++);
      }
      if (state.next < plan.placements.size() && pos >= plan.placements[state.next].position) {
        out.dispense = Dispense{state.next, plan.placements[state.next].grams};
        ++state.next;
      }
      if (state.next >= plan.placements.size()) {
        state.phase = FeedPhase::Done;
        out.speed = 0.0;
      }
      break;
    case FeedPhase::Done:
      out.speed = 0.0;
      break;
  }
  return out;
}

}  // namespace agrisim
