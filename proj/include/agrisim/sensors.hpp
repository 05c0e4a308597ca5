#pragma once

// Simulated sensors: rear-wheel encoders, IMU yaw rate, feature-level vision
// (door poles, sidewall) and RFID tag readers with elliptical detection zones.

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/world.hpp"

namespace agrisim {

using Rng = std::mt19937_64;

inline double gaussian(Rng& rng, double sigma)
{
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  return n(rng);
}

struct EncoderModel {
  int counts_per_rev = 1024;
  bool quantized = true;
};

/// Encoder reading for an accumulated wheel rotation (radians).
inline double encoder_sample(double wheel_angle_travel, int counts_per_rev, bool quantized = true)
{
  if (counts_per_rev < 1) throw std::invalid_argument("encoder_sample: counts per revolution must be >= 1");
  if (!std::isfinite(wheel_angle_travel)) throw std::invalid_argument("encoder_sample: non-finite travel");
  const double counts = wheel_angle_travel / kTwoPi * counts_per_rev;
  return quantized ? std::floor(counts) : counts;
}

struct ImuModel {
  double yaw_rate_sigma = 0.0;  // rad/s
  double bias = 0.0;            // rad/s
};

inline double imu_sample(double true_yaw_rate, const ImuModel& imu, Rng& rng)
{
  return true_yaw_rate + imu.bias + gaussian(rng, imu.yaw_rate_sigma);
}

struct VisionModel {
  double max_range = 6.0;              // m
  double field_of_view = 2.0 * kPi / 3.0;  // rad
  double range_sigma = 0.0;            // m
  double bearing_sigma = 0.0;          // rad
  double wall_distance_sigma = 0.0;    // m
  double wall_distance_bias = 0.0;     // m
  double wall_angle_sigma = 0.0;       // rad
};

struct PoleObservation {
  double range = 0.0;
  double bearing = 0.0;
  std::size_t landmark = 0;  // ground-truth index into LandmarkMap::poles
};

inline std::vector<PoleObservation> vision_poles(const Pose2D& pose, const LandmarkMap& map, const VisionModel& vision,
                                                 Rng& rng)
{
  std::vector<PoleObservation> out;
  for (std::size_t j = 0; j < map.poles.size(); ++j) {
    const double dx = map.poles[j].x - pose.x;
    const double dy = map.poles[j].y - pose.y;
    const double r = std::sqrt(dx * dx + dy * dy);
    const double theta = normalize_angle(std::atan2(dy, dx) - pose.psi);
    if (r > vision.max_range || std::abs(theta) > vision.field_of_view / 2.0) continue;
    const double nr = r + gaussian(rng, vision.range_sigma);
    const double nt = normalize_angle(theta + gaussian(rng, vision.bearing_sigma));
    out.push_back({nr, nt, j});
  }
  return out;
}

struct SidewallObservation {
  double distance = 0.0;  // signed, (A y + B x + C)/sqrt(A^2+B^2)
  double angle = 0.0;     // atan2(A, B) - psi
};

inline SidewallObservation vision_sidewall(const Pose2D& pose, const WallLine& wall, const VisionModel& vision,
                                           Rng& rng)
{
  if (wall.degenerate()) throw std::invalid_argument("vision_sidewall: degenerate wall");
  const double n = std::hypot(wall.a, wall.b);
  const double d = (wall.a * pose.y + wall.b * pose.x + wall.c) / n;
  const double theta = normalize_angle(std::atan2(wall.a, wall.b) - pose.psi);
  return {d + vision.wall_distance_bias + gaussian(rng, vision.wall_distance_sigma),
          normalize_angle(theta + gaussian(rng, vision.wall_angle_sigma))};
}

enum class ReaderPosition { Front, Rear };
enum class TagEdge { In, Out };

inline const char* to_string(ReaderPosition r) { return r == ReaderPosition::Front ? "front" : "rear"; }
inline const char* to_string(TagEdge e) { return e == TagEdge::In ? "in" : "out"; }

struct RfidReaderModel {
  ReaderPosition position = ReaderPosition::Front;
  double mount_offset = 0.0;   // m along the vehicle x axis
  double semi_major = 0.1;     // m, along the vehicle x axis
  double semi_minor = 0.05;    // m
  double poll_period = 0.01;   // s
};

struct TagEvent {
  int tag_id = 0;
  ReaderPosition reader = ReaderPosition::Front;
  TagEdge edge = TagEdge::In;
  double time = 0.0;
};

inline Vec2 reader_center(const Pose2D& pose, const RfidReaderModel& model)
{
  return {pose.x + model.mount_offset * std::cos(pose.psi), pose.y + model.mount_offset * std::sin(pose.psi)};
}

/// True when the tag lies inside the reader's elliptical zone (vehicle-aligned).
inline bool in_detection_zone(const Pose2D& pose, const RfidReaderModel& model, Vec2 tag)
{
  const Vec2 d = tag - reader_center(pose, model);
  const double c = std::cos(pose.psi), s = std::sin(pose.psi);
  const double lx = c * d.x + s * d.y;
  const double ly = -s * d.x + c * d.y;
  const double ex = lx / model.semi_major, ey = ly / model.semi_minor;
  return ex * ex + ey * ey <= 1.0;
}

/// Edge-detecting tag reader. poll() is expected at multiples of poll_period.
class RfidReader {
 public:
  explicit RfidReader(RfidReaderModel model) : model_(model)
  {
    if (!(model_.semi_major > 0.0 && model_.semi_minor > 0.0)) throw std::invalid_argument("rfid: zone semi-axes must be positive");
    if (!(model_.poll_period > 0.0)) throw std::invalid_argument("rfid: poll period must be positive");
  }

  const RfidReaderModel& model() const { return model_; }

  std::vector<TagEvent> poll(const Pose2D& pose, const LandmarkMap& map, double time)
  {
    std::vector<TagEvent> events;
    for (const auto& tag : map.rfid_tags) {
      const bool inside = in_detection_zone(pose, model_, tag.position);
      bool& latched = inside_[tag.id];
      if (inside && !latched) events.push_back({tag.id, model_.position, TagEdge::In, time});
      if (!inside && latched) events.push_back({tag.id, model_.position, TagEdge::Out, time});
      latched = inside;
    }
    return events;
  }

 private:
  RfidReaderModel model_;
  std::map<int, bool> inside_;
};

struct TimedPose {
  double time = 0.0;
  Pose2D pose;
};

/// Batch form of RfidReader::poll over a trajectory sampled at poll instants.
inline std::vector<TagEvent> rfid_scan(const std::vector<TimedPose>& samples, const LandmarkMap& map,
                                       const RfidReaderModel& model)
{
  RfidReader reader(model);
  std::vector<TagEvent> out;
  for (const auto& s : samples) {
    auto ev = reader.poll(s.pose, map, s.time);
    out.insert(out.end(), ev.begin(), ev.end());
  }
  return out;
}

/// Checks per-(tag, reader) In/Out alternation and per-reader time ordering.
inline bool event_stream_well_formed(const std::vector<TagEvent>& events)
{
  std::map<std::pair<int, int>, bool> inside;
  std::map<int, double> last_time;
  for (const auto& e : events) {
    const int r = static_cast<int>(e.reader);
    if (last_time.count(r) && e.time < last_time[r]) return false;
    last_time[r] = e.time;
    bool& in = inside[{e.tag_id, r}];
    if (e.edge == TagEdge::In) {
      if (in) return false;
      in = true;
    } else {
      if (!in) return false;
      in = false;
    }
  }
  return true;
}

}  // namespace agrisim
