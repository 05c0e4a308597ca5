#pragma once

// Online wheel-radius and speed estimation from two tag readers passing the
// same identification tag, plus reader/tag health diagnostics.
//
// Each reader produces an In and an Out edge per tag. Pairing the leading and
// trailing reader edges gives four reference distances (ii, oo, io, oi) that
// are fixed by the reader geometry; the encoder counts and time between the
// paired edges turn them into radius and speed measurements.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/sensors.hpp"
#include "agrisim/world.hpp"

namespace agrisim {

struct EstimatorUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double distance_from_counts(double counts, int counts_per_rev, double radius)
{
  if (counts_per_rev <= 0) throw std::invalid_argument("distance_from_counts: counts per revolution must be positive");
  return kTwoPi * radius * counts / counts_per_rev;
}

/// Radius that makes `counts` cover `dist` exactly.
inline double direct_radius(double dist, double counts, int counts_per_rev)
{
  return counts_per_rev * dist / (kTwoPi * counts);
}

enum class IntervalKind { InIn, OutOut, InOut, OutIn };

inline const char* to_string(IntervalKind k)
{
  switch (k) {
    case IntervalKind::InIn: return "ii";
    case IntervalKind::OutOut: return "oo";
    case IntervalKind::InOut: return "io";
    case IntervalKind::OutIn: return "oi";
  }
  return "?";
}

inline constexpr std::array<IntervalKind, 4> kIntervalKinds{IntervalKind::InIn, IntervalKind::OutOut,
                                                            IntervalKind::InOut, IntervalKind::OutIn};

/// Reader mounting: spacing between zone centers and the along-track
/// semi-axis of each reader's zone.
struct ReaderGeometry {
  double spacing = 1.0;
  double zone_front = 0.1;
  double zone_rear = 0.1;

  /// Reference distance for an interval. `lead`/`trail` zones depend on the
  /// travel direction: the leading reader meets the tag first.
  double reference(IntervalKind k, bool forward = true) const
  {
    const double lead = forward ? zone_front : zone_rear;
    const double trail = forward ? zone_rear : zone_front;
    switch (k) {
      case IntervalKind::InIn: return spacing + lead - trail;
      case IntervalKind::OutOut: return spacing - lead + trail;
      case IntervalKind::InOut: return spacing + lead + trail;
      case IntervalKind::OutIn: return spacing - lead - trail;
    }
    return 0.0;
  }
};

struct PassInterval {
  IntervalKind kind = IntervalKind::InIn;
  double distance = 0.0;  // m, reference distance
  double counts = 0.0;    // encoder counts between the paired edges
  double elapsed = 0.0;   // s
  bool complete = false;
};

struct TagPassRecord {
  int tag_id = 0;
  bool forward = true;
  bool front_seen = false;
  bool rear_seen = false;
  std::array<PassInterval, 4> intervals{};

  bool usable() const
  {
    return std::any_of(intervals.begin(), intervals.end(), [](const PassInterval& i) { return i.complete; });
  }
};

struct EncoderSample {
  double time = 0.0;
  double counts = 0.0;
};

struct PassAssembly {
  std::optional<TagPassRecord> record;
  std::vector<std::string> diagnostics;
};

namespace calib_detail {

inline double counts_at(const std::vector<EncoderSample>& log, double t)
{
  if (log.empty()) throw std::invalid_argument("assemble_pass: empty encoder log");
  auto it = std::upper_bound(log.begin(), log.end(), t + 1e-9,
                             [](double v, const EncoderSample& s) { return v < s.time; });
  if (it == log.begin()) return log.front().counts;
  return std::prev(it)->counts;
}

}  // namespace calib_detail

/// Pairs the front/rear edges of one tag pass with the encoder log.
inline PassAssembly assemble_pass(const std::vector<TagEvent>& events, const std::vector<EncoderSample>& encoder_log,
                                  const ReaderGeometry& geometry)
{
  PassAssembly out;
  if (events.empty()) {
    out.diagnostics.emplace_back("no tag events");
    return out;
  }
  const int tag = events.front().tag_id;
  std::map<std::pair<ReaderPosition, TagEdge>, double> edge_time;
  for (const auto& e : events) {
    if (e.tag_id != tag) {
      out.diagnostics.push_back("event for tag " + std::to_string(e.tag_id) + " ignored in pass of tag " +
                                std::to_string(tag));
      continue;
    }
    const auto key = std::make_pair(e.reader, e.edge);
    if (e.edge == TagEdge::Out && !edge_time.count({e.reader, TagEdge::In})) {
      out.diagnostics.push_back(std::string("out edge before in edge on ") + to_string(e.reader) +
                                " reader; pass discarded");
      return out;
    }
    if (!edge_time.count(key)) edge_time[key] = e.time;
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].time < events[i - 1].time) {
      out.diagnostics.emplace_back("events not ordered in time; pass discarded");
      return out;
    }
  }

  TagPassRecord rec;
  rec.tag_id = tag;
  rec.front_seen = edge_time.count({ReaderPosition::Front, TagEdge::In}) > 0;
  rec.rear_seen = edge_time.count({ReaderPosition::Rear, TagEdge::In}) > 0;
  const double t0 = events.front().time, t1 = events.back().time;
  rec.forward = calib_detail::counts_at(encoder_log, t1) - calib_detail::counts_at(encoder_log, t0) >= 0.0;
  if (!rec.front_seen) out.diagnostics.emplace_back("front reader did not detect the tag");
  if (!rec.rear_seen) out.diagnostics.emplace_back("rear reader did not detect the tag");

  const ReaderPosition lead = rec.forward ? ReaderPosition::Front : ReaderPosition::Rear;
  const ReaderPosition trail = rec.forward ? ReaderPosition::Rear : ReaderPosition::Front;
  auto edge = [&](ReaderPosition r, TagEdge e) -> std::optional<double> {
    auto it = edge_time.find({r, e});
    if (it == edge_time.end()) return std::nullopt;
    return it->second;
  };

  for (std::size_t k = 0; k < kIntervalKinds.size(); ++k) {
    const IntervalKind kind = kIntervalKinds[k];
    PassInterval& iv = rec.intervals[k];
    iv.kind = kind;
    iv.distance = geometry.reference(kind, rec.forward);
    const TagEdge first = (kind == IntervalKind::InIn || kind == IntervalKind::InOut) ? TagEdge::In : TagEdge::Out;
    const TagEdge second = (kind == IntervalKind::InIn || kind == IntervalKind::OutIn) ? TagEdge::In : TagEdge::Out;
    const auto ta = edge(lead, first);
    const auto tb = edge(trail, second);
    if (!(iv.distance > 0.0)) {
      out.diagnostics.push_back(std::string("interval ") + to_string(kind) + " has non-positive reference distance");
      continue;
    }
    if (!ta || !tb) continue;
    iv.elapsed = *tb - *ta;
    iv.counts = std::abs(calib_detail::counts_at(encoder_log, *tb) - calib_detail::counts_at(encoder_log, *ta));
    iv.complete = iv.elapsed > 0.0;
  }
  if (!rec.usable()) out.diagnostics.emplace_back("no complete interval in pass");
  out.record = rec;
  return out;
}

/// Least-squares radius minimizing sum_i (d_i - 2 pi R G_i / G_o)^2 over the
/// complete intervals.
inline double ls_radius(const TagPassRecord& record, int counts_per_rev)
{
  double num = 0.0, den = 0.0;
  for (const auto& iv : record.intervals) {
    if (!iv.complete || !(iv.counts > 0.0)) continue;
    num += iv.distance * iv.counts;
    den += iv.counts * iv.counts;
  }
  if (!(den > 0.0)) throw EstimatorUnavailable("ls_radius: no complete interval with counts");
  return counts_per_rev * num / (kTwoPi * den);
}

/// Mean of d_i / dt_i over complete intervals.
inline double tag_speed(const TagPassRecord& record)
{
  double sum = 0.0;
  int n = 0;
  for (const auto& iv : record.intervals) {
    if (!iv.complete) continue;
    if (!(iv.elapsed > 0.0)) throw std::invalid_argument("tag_speed: zero elapsed time");
    sum += iv.distance / iv.elapsed;
    ++n;
  }
  if (n == 0) throw EstimatorUnavailable("tag_speed: no complete interval");
  return sum / n;
}

/// Scalar random-walk Kalman filter on the effective radius; each complete
/// interval is a measurement d_i = (2 pi G_i / G_o) R.
class RadiusKalman {
 public:
  RadiusKalman(double initial, double initial_variance, double process_variance = 1e-10,
               double distance_variance = 1e-6)
      : estimate_(initial), variance_(initial_variance), q_(process_variance), r_(distance_variance)
  {
  }

  void add_pass(const TagPassRecord& record, int counts_per_rev)
  {
    variance_ += q_;
    for (const auto& iv : record.intervals) {
      if (!iv.complete || !(iv.counts > 0.0)) continue;
      const double h = kTwoPi * iv.counts / counts_per_rev;
      const double s = h * variance_ * h + r_;
      const double k = variance_ * h / s;
      estimate_ += k * (iv.distance - h * estimate_);
      variance_ *= (1.0 - k * h);
    }
  }

  double estimate() const { return estimate_; }
  double variance() const { return variance_; }

 private:
  double estimate_;
  double variance_;
  double q_;
  double r_;
};

// --- diagnostics --------------------------------------------------------------

struct PassObservation {
  int tag_id = 0;
  bool front_detected = false;
  bool rear_detected = false;
  std::optional<double> position_residual;  // m, implied map position error
};

enum class HealthIssue { ReaderFaulty, ReplaceTag, TagMisplaced };

inline const char* to_string(HealthIssue h)
{
  switch (h) {
    case HealthIssue::ReaderFaulty: return "reader-faulty";
    case HealthIssue::ReplaceTag: return "replace-tag";
    case HealthIssue::TagMisplaced: return "tag-misplaced";
  }
  return "?";
}

struct HealthDiagnostic {
  HealthIssue issue = HealthIssue::ReaderFaulty;
  std::optional<ReaderPosition> reader;
  std::optional<int> tag_id;
  std::string message;
};

struct HealthConfig {
  int reader_window = 3;       // N tags detected by the other reader only
  int replace_window = 2;      // M consecutive passes with both readers missing
  double misplacement = 0.1;   // m
};

inline std::vector<HealthDiagnostic> reader_health(const std::vector<PassObservation>& history,
                                                   const HealthConfig& cfg = {})
{
  std::vector<HealthDiagnostic> out;

  for (ReaderPosition r : {ReaderPosition::Front, ReaderPosition::Rear}) {
    int run = 0;
    for (auto it = history.rbegin(); it != history.rend() && run < cfg.reader_window; ++it) {
      const bool self = r == ReaderPosition::Front ? it->front_detected : it->rear_detected;
      const bool other = r == ReaderPosition::Front ? it->rear_detected : it->front_detected;
      if (!self && !other) continue;
      if (self) break;
      ++run;
    }
    if (run >= cfg.reader_window) {
      out.push_back({HealthIssue::ReaderFaulty, r, std::nullopt,
                     std::string(to_string(r)) + " reader missed the last " + std::to_string(run) +
                         " tags seen by the other reader"});
    }
  }

  std::map<int, std::vector<const PassObservation*>> by_tag;
  for (const auto& p : history) by_tag[p.tag_id].push_back(&p);
  for (const auto& [id, passes] : by_tag) {
    int both_missed = 0;
    for (auto it = passes.rbegin(); it != passes.rend(); ++it) {
      if ((*it)->front_detected || (*it)->rear_detected) break;
      ++both_missed;
    }
    if (both_missed >= cfg.replace_window) {
      out.push_back({HealthIssue::ReplaceTag, std::nullopt, id,
                     "tag " + std::to_string(id) + " unread by both readers on " + std::to_string(both_missed) +
                         " consecutive passes"});
    }
    double sum = 0.0;
    int n = 0;
    for (const auto* p : passes) {
      if (p->position_residual) {
        sum += std::abs(*p->position_residual);
        ++n;
      }
    }
    if (n >= 2 && sum / n > cfg.misplacement) {
      out.push_back({HealthIssue::TagMisplaced, std::nullopt, id,
                     "tag " + std::to_string(id) + " mean position residual " + std::to_string(sum / n) + " m"});
    }
  }
  return out;
}

// --- simulated passes ---------------------------------------------------------

struct SimulatedPass {
  std::vector<TagEvent> events;
  std::vector<EncoderSample> encoder_log;
};

struct PassSetup {
  double true_radius = 0.3;
  int counts_per_rev = 1024;
  bool quantized = true;
  double start = -2.0;      // m, vehicle reference position along the track at t = 0
  double stop = 2.0;        // m
  double tag_position = 0.0;
  double lateral_offset = 0.0;
  RfidReaderModel front{ReaderPosition::Front, 0.5, 0.1, 0.05, 0.01};
  RfidReaderModel rear{ReaderPosition::Rear, -0.5, 0.1, 0.05, 0.01};
  double max_time = 600.0;
  bool exact_edges = false;  // stamp edges at the true zone crossing instead of the next poll
};

/// Straight pass along the x axis over one tag with the given speed profile
/// u(t) (negative speeds drive backwards). Readers and encoder are polled
/// together every poll period; position is integrated with the trapezoid rule
/// on a fine sub-step. With exact_edges the readers report the crossing
/// instants themselves, interpolated within the sub-step, and the encoder is
/// sampled there too.
inline SimulatedPass simulate_tag_pass(const PassSetup& setup, const std::function<double(double)>& speed)
{
  LandmarkMap map;
  map.rfid_tags.push_back({1, {setup.tag_position, setup.lateral_offset}});
  RfidReader front(setup.front), rear(setup.rear);
  const double poll = setup.front.poll_period;
  const int sub = 20;
  SimulatedPass out;
  double x = setup.start;
  const double dir = setup.stop >= setup.start ? 1.0 : -1.0;
  auto counts = [&](double pos) {
    return encoder_sample((pos - setup.start) / setup.true_radius, setup.counts_per_rev, setup.quantized);
  };

  // Exact mode: the zone along the track is |tag - x - offset| <= w.
  struct Zone {
    const RfidReaderModel* model;
    std::optional<double> half;
    bool inside = false;
  };
  std::array<Zone, 2> zones{Zone{&setup.front, {}, false}, Zone{&setup.rear, {}, false}};
  for (auto& z : zones) {
    const double q = setup.lateral_offset / z.model->semi_minor;
    if (q * q <= 1.0) z.half = z.model->semi_major * std::sqrt(1.0 - q * q);
    z.inside = z.half && std::abs(setup.tag_position - x - z.model->mount_offset) <= *z.half;
    if (setup.exact_edges && z.inside) out.events.push_back({1, z.model->position, TagEdge::In, 0.0});
  }

  for (long k = 0;; ++k) {
    const double t = k * poll;
    const Pose2D pose{x, 0.0, 0.0};
    out.encoder_log.push_back({t, counts(x)});
    if (!setup.exact_edges) {
      for (auto& e : front.poll(pose, map, t)) out.events.push_back(e);
      for (auto& e : rear.poll(pose, map, t)) out.events.push_back(e);
    }
    if ((x - setup.stop) * dir >= 0.0 || t > setup.max_time) break;
    const double h = poll / sub;
    for (int i = 0; i < sub; ++i) {
      const double ta = t + i * h;
      const double xa = x;
      x += 0.5 * h * (speed(ta) + speed(ta + h));
      if (!setup.exact_edges || x == xa) continue;
      std::vector<std::pair<double, std::size_t>> crossings;
      for (std::size_t zi = 0; zi < zones.size(); ++zi) {
        const Zone& z = zones[zi];
        if (!z.half) continue;
        for (double edge : {-*z.half, *z.half}) {
          const double p = setup.tag_position - z.model->mount_offset + edge;
          if ((p - xa) * (x - xa) > 0.0 && std::abs(p - xa) <= std::abs(x - xa)) crossings.emplace_back(p, zi);
        }
      }
      std::sort(crossings.begin(), crossings.end(),
                [&](const auto& a, const auto& b) { return std::abs(a.first - xa) < std::abs(b.first - xa); });
      for (const auto& [p, zi] : crossings) {
        const double tc = ta + h * (p - xa) / (x - xa);
        Zone& z = zones[zi];
        z.inside = !z.inside;
        out.encoder_log.push_back({tc, counts(p)});
        out.events.push_back({1, z.model->position, z.inside ? TagEdge::In : TagEdge::Out, tc});
      }
    }
  }
  return out;
}

}  // namespace agrisim
