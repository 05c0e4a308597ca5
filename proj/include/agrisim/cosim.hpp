#pragma once

// Lock-step co-simulation of the discrete-event controller and the
// continuous-time plant. Each DE period: sensors sample the plant (optionally
// through the EKF), the controller computes the held commands, then the plant
// integrates de_period / ct_step RK4 micro-steps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "agrisim/controller.hpp"
#include "agrisim/localization.hpp"
#include "agrisim/plant.hpp"
#include "agrisim/sensors.hpp"
#include "agrisim/world.hpp"

namespace agrisim {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CoSimConfig {
  double de_period = 0.02;    // s
  double ct_step = 0.001;     // s
  double duration_cap = 60.0; // s
  std::uint64_t seed = 1;

  int micro_steps() const { return static_cast<int>(std::llround(de_period / ct_step)); }

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (!(ct_step > 0.0)) out.emplace_back("ct_step must be positive");
    if (!(de_period > 0.0)) out.emplace_back("de_period must be positive");
    if (!(duration_cap >= 0.0)) out.emplace_back("duration_cap must be non-negative");
    if (out.empty()) {
      if (ct_step > de_period) out.emplace_back("ct_step must not exceed de_period");
      else if (std::abs(micro_steps() * ct_step - de_period) > 1e-9 * de_period) {
        out.emplace_back("de_period must be an integer multiple of ct_step");
      }
    }
    return out;
  }
};

enum class LocalizationMode { Truth, Noisy, Ekf };

/// How the controller's odometry converts encoder counts into distance.
enum class RadiusMethod { True, Fixed, Static, PreCalibration, Estimator };

inline const char* to_string(RadiusMethod m)
{
  switch (m) {
    case RadiusMethod::True: return "true";
    case RadiusMethod::Fixed: return "fixed";
    case RadiusMethod::Static: return "static";
    case RadiusMethod::PreCalibration: return "pre-calibration";
    case RadiusMethod::Estimator: return "estimator";
  }
  return "?";
}

struct LocalizationConfig {
  LocalizationMode mode = LocalizationMode::Truth;
  // Noisy mode: monitored pose = truth + white noise.
  double position_sigma = 0.0;  // m
  double heading_sigma = 0.0;   // rad

  NoiseConfig noise;
  Vector3 initial_sigma = Vector3(0.05, 0.05, 0.02);  // P0 = diag(sigma^2)
  bool sample_initial_offset = false;                  // draw the true start offset from P0
  RfidModel rfid_model = RfidModel::BodyFrame;
  bool use_poles = true;
  bool use_sidewall = true;
  bool use_rfid = true;

  RadiusMethod radius_method = RadiusMethod::True;
  double fixed_radius = 0.3;          // m, RadiusMethod::Fixed
  double full_load_mass = 600.0;      // kg, RadiusMethod::Static
  double precal_accuracy = 0.001;     // m, 1-sigma pre-calibration error
  double estimator_bias = -0.005;     // m

  bool dead_reckoning_only() const { return !use_poles && !use_sidewall && !use_rfid; }
};

/// Feeding lane along the x axis: tag 0 at `first_tag`, tag 1 one tag spacing
/// later, placements every `placement_spacing` between them.
struct FeedLayout {
  double first_tag = 0.5;          // m
  double tag_spacing = 2.0;        // m, d_t
  double placement_spacing = 0.3;  // m
  double grams = 150.0;
  double lane_y = 0.0;             // m
  double run_in = 3.0;             // m before tag 0 where the vehicle starts
  double run_out = 2.0;            // m past tag 1 where the route ends
  double entry_offset = -1.0;      // m, arm deployment position relative to tag 0
  double deploy_time = 5.0;        // s
  double speed_cap = 0.25;         // m/s
  double half_tolerance = 0.08;    // m

  std::size_t placement_count() const
  {
    return static_cast<std::size_t>(std::floor(tag_spacing / placement_spacing + 1e-9));
  }

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (!(placement_spacing > 0.0)) out.emplace_back("feed: placement_spacing must be positive");
    if (tag_spacing < 0.3 - 1e-12 || tag_spacing > 20.0 + 1e-12) out.emplace_back("feed: tag_spacing outside [0.3, 20] m");
    if (!(run_in > 0.0) || !(run_out > 0.0)) out.emplace_back("feed: run_in and run_out must be positive");
    if (grams < 80.0 || grams > 300.0) out.emplace_back("feed: grams outside [80, 300]");
    return out;
  }
};

struct Scenario {
  std::string name = "scenario";
  VehicleParams vehicle;
  LoadState load;
  TyreCompression tyre;
  PlantModel model = PlantModel::Kinematic;
  SteerAxle steer_axle = SteerAxle::Front;

  Pose2D initial;                 // nominal start pose (controller belief)
  Pose2D initial_offset;          // true start = nominal + offset
  double initial_speed = 0.0;

  Route route;
  double waypoint_spacing = 0.0;  // m, 0 keeps the segment endpoints only
  LandmarkMap map;

  EncoderModel encoder;
  ImuModel imu;
  VisionModel vision;
  double vision_period = 0.1;     // s
  std::vector<RfidReaderModel> readers;

  TrackerConfig tracker;
  double cruise_speed = 1.0;      // m/s

  LocalizationConfig localization;
  std::optional<FeedLayout> feed;
  CoSimConfig cosim;
  std::map<std::string, double> sdps;
};

// --- trace -------------------------------------------------------------------

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TraceRow {
  double t = 0.0;
  double x_true = 0.0, y_true = 0.0, psi_true = 0.0;
  double u = 0.0, v = 0.0, yaw_rate = 0.0, roll = 0.0;
  double x_s = 0.0, y_s = 0.0, psi_s = 0.0, psi_dot_s = 0.0;
  double u_o = 0.0, delta_o = 0.0;
  double ekf_x = kNaN, ekf_y = kNaN, ekf_psi = kNaN, ekf_trace_p = kNaN;
  double xte = 0.0;
  std::vector<std::string> events;
};

enum class Termination { Completed, DurationCap, Fault };

inline const char* to_string(Termination t)
{
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::DurationCap: return "duration-cap";
    case Termination::Fault: return "fault";
  }
  return "?";
}

struct DispenseRecord {
  std::size_t index = 0;
  double planned = 0.0;  // m, along-lane placement position
  double actual = 0.0;   // m, true along-lane position at dispense
  double grams = 0.0;
  double time = 0.0;
  bool hit = false;
};

struct TraceSummary {
  Termination termination = Termination::Completed;
  std::string fault;
  double duration = 0.0;
  double max_xte = 0.0;
  double mean_xte = 0.0;  // mean |XTE|
  double rms_xte = 0.0;
  std::size_t b_suc = 0;
  std::size_t b_tot = 0;
  std::vector<DispenseRecord> dispenses;
  double assumed_radius = kNaN;
  double true_radius = kNaN;
  double final_position_error = kNaN;  // |true - belief| at the last row
  int covariance_violations = 0;
  FilterDiagnostics filter;
};

struct Trace {
  std::vector<TraceRow> rows;
  TraceSummary summary;
};

// --- helpers -----------------------------------------------------------------

namespace cosim_detail {

inline Rng stream(std::uint64_t seed, std::uint64_t offset)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(offset)};
  return Rng(seq);
}

enum StreamOffset : std::uint64_t { kImu = 1, kVision = 2, kMonitor = 3, kRadius = 4, kInitial = 5 };

struct MeanSample {
  double t;
  Vector3 mean;
};

inline Vector3 interpolate(const std::vector<MeanSample>& hist, double t)
{
  if (hist.empty()) throw std::logic_error("interpolate: empty history");
  if (t <= hist.front().t) return hist.front().mean;
  if (t >= hist.back().t) return hist.back().mean;
  auto it = std::lower_bound(hist.begin(), hist.end(), t, [](const MeanSample& s, double v) { return s.t < v; });
  const MeanSample& hi = *it;
  const MeanSample& lo = *std::prev(it);
  const double w = (t - lo.t) / (hi.t - lo.t);
  Vector3 m = lo.mean + w * (hi.mean - lo.mean);
  m(2) = normalize_angle(lo.mean(2) + w * normalize_angle(hi.mean(2) - lo.mean(2)));
  return m;
}

}  // namespace cosim_detail

/// Feeding-lane route, tags and plan for a scenario with a FeedLayout.
inline FeedPlan make_feed_plan(const FeedLayout& f)
{
  FeedPlan plan;
  plan.axis_origin = {0.0, f.lane_y};
  plan.axis_heading = 0.0;
  plan.half_tolerance = f.half_tolerance;
  plan.entry_position = f.first_tag + f.entry_offset;
  plan.deploy_time = f.deploy_time;
  plan.speed_cap = f.speed_cap;
  for (std::size_t k = 1; k <= f.placement_count(); ++k) {
    plan.placements.push_back({f.first_tag + f.placement_spacing * static_cast<double>(k), f.grams});
  }
  return plan;
}

inline Route make_feed_route(const FeedLayout& f)
{
  return Route::from_waypoints({{f.first_tag - f.run_in, f.lane_y}, {f.first_tag + f.tag_spacing + f.run_out, f.lane_y}});
}

inline std::vector<RfidTag> make_feed_tags(const FeedLayout& f)
{
  return {{0, {f.first_tag, f.lane_y}}, {1, {f.first_tag + f.tag_spacing, f.lane_y}}};
}

/// Completes a scenario with a feed layout: route, start pose and tags.
inline Scenario resolve_feed(Scenario sc)
{
  if (!sc.feed) return sc;
  const FeedLayout& f = *sc.feed;
  if (sc.route.empty()) sc.route = make_feed_route(f);
  sc.initial = {f.first_tag - f.run_in, f.lane_y, 0.0};
  std::erase_if(sc.map.rfid_tags, [](const RfidTag& t) { return t.id == 0 || t.id == 1; });
  for (const auto& t : make_feed_tags(f)) sc.map.rfid_tags.push_back(t);
  sc.map.tag_spacing = f.tag_spacing;
  return sc;
}

inline std::vector<std::string> validate_scenario(const Scenario& sc)
{
  std::vector<std::string> out;
  auto add = [&](const std::string& prefix, const std::vector<std::string>& v) {
    for (const auto& s : v) out.push_back(prefix + s);
  };
  add("vehicle: ", sc.vehicle.validate());
  add("tracker: ", sc.tracker.validate());
  add("cosim: ", sc.cosim.validate());
  add("map: ", sc.map.validate());
  if (sc.feed) add("", sc.feed->validate());
  if (!sc.feed) {
    for (const auto& v : validate_route(sc.route)) {
      out.push_back("route: segment " + std::to_string(v.segment) + ": " + v.rule + ": " + v.detail);
    }
  }
  if (sc.waypoint_spacing < 0.0) out.emplace_back("route: waypoint spacing must be non-negative");
  if (!(sc.vision_period > 0.0)) out.emplace_back("sensors: vision period must be positive");
  if (sc.cruise_speed < 0.0 || sc.cruise_speed > kMaxModelSpeed) out.emplace_back("controller: cruise speed outside [0, 7.5] m/s");
  if (sc.encoder.counts_per_rev < 1) out.emplace_back("sensors: encoder counts per revolution must be >= 1");
  if (sc.load.load_mass < 0.0) out.emplace_back("load: mass must be non-negative");
  for (const auto& r : sc.readers) {
    if (!(r.semi_major > 0.0 && r.semi_minor > 0.0)) out.emplace_back("sensors: rfid zone semi-axes must be positive");
    if (out.empty() && sc.cosim.ct_step > 0.0) {
      const double n = r.poll_period / sc.cosim.ct_step;
      if (!(r.poll_period > 0.0) || std::abs(n - std::round(n)) > 1e-6 || std::round(n) < 1.0) {
        out.emplace_back("sensors: rfid poll period must be a positive multiple of ct_step");
      }
    }
  }
  return out;
}

/// Wheel radius the controller's odometry assumes.
inline double assumed_radius(const Scenario& sc, double true_radius, Rng& rng)
{
  const auto& loc = sc.localization;
  switch (loc.radius_method) {
    case RadiusMethod::True: return true_radius;
    case RadiusMethod::Fixed: return loc.fixed_radius;
    case RadiusMethod::Static: {
      LoadState empty = sc.load, full = sc.load;
      empty.load_mass = 0.0;
      full.load_mass = loc.full_load_mass;
      return 0.5 * (effective_wheel_radius(sc.vehicle, empty, sc.tyre) +
                    effective_wheel_radius(sc.vehicle, full, sc.tyre));
    }
    case RadiusMethod::PreCalibration: {
      return true_radius + gaussian(rng, loc.precal_accuracy);
    }
    case RadiusMethod::Estimator: return true_radius + loc.estimator_bias;
  }
  return true_radius;
}

// --- run ---------------------------------------------------------------------

inline Trace run(const Scenario& input)
{
  const Scenario sc = resolve_feed(input);
  {
    const auto problems = validate_scenario(sc);
    if (!problems.empty()) throw ConfigError(problems.front());
  }
  const auto& cfg = sc.cosim;
  const auto& loc = sc.localization;
  const int n_micro = cfg.micro_steps();

  Rng imu_rng = cosim_detail::stream(cfg.seed, cosim_detail::kImu);
  Rng vision_rng = cosim_detail::stream(cfg.seed, cosim_detail::kVision);
  Rng monitor_rng = cosim_detail::stream(cfg.seed, cosim_detail::kMonitor);
  Rng radius_rng = cosim_detail::stream(cfg.seed, cosim_detail::kRadius);
  Rng initial_rng = cosim_detail::stream(cfg.seed, cosim_detail::kInitial);

  Pose2D offset = sc.initial_offset;
  if (loc.mode == LocalizationMode::Ekf && loc.sample_initial_offset) {
    offset = {gaussian(initial_rng, loc.initial_sigma(0)), gaussian(initial_rng, loc.initial_sigma(1)),
              gaussian(initial_rng, loc.initial_sigma(2))};
  }
  DynamicState init;
  init.pose = make_pose(sc.initial.x + offset.x, sc.initial.y + offset.y, sc.initial.psi + offset.psi);
  init.u = sc.initial_speed;

  Plant plant(sc.vehicle, sc.load, sc.tyre, sc.model, sc.steer_axle, init);
  const double r_true = plant.effective_radius();
  const double r_assumed = assumed_radius(sc, r_true, radius_rng);

  const std::vector<Waypoint> waypoints =
      sc.waypoint_spacing > 0.0 ? sc.route.densify(sc.waypoint_spacing) : sc.route.waypoints();
  PathTracker tracker(waypoints, sc.tracker);

  std::optional<FeedPlan> plan;
  FeedState feed_state;
  if (sc.feed) plan = make_feed_plan(*sc.feed);

  std::vector<RfidReader> readers;
  for (const auto& m : sc.readers) readers.emplace_back(m);
  std::vector<int> poll_every;
  for (const auto& m : sc.readers) poll_every.push_back(static_cast<int>(std::llround(m.poll_period / cfg.ct_step)));

  const bool use_ekf = loc.mode == LocalizationMode::Ekf;
  Belief belief;
  belief.mean = Vector3(sc.initial.x, sc.initial.y, normalize_angle(sc.initial.psi));
  belief.cov = loc.initial_sigma.cwiseProduct(loc.initial_sigma).asDiagonal();
  FilterDiagnostics diag;
  std::vector<cosim_detail::MeanSample> history;
  std::map<std::pair<int, int>, double> rfid_in;  // (tag, reader index) -> In time
  struct PendingEdge {
    TagEvent event;
    std::size_t reader;
  };
  std::vector<PendingEdge> pending;

  Trace trace;
  TraceSummary& sum = trace.summary;
  sum.true_radius = r_true;
  sum.assumed_radius = r_assumed;
  if (plan) sum.b_tot = plan->placements.size();

  std::array<double, 2> counts_prev{};
  for (int w = 0; w < 2; ++w) {
    counts_prev[w] = encoder_sample(plant.state().wheel_travel[w], sc.encoder.counts_per_rev, sc.encoder.quantized);
  }
  double psi_prev = plant.state().pose.psi;
  const int vision_every = std::max(1, static_cast<int>(std::llround(sc.vision_period / cfg.de_period)));

  auto check_cov = [&]() {
    if (!is_symmetric_psd(belief.cov)) ++sum.covariance_violations;
  };

  long long micro = 0;
  double sq_sum = 0.0, abs_sum = 0.0;
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.de_period;
    const DynamicState truth = plant.state();
    TraceRow row;
    row.t = t;
    row.x_true = truth.pose.x;
    row.y_true = truth.pose.y;
    row.psi_true = truth.pose.psi;
    row.u = truth.u;
    row.v = truth.v;
    row.yaw_rate = truth.yaw_rate;
    row.roll = truth.roll;
    row.xte = xte(truth.pose, sc.route);

    // (1) sensors -> monitored values
    double yaw_meas = imu_sample(truth.yaw_rate, sc.imu, imu_rng);
    if (use_ekf) {
      if (k > 0) {
        std::vector<double> deltas(2);
        for (int w = 0; w < 2; ++w) {
          const double c = encoder_sample(truth.wheel_travel[w], sc.encoder.counts_per_rev, sc.encoder.quantized);
          deltas[w] = c - counts_prev[w];
          counts_prev[w] = c;
        }
        const double speed = speed_estimate(deltas, cfg.de_period, r_assumed, sc.encoder.counts_per_rev);
        yaw_meas = imu_sample(normalize_angle(truth.pose.psi - psi_prev) / cfg.de_period, sc.imu, imu_rng);
        const Matrix3 q = process_noise(belief.mean, speed, yaw_meas, cfg.de_period, loc.noise);
        belief = predict(belief, speed, yaw_meas, cfg.de_period, q, &diag);
        check_cov();
      }
      history.push_back({t, belief.mean});

      if (loc.use_poles && k % vision_every == 0) {
        for (const auto& obs : vision_poles(truth.pose, sc.map, sc.vision, vision_rng)) {
          belief = update_pole(belief, Vector2(obs.range, obs.bearing), sc.map.poles[obs.landmark], loc.noise.pole, &diag);
          check_cov();
        }
      }
      if (loc.use_sidewall && sc.map.sidewall && k % vision_every == 0) {
        const auto obs = vision_sidewall(truth.pose, *sc.map.sidewall, sc.vision, vision_rng);
        belief = update_sidewall(belief, Vector2(obs.distance, obs.angle), *sc.map.sidewall, loc.noise.sidewall, &diag);
        check_cov();
      }
    }
    for (const auto& pe : pending) {
      const auto& e = pe.event;
      row.events.push_back("tag:" + std::to_string(e.tag_id) + ":" + to_string(e.reader) + ":" + to_string(e.edge));
      const auto key = std::make_pair(e.tag_id, static_cast<int>(pe.reader));
      if (e.edge == TagEdge::In) {
        rfid_in[key] = e.time;
        continue;
      }
      auto it = rfid_in.find(key);
      if (it == rfid_in.end()) continue;
      const double t_mid = 0.5 * (it->second + e.time);
      rfid_in.erase(it);
      if (!use_ekf || !loc.use_rfid) continue;
      const RfidTag* tag = sc.map.find_tag(e.tag_id);
      if (!tag) continue;
      // Vehicle reference point when the reader sat over the tag, carried
      // forward by the belief's motion since then.
      const Vector3 then = cosim_detail::interpolate(history, t_mid);
      const double mo = sc.readers[pe.reader].mount_offset;
      const Vec2 effective{tag->position.x - mo * std::cos(then(2)) + belief.mean(0) - then(0),
                           tag->position.y - mo * std::sin(then(2)) + belief.mean(1) - then(1)};
      belief = update_rfid(belief, effective, loc.noise.rfid, loc.rfid_model, &diag);
      check_cov();
    }
    pending.clear();
    if (use_ekf) history.back().mean = belief.mean;

    Pose2D monitored = truth.pose;
    double psi_dot_s = truth.yaw_rate;
    if (loc.mode == LocalizationMode::Noisy) {
      monitored = make_pose(truth.pose.x + gaussian(monitor_rng, loc.position_sigma),
                            truth.pose.y + gaussian(monitor_rng, loc.position_sigma),
                            truth.pose.psi + gaussian(monitor_rng, loc.heading_sigma));
      psi_dot_s = yaw_meas;
    } else if (use_ekf) {
      monitored = belief.pose();
      psi_dot_s = yaw_meas;
      row.ekf_x = belief.mean(0);
      row.ekf_y = belief.mean(1);
      row.ekf_psi = belief.mean(2);
      row.ekf_trace_p = belief.cov.trace();
    }
    row.x_s = monitored.x;
    row.y_s = monitored.y;
    row.psi_s = monitored.psi;
    row.psi_dot_s = psi_dot_s;
    psi_prev = truth.pose.psi;

    // (2) controller
    ActuatorCommand cmd;
    bool done = false;
    try {
      cmd.steer = tracker.steer(monitored);
      cmd.speed = sc.cruise_speed;
      if (plan) {
        const ControlOutput out = feed_step(monitored, *plan, feed_state, t, sc.cruise_speed);
        cmd.speed = out.speed;
        if (out.dispense) {
          DispenseRecord rec;
          rec.index = out.dispense->index;
          rec.planned = plan->placements[rec.index].position;
          rec.actual = plan->along(truth.pose.position());
          rec.grams = out.dispense->grams;
          rec.time = t;
          rec.hit = std::abs(rec.actual - rec.planned) <= plan->half_tolerance;
          if (rec.hit) ++sum.b_suc;
          sum.dispenses.push_back(rec);
          row.events.push_back("dispense:" + std::to_string(rec.index) + (rec.hit ? ":hit" : ":miss"));
        }
        done = feed_state.phase == FeedPhase::Done || tracker.finished();
      } else {
        done = tracker.finished();
      }
    } catch (const RouteExhausted& e) {
      sum.termination = Termination::Fault;
      sum.fault = std::string("controller: ") + e.what();
      row.events.push_back("fault:route-exhausted");
      trace.rows.push_back(std::move(row));
      break;
    }
    row.u_o = cmd.speed;
    row.delta_o = cmd.steer;

    if (done) {
      sum.termination = Termination::Completed;
      row.events.push_back("end:completed");
      trace.rows.push_back(std::move(row));
      break;
    }
    const double t_next = static_cast<double>(k + 1) * cfg.de_period;
    if (t_next > cfg.duration_cap + 1e-9) {
      sum.termination = Termination::DurationCap;
      row.events.push_back("end:duration-cap");
      trace.rows.push_back(std::move(row));
      break;
    }
    trace.rows.push_back(std::move(row));

    // (3) plant micro-steps under held commands
    std::string fault;
    try {
      for (int i = 0; i < n_micro; ++i) {
        plant.step(cmd, cfg.ct_step);
        ++micro;
        const double tm = static_cast<double>(micro) * cfg.ct_step;
        for (std::size_t r = 0; r < readers.size(); ++r) {
          if (micro % poll_every[r] != 0) continue;
          for (const auto& e : readers[r].poll(plant.state().pose, sc.map, tm)) pending.push_back({e, r});
        }
      }
    } catch (const RolloverFault& e) {
      fault = e.what();
    } catch (const NonFiniteState& e) {
      fault = std::string("non-finite state: ") + e.what();
    } catch (const std::invalid_argument& e) {
      fault = std::string("plant: ") + e.what();
    }
    if (!fault.empty()) {
      const DynamicState s = plant.state();
      TraceRow f;
      f.t = t_next;
      f.x_true = s.pose.x;
      f.y_true = s.pose.y;
      f.psi_true = s.pose.psi;
      f.u = s.u;
      f.v = s.v;
      f.yaw_rate = s.yaw_rate;
      f.roll = s.roll;
      f.x_s = f.y_s = f.psi_s = f.psi_dot_s = kNaN;
      f.u_o = cmd.speed;
      f.delta_o = cmd.steer;
      f.xte = std::isfinite(s.pose.x) && std::isfinite(s.pose.y) ? xte(s.pose, sc.route) : kNaN;
      f.events.push_back(fault.rfind("rollover", 0) == 0 ? "fault:rollover" : "fault:plant");
      trace.rows.push_back(std::move(f));
      sum.termination = Termination::Fault;
      sum.fault = fault;
      break;
    }
  }

  for (const auto& r : trace.rows) {
    if (!std::isfinite(r.xte)) continue;
    sum.max_xte = std::max(sum.max_xte, r.xte);
    abs_sum += r.xte;
    sq_sum += r.xte * r.xte;
  }
  const double n = static_cast<double>(trace.rows.size());
  sum.mean_xte = abs_sum / n;
  sum.rms_xte = std::sqrt(sq_sum / n);
  sum.duration = trace.rows.back().t;
  sum.filter = diag;
  if (use_ekf) {
    const TraceRow& last = trace.rows.back();
    if (std::isfinite(last.ekf_x)) sum.final_position_error = std::hypot(last.x_true - last.ekf_x, last.y_true - last.ekf_y);
  }
  return trace;
}

// --- evaluation --------------------------------------------------------------

inline double feed_cost(std::size_t b_suc, std::size_t b_tot)
{
  if (b_tot == 0) throw std::invalid_argument("feed_cost: b_tot must be positive");
  if (b_suc > b_tot) throw std::invalid_argument("feed_cost: b_suc exceeds b_tot");
  const double s = static_cast<double>(b_suc);
  return -s * s / static_cast<double>(b_tot);
}

struct MaxXte {
  double threshold = 0.3;
};
struct FeedSuccess {};
using Criterion = std::variant<MaxXte, FeedSuccess>;

struct Evaluation {
  bool viable = false;
  double cost = kNaN;
  double max_xte = 0.0;
  std::size_t b_suc = 0;
  std::size_t b_tot = 0;
  std::string reason;
  std::vector<Vec2> path;  // true positions, filled on request
};

inline Evaluation evaluate(const Trace& trace, const Criterion& criterion)
{
  const TraceSummary& s = trace.summary;
  Evaluation ev;
  ev.max_xte = s.max_xte;
  ev.b_suc = s.b_suc;
  ev.b_tot = s.b_tot;
  if (trace.rows.empty()) {
    ev.reason = "empty trace";
    return ev;
  }
  if (std::holds_alternative<MaxXte>(criterion)) {
    const double th = std::get<MaxXte>(criterion).threshold;
    ev.cost = s.max_xte;
    if (s.termination != Termination::Completed) {
      ev.reason = std::string("run ended by ") + to_string(s.termination) + (s.fault.empty() ? "" : ": " + s.fault);
    } else if (s.max_xte > th) {
      ev.reason = "max XTE above threshold";
    } else {
      ev.viable = true;
    }
    return ev;
  }
  if (s.b_tot == 0) {
    ev.reason = "no placements";
    return ev;
  }
  ev.cost = feed_cost(s.b_suc, s.b_tot);
  if (s.termination == Termination::Fault) {
    ev.reason = "fault: " + s.fault;
  } else {
    ev.viable = s.b_suc == s.b_tot;
    if (!ev.viable) ev.reason = "missed placements";
  }
  return ev;
}

}  // namespace agrisim
