#pragma once

// Line-oriented scenario files:
//
//   # comment
//   [section]
//   key = value unit
//
// Every dimensional number carries a unit; a unit token applies to all
// preceding dimensional numbers of the same line that have none yet, so
// "line_to = 20 0 m" sets both coordinates. Unknown sections and keys are
// errors, reported with line numbers.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/cosim.hpp"
#include "agrisim/dse.hpp"

namespace agrisim {

struct ScenarioError : ConfigError {
  explicit ScenarioError(std::vector<std::string> errors)
      : ConfigError(errors.empty() ? "scenario error" : errors.front()), errors(std::move(errors))
  {
  }
  std::vector<std::string> errors;
};

struct MatrixSpec {
  MinMeanMaxSet set;
  ExpansionMode mode = ExpansionMode::OneFactorAtATime;
  std::vector<double> compressions{0.001, 0.02, 0.04};
  std::vector<RadiusMethod> methods{RadiusMethod::Static, RadiusMethod::PreCalibration, RadiusMethod::Estimator};
  double tolerance = 0.01;  // m
};

struct ScenarioFile {
  Scenario scenario;
  std::optional<DesignSpace> design;
  Criterion criterion = MaxXte{0.3};
  std::optional<MatrixSpec> matrix;
};

enum class Dim {
  None, Length, Time, Mass, Angle, Speed, AngularRate, PerLength, Force, Cornering, RollStiffness, RollDamping,
  Inertia, Compliance, Grams
};

namespace scenario_detail {

struct UnitDef {
  Dim dim;
  double factor;
};

inline const std::map<std::string, UnitDef>& units()
{
  static const std::map<std::string, UnitDef> table{
      {"m", {Dim::Length, 1.0}},        {"cm", {Dim::Length, 0.01}},
      {"mm", {Dim::Length, 0.001}},     {"s", {Dim::Time, 1.0}},
      {"ms", {Dim::Time, 0.001}},       {"kg", {Dim::Mass, 1.0}},
      {"rad", {Dim::Angle, 1.0}},       {"deg", {Dim::Angle, kPi / 180.0}},
      {"m/s", {Dim::Speed, 1.0}},       {"km/h", {Dim::Speed, 1.0 / 3.6}},
      {"rad/s", {Dim::AngularRate, 1.0}}, {"deg/s", {Dim::AngularRate, kPi / 180.0}},
      {"rad/m", {Dim::PerLength, 1.0}}, {"N", {Dim::Force, 1.0}},
      {"N/rad", {Dim::Cornering, 1.0}}, {"N*m/rad", {Dim::RollStiffness, 1.0}},
      {"N*m*s/rad", {Dim::RollDamping, 1.0}}, {"kg*m^2", {Dim::Inertia, 1.0}},
      {"m/N", {Dim::Compliance, 1.0}},  {"g", {Dim::Grams, 1.0}},
  };
  return table;
}

inline const char* si_unit(Dim d)
{
  switch (d) {
    case Dim::None: return "";
    case Dim::Length: return "m";
    case Dim::Time: return "s";
    case Dim::Mass: return "kg";
    case Dim::Angle: return "rad";
    case Dim::Speed: return "m/s";
    case Dim::AngularRate: return "rad/s";
    case Dim::PerLength: return "rad/m";
    case Dim::Force: return "N";
    case Dim::Cornering: return "N/rad";
    case Dim::RollStiffness: return "N*m/rad";
    case Dim::RollDamping: return "N*m*s/rad";
    case Dim::Inertia: return "kg*m^2";
    case Dim::Compliance: return "m/N";
    case Dim::Grams: return "g";
  }
  return "";
}

inline std::optional<double> parse_number(const std::string& tok)
{
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline bool looks_like_unit(const std::string& tok)
{
  if (tok.empty()) return false;
  for (char c : tok) {
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '/' || c == '*' || c == '^' || std::isdigit(static_cast<unsigned char>(c)))) return false;
  }
  return std::isalpha(static_cast<unsigned char>(tok.front())) && (tok.find('/') != std::string::npos || tok.size() <= 3);
}

/// Right-hand side of one `key = value` line.
class Values {
 public:
  Values(int line, std::string key, const std::string& rhs, std::vector<std::string>& errors)
      : line_(line), key_(std::move(key)), errors_(errors)
  {
    std::istringstream in(rhs);
    for (std::string t; in >> t;) tokens_.push_back(t);
  }

  int line() const { return line_; }
  const std::string& key() const { return key_; }

  void error(const std::string& msg)
  {
    failed_ = true;
    errors_.push_back("line " + std::to_string(line_) + ": " + key_ + ": " + msg);
  }

  /// Numbers with the expected dimensions, converted to SI.
  std::optional<std::vector<double>> numbers(const std::vector<Dim>& dims)
  {
    std::vector<double> out;
    std::vector<std::size_t> pending;
    while (out.size() < dims.size() || !pending.empty()) {
      if (pos_ >= tokens_.size()) {
        if (out.size() < dims.size()) error("expected " + std::to_string(dims.size()) + " number(s)");
        else error(std::string("missing unit, expected ") + si_unit(dims[pending.front()]));
        return std::nullopt;
      }
      const std::string& tok = tokens_[pos_];
      if (auto v = parse_number(tok)) {
        if (out.size() >= dims.size()) {
          error(std::string("missing unit, expected ") + si_unit(dims[pending.front()]));
          return std::nullopt;
        }
        out.push_back(*v);
        if (dims[out.size() - 1] != Dim::None) pending.push_back(out.size() - 1);
        ++pos_;
        continue;
      }
      auto u = units().find(tok);
      if (u == units().end()) {
        if (!pending.empty() || looks_like_unit(tok)) {
          error("unknown or malformed unit '" + tok + "'");
        } else {
          error("expected a number, got '" + tok + "'");
        }
        return std::nullopt;
      }
      if (pending.empty()) {
        error("unit '" + tok + "' without a dimensional number");
        return std::nullopt;
      }
      for (std::size_t i : pending) {
        if (dims[i] != u->second.dim) {
          error("unit '" + tok + "' does not match expected " + si_unit(dims[i]));
          return std::nullopt;
        }
        out[i] *= u->second.factor;
      }
      pending.clear();
      ++pos_;
    }
    return out;
  }

  /// One or more numbers sharing a single trailing unit.
  std::optional<std::vector<double>> number_list(Dim d)
  {
    std::size_t n = 0;
    while (pos_ + n < tokens_.size() && parse_number(tokens_[pos_ + n])) ++n;
    if (n == 0) {
      error("expected at least one number");
      return std::nullopt;
    }
    return numbers(std::vector<Dim>(n, d));
  }

  std::optional<double> number(Dim d)
  {
    auto v = numbers({d});
    if (!v) return std::nullopt;
    return v->front();
  }

  std::optional<std::string> word()
  {
    if (pos_ >= tokens_.size()) {
      error("expected a word");
      return std::nullopt;
    }
    return tokens_[pos_++];
  }

  std::optional<bool> boolean()
  {
    auto w = word();
    if (!w) return std::nullopt;
    if (*w == "true" || *w == "yes" || *w == "on") return true;
    if (*w == "false" || *w == "no" || *w == "off") return false;
    error("expected true or false, got '" + *w + "'");
    return std::nullopt;
  }

  bool at_end() const { return pos_ >= tokens_.size(); }

  std::optional<std::string> peek() const
  {
    if (pos_ >= tokens_.size()) return std::nullopt;
    return tokens_[pos_];
  }

  std::string rest()
  {
    std::string out;
    for (; pos_ < tokens_.size(); ++pos_) out += (out.empty() ? "" : " ") + tokens_[pos_];
    return out;
  }

  void finish()
  {
    if (!failed_ && pos_ < tokens_.size()) error("unexpected trailing '" + tokens_[pos_] + "'");
  }

 private:
  int line_;
  std::string key_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
  bool failed_ = false;
  std::vector<std::string>& errors_;
};

template <class Enum>
std::optional<Enum> choose(Values& v, const std::vector<std::pair<const char*, Enum>>& options)
{
  auto w = v.word();
  if (!w) return std::nullopt;
  for (const auto& [name, e] : options) {
    if (*w == name) return e;
  }
  std::string names;
  for (const auto& [name, e] : options) names += (names.empty() ? "" : ", ") + std::string(name);
  v.error("unknown value '" + *w + "' (expected one of " + names + ")");
  return std::nullopt;
}

inline const std::vector<std::pair<const char*, PlantModel>> kModels{
    {"kinematic", PlantModel::Kinematic}, {"half-vehicle", PlantModel::HalfVehicle}, {"four-wheel", PlantModel::FourWheel}};
inline const std::vector<std::pair<const char*, SteerAxle>> kAxles{{"front", SteerAxle::Front}, {"back", SteerAxle::Back}};
inline const std::vector<std::pair<const char*, TrackingMethod>> kMethods{
    {"heading", TrackingMethod::HeadingError}, {"lateral", TrackingMethod::LateralError}, {"segment", TrackingMethod::LineSegment}};
inline const std::vector<std::pair<const char*, LocalizationMode>> kModes{
    {"truth", LocalizationMode::Truth}, {"noisy", LocalizationMode::Noisy}, {"ekf", LocalizationMode::Ekf}};
inline const std::vector<std::pair<const char*, RfidModel>> kRfidModels{{"verbatim", RfidModel::Verbatim}, {"body", RfidModel::BodyFrame}};
inline const std::vector<std::pair<const char*, RadiusMethod>> kRadius{
    {"true", RadiusMethod::True}, {"fixed", RadiusMethod::Fixed}, {"static", RadiusMethod::Static},
    {"pre-calibration", RadiusMethod::PreCalibration}, {"estimator", RadiusMethod::Estimator}};
inline const std::vector<std::pair<const char*, ReaderPosition>> kReaders{{"front", ReaderPosition::Front}, {"rear", ReaderPosition::Rear}};
inline const std::vector<std::pair<const char*, TurnDirection>> kTurns{{"ccw", TurnDirection::Ccw}, {"cw", TurnDirection::Cw}};
inline const std::vector<std::pair<const char*, CompressionMode>> kCompression{{"table", CompressionMode::Table}, {"linear", CompressionMode::Linear}};
inline const std::vector<std::pair<const char*, ExpansionMode>> kExpansion{
    {"ofat", ExpansionMode::OneFactorAtATime}, {"full", ExpansionMode::FullFactorial}};

template <class Enum>
const char* name_of(const std::vector<std::pair<const char*, Enum>>& options, Enum e)
{
  for (const auto& [name, v] : options) {
    if (v == e) return name;
  }
  return "?";
}

/// Dimension of a design parameter.
inline std::optional<Dim> parameter_dim(const std::string& name)
{
  static const std::map<std::string, Dim> dims{
      {"speed", Dim::Speed},        {"cg_shift", Dim::Length},  {"friction", Dim::None},
      {"load", Dim::Mass},          {"tyre_compression", Dim::Length}, {"x_init", Dim::Length},
      {"y_init", Dim::Length},      {"psi_init", Dim::Angle},   {"tag_spacing", Dim::Length},
      {"look_ahead", Dim::Length}};
  auto it = dims.find(name);
  if (it == dims.end()) return std::nullopt;
  return it->second;
}

inline bool is_mode_parameter(const std::string& name) { return name == "radius_method" || name == "tracking_method"; }

struct RouteBuilder {
  std::optional<Vec2> start;
  std::vector<RouteSegment> segments;

  Vec2 cursor() const { return segments.empty() ? *start : segments.back().end; }
};

}  // namespace scenario_detail

inline ScenarioFile parse_scenario(const std::string& text)
{
  using namespace scenario_detail;
  ScenarioFile file;
  Scenario& sc = file.scenario;
  std::vector<std::string> errors;
  std::string section;
  RouteBuilder route;
  bool tyre_table_seen = false;
  std::map<std::string, int> seen_keys;  // "section.key" -> line, for duplicate detection

  auto set = [&](Values& v, Dim d, double& target) {
    if (auto x = v.number(d)) target = *x;
  };
  auto set_bool = [&](Values& v, bool& target) {
    if (auto x = v.boolean()) target = *x;
  };
  const std::vector<std::string> repeatable{"route.line_to", "route.arc_to", "map.pole", "map.tag", "map.feed_zone",
                                            "tyre.point",    "design.axis",  "matrix.factor"};

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = line.substr(1, line.size() - 2);
      static const std::vector<std::string> known{"scenario", "vehicle", "load", "tyre", "initial", "route", "map",
                                                  "sensors", "reader", "controller", "localization", "feed",
                                                  "cosim", "sdps", "design", "matrix"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        errors.push_back("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
        section = "?";
      }
      if (section == "reader") sc.readers.emplace_back();
      if (section == "feed" && !sc.feed) sc.feed = FeedLayout{};
      if (section == "design" && !file.design) file.design = DesignSpace{};
      if (section == "matrix" && !file.matrix) {
        file.matrix = MatrixSpec{};
        file.matrix->set.factors.clear();
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    std::string key = line.substr(0, eq);
    key = key.substr(0, key.find_last_not_of(" \t") + 1);
    Values v(lineno, key, line.substr(eq + 1), errors);
    if (section.empty()) {
      v.error("key outside of a section");
      continue;
    }
    if (section == "?") continue;
    const std::string qualified = section + "." + key;
    if (section != "reader" && section != "sdps" &&
        std::find(repeatable.begin(), repeatable.end(), qualified) == repeatable.end()) {
      auto [it, fresh] = seen_keys.emplace(qualified, lineno);
      if (!fresh) {
        v.error("duplicate key (first set on line " + std::to_string(it->second) + ")");
        continue;
      }
    }

    bool known = true;
    if (section == "scenario") {
      if (key == "name") sc.name = v.rest();
      else known = false;
    } else if (section == "vehicle") {
      auto& p = sc.vehicle;
      if (key == "model") { if (auto e = choose(v, kModels)) sc.model = *e; }
      else if (key == "steer_axle") { if (auto e = choose(v, kAxles)) sc.steer_axle = *e; }
      else if (key == "mass") set(v, Dim::Mass, p.mass);
      else if (key == "wheelbase") set(v, Dim::Length, p.wheelbase);
      else if (key == "cg_to_front") set(v, Dim::Length, p.cg_to_front);
      else if (key == "track_width") set(v, Dim::Length, p.track_width);
      else if (key == "cg_height") set(v, Dim::Length, p.cg_height);
      else if (key == "yaw_inertia") set(v, Dim::Inertia, p.yaw_inertia);
      else if (key == "roll_inertia") set(v, Dim::Inertia, p.roll_inertia);
      else if (key == "roll_stiffness") set(v, Dim::RollStiffness, p.roll_stiffness);
      else if (key == "roll_damping") set(v, Dim::RollDamping, p.roll_damping);
      else if (key == "cornering_front") set(v, Dim::Cornering, p.cornering_front);
      else if (key == "cornering_rear") set(v, Dim::Cornering, p.cornering_rear);
      else if (key == "wheel_radius") set(v, Dim::Length, p.wheel_radius);
      else if (key == "friction") set(v, Dim::None, p.friction);
      else if (key == "steer_limit") set(v, Dim::Angle, p.steer_limit);
      else if (key == "steer_rate_limit") set(v, Dim::AngularRate, p.steer_rate_limit);
      else if (key == "steer_lag") set(v, Dim::Time, p.steer_lag);
      else if (key == "speed_lag") set(v, Dim::Time, p.speed_lag);
      else if (key == "roll_load_shift") set(v, Dim::Cornering, p.roll_load_shift);
      else known = false;
    } else if (section == "load") {
      if (key == "mass") set(v, Dim::Mass, sc.load.load_mass);
      else if (key == "cg_shift") set(v, Dim::Length, sc.load.cg_shift);
      else if (key == "full_mass") set(v, Dim::Mass, sc.localization.full_load_mass);
      else known = false;
    } else if (section == "tyre") {
      if (key == "mode") { if (auto e = choose(v, kCompression)) sc.tyre.mode = *e; }
      else if (key == "gain") set(v, Dim::Compliance, sc.tyre.gain);
      else if (key == "point") {
        if (auto x = v.numbers({Dim::Mass, Dim::Length})) {
          if (!tyre_table_seen) sc.tyre.table.clear();
          tyre_table_seen = true;
          sc.tyre.table.emplace_back((*x)[0], (*x)[1]);
        }
      } else known = false;
    } else if (section == "initial") {
      if (key == "pose" || key == "offset") {
        if (auto x = v.numbers({Dim::Length, Dim::Length, Dim::Angle})) {
          (key == "pose" ? sc.initial : sc.initial_offset) = Pose2D{(*x)[0], (*x)[1], (*x)[2]};
        }
      } else if (key == "speed") set(v, Dim::Speed, sc.initial_speed);
      else known = false;
    } else if (section == "route") {
      if (key == "spacing") set(v, Dim::Length, sc.waypoint_spacing);
      else if (key == "start") {
        if (auto x = v.numbers({Dim::Length, Dim::Length})) route.start = Vec2{(*x)[0], (*x)[1]};
      } else if (key == "line_to" || key == "arc_to") {
        if (!route.start) {
          v.error("route segment before 'start'");
        } else if (key == "line_to") {
          if (auto x = v.numbers({Dim::Length, Dim::Length})) {
            route.segments.push_back(RouteSegment::line(route.cursor(), {(*x)[0], (*x)[1]}));
          }
        } else if (auto x = v.numbers({Dim::Length, Dim::Length, Dim::Length})) {
          if (auto dir = choose(v, kTurns)) {
            route.segments.push_back(RouteSegment::arc(route.cursor(), {(*x)[0], (*x)[1]}, (*x)[2], *dir));
          }
        }
      } else known = false;
    } else if (section == "map") {
      auto& m = sc.map;
      if (key == "pole") {
        if (auto x = v.numbers({Dim::Length, Dim::Length})) m.poles.push_back({(*x)[0], (*x)[1]});
      } else if (key == "wall") {
        if (auto x = v.numbers({Dim::None, Dim::None, Dim::Length})) m.sidewall = WallLine{(*x)[0], (*x)[1], (*x)[2]};
      } else if (key == "tag") {
        if (auto x = v.numbers({Dim::None, Dim::Length, Dim::Length})) {
          if ((*x)[0] != std::floor((*x)[0])) v.error("tag id must be an integer");
          m.rfid_tags.push_back({static_cast<int>((*x)[0]), {(*x)[1], (*x)[2]}});
        }
      } else if (key == "feed_zone") {
        if (auto x = v.numbers({Dim::Length, Dim::Length, Dim::Length})) m.feed_zones.push_back({{(*x)[0], (*x)[1]}, (*x)[2]});
      } else if (key == "tag_spacing") {
        if (auto x = v.number(Dim::Length)) m.tag_spacing = *x;
      } else known = false;
    } else if (section == "sensors") {
      auto& vis = sc.vision;
      if (key == "encoder_counts") {
        if (auto x = v.number(Dim::None)) sc.encoder.counts_per_rev = static_cast<int>(*x);
      } else if (key == "encoder_quantized") set_bool(v, sc.encoder.quantized);
      else if (key == "imu_sigma") set(v, Dim::AngularRate, sc.imu.yaw_rate_sigma);
      else if (key == "imu_bias") set(v, Dim::AngularRate, sc.imu.bias);
      else if (key == "vision_range") set(v, Dim::Length, vis.max_range);
      else if (key == "vision_fov") set(v, Dim::Angle, vis.field_of_view);
      else if (key == "range_sigma") set(v, Dim::Length, vis.range_sigma);
      else if (key == "bearing_sigma") set(v, Dim::Angle, vis.bearing_sigma);
      else if (key == "wall_distance_sigma") set(v, Dim::Length, vis.wall_distance_sigma);
      else if (key == "wall_distance_bias") set(v, Dim::Length, vis.wall_distance_bias);
      else if (key == "wall_angle_sigma") set(v, Dim::Angle, vis.wall_angle_sigma);
      else if (key == "vision_period") set(v, Dim::Time, sc.vision_period);
      else known = false;
    } else if (section == "reader") {
      auto& r = sc.readers.back();
      if (key == "position") { if (auto e = choose(v, kReaders)) r.position = *e; }
      else if (key == "mount_offset") set(v, Dim::Length, r.mount_offset);
      else if (key == "semi_major") set(v, Dim::Length, r.semi_major);
      else if (key == "semi_minor") set(v, Dim::Length, r.semi_minor);
      else if (key == "poll_period") set(v, Dim::Time, r.poll_period);
      else known = false;
    } else if (section == "controller") {
      auto& t = sc.tracker;
      if (key == "method") { if (auto e = choose(v, kMethods)) t.method = *e; }
      else if (key == "look_ahead") set(v, Dim::Length, t.look_ahead);
      else if (key == "gain_heading") set(v, Dim::None, t.gain_heading);
      else if (key == "gain_lateral") set(v, Dim::PerLength, t.gain_lateral);
      else if (key == "max_steer") set(v, Dim::Angle, t.max_steer);
      else if (key == "cruise_speed") set(v, Dim::Speed, sc.cruise_speed);
      else known = false;
    } else if (section == "localization") {
      auto& l = sc.localization;
      auto sigma_pair = [&](Dim a, Dim b, Matrix2& target) {
        if (auto x = v.numbers({a, b})) target = Vector2((*x)[0] * (*x)[0], (*x)[1] * (*x)[1]).asDiagonal();
      };
      if (key == "mode") { if (auto e = choose(v, kModes)) l.mode = *e; }
      else if (key == "position_sigma") set(v, Dim::Length, l.position_sigma);
      else if (key == "heading_sigma") set(v, Dim::Angle, l.heading_sigma);
      else if (key == "speed_sigma_fraction") set(v, Dim::None, l.noise.speed_sigma_fraction);
      else if (key == "speed_sigma_floor") set(v, Dim::Speed, l.noise.speed_sigma_floor);
      else if (key == "yaw_rate_sigma") set(v, Dim::AngularRate, l.noise.yaw_rate_sigma);
      else if (key == "drift_density") set(v, Dim::Length, l.noise.drift_density);
      else if (key == "initial_sigma") {
        if (auto x = v.numbers({Dim::Length, Dim::Length, Dim::Angle})) l.initial_sigma = Vector3((*x)[0], (*x)[1], (*x)[2]);
      } else if (key == "sample_initial_offset") set_bool(v, l.sample_initial_offset);
      else if (key == "rfid_model") { if (auto e = choose(v, kRfidModels)) l.rfid_model = *e; }
      else if (key == "use_poles") set_bool(v, l.use_poles);
      else if (key == "use_sidewall") set_bool(v, l.use_sidewall);
      else if (key == "use_rfid") set_bool(v, l.use_rfid);
      else if (key == "pole_sigma") sigma_pair(Dim::Length, Dim::Angle, l.noise.pole);
      else if (key == "sidewall_sigma") sigma_pair(Dim::Length, Dim::Angle, l.noise.sidewall);
      else if (key == "rfid_sigma") sigma_pair(Dim::Length, Dim::Length, l.noise.rfid);
      else if (key == "radius_method") { if (auto e = choose(v, kRadius)) l.radius_method = *e; }
      else if (key == "fixed_radius") set(v, Dim::Length, l.fixed_radius);
      else if (key == "precal_accuracy") set(v, Dim::Length, l.precal_accuracy);
      else if (key == "estimator_bias") set(v, Dim::Length, l.estimator_bias);
      else known = false;
    } else if (section == "feed") {
      auto& f = *sc.feed;
      if (key == "first_tag") set(v, Dim::Length, f.first_tag);
      else if (key == "tag_spacing") set(v, Dim::Length, f.tag_spacing);
      else if (key == "placement_spacing") set(v, Dim::Length, f.placement_spacing);
      else if (key == "grams") set(v, Dim::Grams, f.grams);
      else if (key == "lane_y") set(v, Dim::Length, f.lane_y);
      else if (key == "run_in") set(v, Dim::Length, f.run_in);
      else if (key == "run_out") set(v, Dim::Length, f.run_out);
      else if (key == "entry_offset") set(v, Dim::Length, f.entry_offset);
      else if (key == "deploy_time") set(v, Dim::Time, f.deploy_time);
      else if (key == "speed_cap") set(v, Dim::Speed, f.speed_cap);
      else if (key == "tolerance") set(v, Dim::Length, f.half_tolerance);
      else known = false;
    } else if (section == "cosim") {
      auto& c = sc.cosim;
      if (key == "de_period") set(v, Dim::Time, c.de_period);
      else if (key == "ct_step") set(v, Dim::Time, c.ct_step);
      else if (key == "duration_cap") set(v, Dim::Time, c.duration_cap);
      else if (key == "seed") {
        if (auto x = v.number(Dim::None)) {
          if (*x < 0.0 || *x != std::floor(*x)) v.error("seed must be a non-negative integer");
          else c.seed = static_cast<std::uint64_t>(*x);
        }
      } else known = false;
    } else if (section == "sdps") {
      // value with an optional unit; stored in SI
      auto tok = v.rest();
      std::istringstream ts(tok);
      std::string num, unit, extra;
      ts >> num >> unit >> extra;
      auto x = parse_number(num);
      if (!x) v.error("expected a number");
      else if (!extra.empty()) v.error("unexpected trailing '" + extra + "'");
      else if (!unit.empty()) {
        auto u = units().find(unit);
        if (u == units().end()) v.error("unknown or malformed unit '" + unit + "'");
        else sc.sdps[key] = *x * u->second.factor;
      } else {
        sc.sdps[key] = *x;
      }
    } else if (section == "design") {
      if (key == "axis") {
        auto name = v.word();
        auto kind = name ? v.word() : std::nullopt;
        if (name && kind) {
          Axis axis{*name, DiscreteSet{}};
          if (is_mode_parameter(*name)) {
            if (*kind != "modes") v.error("parameter " + *name + " takes 'modes'");
            ModeSet ms;
            while (!v.at_end()) ms.modes.push_back(*v.word());
            for (const auto& m : ms.modes) {
              try {
                if (*name == "radius_method") parse_radius_method(m);
                else if (m != "heading" && m != "lateral" && m != "segment") v.error("unknown tracking method '" + m + "'");
              } catch (const ConfigError& e) {
                v.error(e.what());
              }
            }
            axis.domain = ms;
          } else if (auto d = parameter_dim(*name)) {
            if (*kind == "range") {
              if (auto x = v.numbers({*d, *d, *d})) axis.domain = ContinuousRange{(*x)[0], (*x)[1], (*x)[2]};
            } else if (*kind == "set") {
              if (auto x = v.number_list(*d)) axis.domain = DiscreteSet{*x};
            } else {
              v.error("axis kind must be 'range' or 'set'");
            }
          } else {
            v.error("unknown design parameter '" + *name + "'");
          }
          for (const auto& p : axis.validate()) v.error(p);
          file.design->axes.push_back(axis);
        }
      } else if (key == "criterion") {
        auto w = v.word();
        if (w && *w == "max-xte") {
          if (auto x = v.number(Dim::Length)) file.criterion = MaxXte{*x};
        } else if (w && *w == "feed-success") {
          file.criterion = FeedSuccess{};
        } else if (w) {
          v.error("criterion must be max-xte or feed-success");
        }
      } else known = false;
    } else if (section == "matrix") {
      auto& m = *file.matrix;
      if (key == "factor") {
        auto name = v.word();
        if (name) {
          if (auto d = parameter_dim(*name)) {
            if (auto x = v.numbers({*d, *d, *d})) m.set.factors.push_back({*name, (*x)[0], (*x)[1], (*x)[2]});
          } else {
            v.error("unknown factor '" + *name + "'");
          }
        }
      } else if (key == "mode") { if (auto e = choose(v, kExpansion)) m.mode = *e; }
      else if (key == "compressions") {
        if (auto x = v.number_list(Dim::Length)) m.compressions = *x;
      } else if (key == "methods") {
        m.methods.clear();
        while (!v.at_end()) {
          if (auto e = choose(v, kRadius)) m.methods.push_back(*e);
        }
      } else if (key == "tolerance") set(v, Dim::Length, m.tolerance);
      else known = false;
    }
    if (!known) {
      v.error("unknown key in [" + section + "]");
      continue;
    }
    v.finish();
  }

  if (file.matrix && file.matrix->set.factors.empty()) file.matrix->set = MinMeanMaxSet{};
  if (route.start) sc.route = Route(route.segments);
  if (errors.empty() && !route.start && !sc.feed) errors.push_back("route: missing 'start' in [route]");
  if (errors.empty() && route.start && route.segments.empty()) errors.push_back("route: needs at least one segment");
  if (errors.empty()) {
    for (const auto& p : validate_scenario(sc.feed ? resolve_feed(sc) : sc)) errors.push_back(p);
    if (file.design) {
      for (const auto& p : file.design->validate()) errors.push_back("design: " + p);
    }
    if (file.matrix) {
      for (const auto& p : file.matrix->set.validate()) errors.push_back("matrix: " + p);
      if (file.matrix->compressions.empty()) errors.emplace_back("matrix: no compressions");
      if (file.matrix->methods.empty()) errors.emplace_back("matrix: no methods");
      if (!sc.feed) errors.emplace_back("matrix: requires a [feed] section");
    }
  }
  if (!errors.empty()) throw ScenarioError(errors);
  return file;
}

inline ScenarioFile load_scenario(const std::string& path)
{
  std::ifstream f(path);
  if (!f) throw ScenarioError({"cannot open scenario file " + path});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

namespace scenario_detail {

inline std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace scenario_detail

/// Writes every field in SI units; parse_scenario(serialize_scenario(f))
/// reproduces f.
inline std::string serialize_scenario(const ScenarioFile& file)
{
  using namespace scenario_detail;
  const Scenario& sc = file.scenario;
  std::ostringstream o;
  auto kv = [&](const std::string& key, double v, Dim d) {
    o << key << " = " << num(v);
    if (d != Dim::None) o << ' ' << si_unit(d);
    o << '\n';
  };
  auto kb = [&](const std::string& key, bool b) { o << key << " = " << (b ? "true" : "false") << '\n'; };

  o << "[scenario]\nname = " << sc.name << "\n\n";

  const auto& p = sc.vehicle;
  o << "[vehicle]\nmodel = " << name_of(kModels, sc.model) << "\nsteer_axle = " << name_of(kAxles, sc.steer_axle) << '\n';
  kv("mass", p.mass, Dim::Mass);
  kv("wheelbase", p.wheelbase, Dim::Length);
  kv("cg_to_front", p.cg_to_front, Dim::Length);
  kv("track_width", p.track_width, Dim::Length);
  kv("cg_height", p.cg_height, Dim::Length);
  kv("yaw_inertia", p.yaw_inertia, Dim::Inertia);
  kv("roll_inertia", p.roll_inertia, Dim::Inertia);
  kv("roll_stiffness", p.roll_stiffness, Dim::RollStiffness);
  kv("roll_damping", p.roll_damping, Dim::RollDamping);
  kv("cornering_front", p.cornering_front, Dim::Cornering);
  kv("cornering_rear", p.cornering_rear, Dim::Cornering);
  kv("wheel_radius", p.wheel_radius, Dim::Length);
  kv("friction", p.friction, Dim::None);
  kv("steer_limit", p.steer_limit, Dim::Angle);
  kv("steer_rate_limit", p.steer_rate_limit, Dim::AngularRate);
  kv("steer_lag", p.steer_lag, Dim::Time);
  kv("speed_lag", p.speed_lag, Dim::Time);
  kv("roll_load_shift", p.roll_load_shift, Dim::Cornering);

  o << "\n[load]\n";
  kv("mass", sc.load.load_mass, Dim::Mass);
  kv("cg_shift", sc.load.cg_shift, Dim::Length);
  kv("full_mass", sc.localization.full_load_mass, Dim::Mass);

  o << "\n[tyre]\nmode = " << name_of(kCompression, sc.tyre.mode) << '\n';
  kv("gain", sc.tyre.gain, Dim::Compliance);
  for (const auto& [m, c] : sc.tyre.table) o << "point = " << num(m) << " kg " << num(c) << " m\n";

  o << "\n[initial]\n";
  o << "pose = " << num(sc.initial.x) << ' ' << num(sc.initial.y) << " m " << num(sc.initial.psi) << " rad\n";
  o << "offset = " << num(sc.initial_offset.x) << ' ' << num(sc.initial_offset.y) << " m " << num(sc.initial_offset.psi)
    << " rad\n";
  kv("speed", sc.initial_speed, Dim::Speed);

  if (!sc.route.empty()) {
    o << "\n[route]\n";
    kv("spacing", sc.waypoint_spacing, Dim::Length);
    const auto& segs = sc.route.segments();
    o << "start = " << num(segs.front().start.x) << ' ' << num(segs.front().start.y) << " m\n";
    for (const auto& s : segs) {
      if (s.kind == SegmentKind::Line) {
        o << "line_to = " << num(s.end.x) << ' ' << num(s.end.y) << " m\n";
      } else {
        o << "arc_to = " << num(s.end.x) << ' ' << num(s.end.y) << ' ' << num(s.radius) << " m "
          << name_of(kTurns, s.direction) << '\n';
      }
    }
  } else if (!sc.feed) {
    o << "\n[route]\n";
  }

  o << "\n[map]\n";
  for (const auto& q : sc.map.poles) o << "pole = " << num(q.x) << ' ' << num(q.y) << " m\n";
  if (sc.map.sidewall) {
    o << "wall = " << num(sc.map.sidewall->a) << ' ' << num(sc.map.sidewall->b) << ' ' << num(sc.map.sidewall->c) << " m\n";
  }
  for (const auto& t : sc.map.rfid_tags) {
    o << "tag = " << t.id << ' ' << num(t.position.x) << ' ' << num(t.position.y) << " m\n";
  }
  for (const auto& z : sc.map.feed_zones) {
    o << "feed_zone = " << num(z.center.x) << ' ' << num(z.center.y) << ' ' << num(z.half_width) << " m\n";
  }
  if (sc.map.tag_spacing) kv("tag_spacing", *sc.map.tag_spacing, Dim::Length);

  const auto& vis = sc.vision;
  o << "\n[sensors]\nencoder_counts = " << sc.encoder.counts_per_rev << '\n';
  kb("encoder_quantized", sc.encoder.quantized);
  kv("imu_sigma", sc.imu.yaw_rate_sigma, Dim::AngularRate);
  kv("imu_bias", sc.imu.bias, Dim::AngularRate);
  kv("vision_range", vis.max_range, Dim::Length);
  kv("vision_fov", vis.field_of_view, Dim::Angle);
  kv("range_sigma", vis.range_sigma, Dim::Length);
  kv("bearing_sigma", vis.bearing_sigma, Dim::Angle);
  kv("wall_distance_sigma", vis.wall_distance_sigma, Dim::Length);
  kv("wall_distance_bias", vis.wall_distance_bias, Dim::Length);
  kv("wall_angle_sigma", vis.wall_angle_sigma, Dim::Angle);
  kv("vision_period", sc.vision_period, Dim::Time);

  for (const auto& r : sc.readers) {
    o << "\n[reader]\nposition = " << name_of(kReaders, r.position) << '\n';
    kv("mount_offset", r.mount_offset, Dim::Length);
    kv("semi_major", r.semi_major, Dim::Length);
    kv("semi_minor", r.semi_minor, Dim::Length);
    kv("poll_period", r.poll_period, Dim::Time);
  }

  const auto& t = sc.tracker;
  o << "\n[controller]\nmethod = " << name_of(kMethods, t.method) << '\n';
  kv("look_ahead", t.look_ahead, Dim::Length);
  kv("gain_heading", t.gain_heading, Dim::None);
  kv("gain_lateral", t.gain_lateral, Dim::PerLength);
  kv("max_steer", t.max_steer, Dim::Angle);
  kv("cruise_speed", sc.cruise_speed, Dim::Speed);

  const auto& l = sc.localization;
  auto sigmas = [&](const std::string& key, const Matrix2& r, Dim a, Dim b) {
    o << key << " = " << num(std::sqrt(r(0, 0))) << ' ';
    if (a != b) o << si_unit(a) << ' ';
    o << num(std::sqrt(r(1, 1))) << ' ' << si_unit(b) << '\n';
  };
  o << "\n[localization]\nmode = " << name_of(kModes, l.mode) << '\n';
  kv("position_sigma", l.position_sigma, Dim::Length);
  kv("heading_sigma", l.heading_sigma, Dim::Angle);
  kv("speed_sigma_fraction", l.noise.speed_sigma_fraction, Dim::None);
  kv("speed_sigma_floor", l.noise.speed_sigma_floor, Dim::Speed);
  kv("yaw_rate_sigma", l.noise.yaw_rate_sigma, Dim::AngularRate);
  kv("drift_density", l.noise.drift_density, Dim::Length);
  o << "initial_sigma = " << num(l.initial_sigma(0)) << ' ' << num(l.initial_sigma(1)) << " m " << num(l.initial_sigma(2))
    << " rad\n";
  kb("sample_initial_offset", l.sample_initial_offset);
  o << "rfid_model = " << name_of(kRfidModels, l.rfid_model) << '\n';
  kb("use_poles", l.use_poles);
  kb("use_sidewall", l.use_sidewall);
  kb("use_rfid", l.use_rfid);
  sigmas("pole_sigma", l.noise.pole, Dim::Length, Dim::Angle);
  sigmas("sidewall_sigma", l.noise.sidewall, Dim::Length, Dim::Angle);
  sigmas("rfid_sigma", l.noise.rfid, Dim::Length, Dim::Length);
  o << "radius_method = " << name_of(kRadius, l.radius_method) << '\n';
  kv("fixed_radius", l.fixed_radius, Dim::Length);
  kv("precal_accuracy", l.precal_accuracy, Dim::Length);
  kv("estimator_bias", l.estimator_bias, Dim::Length);

  if (sc.feed) {
    const auto& f = *sc.feed;
    o << "\n[feed]\n";
    kv("first_tag", f.first_tag, Dim::Length);
    kv("tag_spacing", f.tag_spacing, Dim::Length);
    kv("placement_spacing", f.placement_spacing, Dim::Length);
    kv("grams", f.grams, Dim::Grams);
    kv("lane_y", f.lane_y, Dim::Length);
    kv("run_in", f.run_in, Dim::Length);
    kv("run_out", f.run_out, Dim::Length);
    kv("entry_offset", f.entry_offset, Dim::Length);
    kv("deploy_time", f.deploy_time, Dim::Time);
    kv("speed_cap", f.speed_cap, Dim::Speed);
    kv("tolerance", f.half_tolerance, Dim::Length);
  }

  o << "\n[cosim]\n";
  kv("de_period", sc.cosim.de_period, Dim::Time);
  kv("ct_step", sc.cosim.ct_step, Dim::Time);
  kv("duration_cap", sc.cosim.duration_cap, Dim::Time);
  o << "seed = " << sc.cosim.seed << '\n';

  if (!sc.sdps.empty()) {
    o << "\n[sdps]\n";
    for (const auto& [k, v] : sc.sdps) o << k << " = " << num(v) << '\n';
  }

  if (file.design) {
    o << "\n[design]\n";
    for (const auto& a : file.design->axes) {
      o << "axis = " << a.name;
      const Dim d = parameter_dim(a.name).value_or(Dim::None);
      if (const auto* r = std::get_if<ContinuousRange>(&a.domain)) {
        o << " range " << num(r->lo) << ' ' << num(r->hi) << ' ' << num(r->step);
        if (d != Dim::None) o << ' ' << si_unit(d);
      } else if (const auto* s = std::get_if<DiscreteSet>(&a.domain)) {
        o << " set";
        for (double x : s->values) o << ' ' << num(x);
        if (d != Dim::None) o << ' ' << si_unit(d);
      } else {
        o << " modes";
        for (const auto& m : std::get<ModeSet>(a.domain).modes) o << ' ' << m;
      }
      o << '\n';
    }
    if (const auto* m = std::get_if<MaxXte>(&file.criterion)) o << "criterion = max-xte " << num(m->threshold) << " m\n";
    else o << "criterion = feed-success\n";
  }

  if (file.matrix) {
    const auto& m = *file.matrix;
    o << "\n[matrix]\nmode = " << name_of(kExpansion, m.mode) << '\n';
    for (const auto& f : m.set.factors) {
      const Dim d = parameter_dim(f.name).value_or(Dim::None);
      o << "factor = " << f.name << ' ' << num(f.min) << ' ' << num(f.mean) << ' ' << num(f.max);
      if (d != Dim::None) o << ' ' << si_unit(d);
      o << '\n';
    }
    o << "compressions =";
    for (double c : m.compressions) o << ' ' << num(c);
    o << " m\nmethods =";
    for (RadiusMethod r : m.methods) o << ' ' << name_of(kRadius, r);
    o << '\n';
    kv("tolerance", m.tolerance, Dim::Length);
  }
  return o.str();
}

}  // namespace agrisim
