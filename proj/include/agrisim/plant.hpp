#pragma once

// Continuous-time vehicle models: kinematic bicycle, dynamic half-vehicle and
// a four-wheel model with a 1-DOF roll spring-damper, plus load distribution,
// loaded wheel radius and first-order actuator dynamics.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "agrisim/integrator.hpp"
#include "agrisim/world.hpp"

namespace agrisim {

inline constexpr double kGravity = 9.82;

/// Below this longitudinal speed the dynamic tiers fall back to kinematics.
inline constexpr double kStandstillSpeed = 0.01;

/// Model validity bound on longitudinal speed.
inline constexpr double kMaxModelSpeed = 7.5;

struct RolloverFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VehicleParams {
  double mass = 350.0;             // kg, without load
  double wheelbase = 1.2;          // m
  double cg_to_front = 0.55;       // m, nominal a0
  double track_width = 0.9;        // m
  double cg_height = 0.5;          // m
  double yaw_inertia = 150.0;      // kg m^2
  double roll_inertia = 40.0;      // kg m^2
  double roll_stiffness = 20000.0; // N m/rad
  double roll_damping = 2000.0;    // N m s/rad
  double cornering_front = 8000.0; // N/rad, per axle
  double cornering_rear = 8000.0;  // N/rad, per axle
  double wheel_radius = 0.30;      // m, unloaded
  double friction = 0.7;           // tyre-surface mu
  double steer_limit = 0.6;        // rad
  double steer_rate_limit = 30.0 * kPi / 180.0;  // rad/s
  double steer_lag = 0.1;          // s, <= 0 means the steer angle follows the command directly
  double speed_lag = 0.5;          // s, <= 0 means speed follows the command directly
  double roll_load_shift = 0.0;    // N/rad, left/right vertical load transfer per radian of roll

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    auto positive = [&](double v, const char* name) {
      if (!(v > 0.0)) out.push_back(std::string(name) + " must be positive");
    };
    positive(mass, "mass");
    positive(wheelbase, "wheelbase");
    positive(track_width, "track_width");
    positive(cg_height, "cg_height");
    positive(yaw_inertia, "yaw_inertia");
    positive(roll_inertia, "roll_inertia");
    positive(roll_stiffness, "roll_stiffness");
    positive(roll_damping, "roll_damping");
    positive(cornering_front, "cornering_front");
    positive(cornering_rear, "cornering_rear");
    positive(wheel_radius, "wheel_radius");
    positive(steer_limit, "steer_limit");
    positive(steer_rate_limit, "steer_rate_limit");
    if (!(cg_to_front > 0.0 && cg_to_front < wheelbase)) out.emplace_back("cg_to_front must lie in (0, wheelbase)");
    if (!(friction > 0.0 && friction <= 1.2)) out.emplace_back("friction must lie in (0, 1.2]");
    if (!(steer_limit < kPi / 2.0)) out.emplace_back("steer_limit must be below pi/2");
    return out;
  }
};

struct LoadState {
  double load_mass = 0.0;  // kg
  double cg_shift = 0.0;   // m, backwards
};

inline double total_mass(const VehicleParams& p, const LoadState& load) { return p.mass + load.load_mass; }

struct AxleLoads {
  double a = 0.0;        // CG to front axle
  double b = 0.0;        // CG to rear axle
  double front = 0.0;    // N
  double rear = 0.0;     // N
};

inline AxleLoads load_distribution(const VehicleParams& p, const LoadState& load)
{
  if (load.load_mass < 0.0 || load.cg_shift < 0.0) throw std::invalid_argument("load_distribution: negative load or CG shift");
  const double a = p.cg_to_front + load.cg_shift;
  if (!(a < p.wheelbase)) throw std::invalid_argument("load_distribution: CG at or beyond the rear axle");
  const double b = p.wheelbase - a;
  const double total = total_mass(p, load) * kGravity;
  const double front = b / p.wheelbase * total;
  return {a, b, front, total - front};
}

enum class CompressionMode { Table, Linear };

/// Tyre compression under load. Table mode interpolates (load kg -> compression m)
/// pairs linearly and clamps outside the table; Linear mode uses gain * N_rear.
struct TyreCompression {
  CompressionMode mode = CompressionMode::Table;
  std::vector<std::pair<double, double>> table{{0.0, 0.0}};
  double gain = 0.0;  // m/N

  double compression(const VehicleParams& p, const LoadState& load) const
  {
    if (mode == CompressionMode::Linear) return gain * load_distribution(p, load).rear;
    if (table.empty()) return 0.0;
    std::vector<std::pair<double, double>> pts = table;
    std::sort(pts.begin(), pts.end());
    const double m = load.load_mass;
    if (m <= pts.front().first) return pts.front().second;
    if (m >= pts.back().first) return pts.back().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (m <= pts[i].first) {
        const auto [m0, c0] = pts[i - 1];
        const auto [m1, c1] = pts[i];
        return c0 + (c1 - c0) * (m - m0) / (m1 - m0);
      }
    }
    return pts.back().second;
  }
};

inline double effective_wheel_radius(const VehicleParams& p, const LoadState& load, const TyreCompression& model)
{
  const double c = model.compression(p, load);
  if (c >= p.wheel_radius) throw std::invalid_argument("effective_wheel_radius: compression exceeds wheel radius");
  return p.wheel_radius - c;
}

struct KinematicState {
  Pose2D pose;
};

struct KinematicRates {
  double dx = 0.0;
  double dy = 0.0;
  double dpsi = 0.0;
};

inline KinematicRates kinematic_derivative(const KinematicState& s, double u, double delta_f, double wheelbase)
{
  if (!(wheelbase > 0.0)) throw std::invalid_argument("kinematic_derivative: wheelbase must be positive");
  if (!(std::abs(delta_f) < kPi / 2.0) || std::abs(std::cos(delta_f)) < 1e-12) {
    throw std::invalid_argument("kinematic_derivative: steer angle at the tan singularity");
  }
  return {std::cos(s.pose.psi) * u, std::sin(s.pose.psi) * u, std::tan(delta_f) * u / wheelbase};
}

/// Full simulated vehicle state. The same layout doubles as its time derivative.
struct DynamicState {
  Pose2D pose;
  double u = 0.0;          // m/s, longitudinal body velocity
  double v = 0.0;          // m/s, lateral body velocity
  double yaw_rate = 0.0;   // rad/s
  double roll = 0.0;       // rad
  double roll_rate = 0.0;  // rad/s
  double delta_f = 0.0;    // rad, actual steer angle
  std::array<double, 2> wheel_travel{0.0, 0.0};  // rad, rear left / rear right
};

using StateDerivative = DynamicState;

inline constexpr std::size_t kDynamicStateSize = 11;

inline StateVector<kDynamicStateSize> pack(const DynamicState& s)
{
  return {s.pose.x, s.pose.y, s.pose.psi, s.u, s.v, s.yaw_rate, s.roll, s.roll_rate, s.delta_f,
          s.wheel_travel[0], s.wheel_travel[1]};
}

inline DynamicState unpack(const StateVector<kDynamicStateSize>& a)
{
  DynamicState s;
  s.pose = {a[0], a[1], a[2]};
  s.u = a[3];
  s.v = a[4];
  s.yaw_rate = a[5];
  s.roll = a[6];
  s.roll_rate = a[7];
  s.delta_f = a[8];
  s.wheel_travel = {a[9], a[10]};
  return s;
}

enum class SteerAxle { Front, Back };

inline double saturate(double f, double limit) { return std::clamp(f, -limit, limit); }

struct AxleForces {
  double slip_front = 0.0;
  double slip_rear = 0.0;
  double front = 0.0;  // N, lateral in wheel frame
  double rear = 0.0;
};

inline AxleForces halfvehicle_tyre_forces(const DynamicState& s, const VehicleParams& p, const AxleLoads& axle,
                                          SteerAxle steer)
{
  const double u = s.u;
  const double steer_f = steer == SteerAxle::Front ? s.delta_f : 0.0;
  const double steer_r = steer == SteerAxle::Back ? s.delta_f : 0.0;
  AxleForces f;
  f.slip_front = steer_f - (s.v + axle.a * s.yaw_rate) / u;
  f.slip_rear = steer_r - (s.v - axle.b * s.yaw_rate) / u;
  f.front = saturate(p.cornering_front * f.slip_front, p.friction * axle.front);
  f.rear = saturate(p.cornering_rear * f.slip_rear, p.friction * axle.rear);
  return f;
}

/// Lateral and yaw dynamics of the half-vehicle. Pose rates are filled in;
/// the longitudinal speed is held (its rate is left at zero).
inline StateDerivative halfvehicle_derivative(const DynamicState& s, const VehicleParams& p, const LoadState& load,
                                              SteerAxle steer)
{
  if (!(s.u > 0.0)) throw std::invalid_argument("halfvehicle_derivative: requires u > 0");
  const AxleLoads axle = load_distribution(p, load);
  const AxleForces f = halfvehicle_tyre_forces(s, p, axle, steer);
  const double m = total_mass(p, load);

  double lateral = 0.0;
  if (steer == SteerAxle::Front) {
    lateral = f.front * std::cos(s.delta_f) + f.rear;
  } else {
    lateral = f.front + f.rear * std::cos(s.delta_f);
  }

  StateDerivative d;
  const double c = std::cos(s.pose.psi), sn = std::sin(s.pose.psi);
  d.pose = {s.u * c - s.v * sn, s.u * sn + s.v * c, s.yaw_rate};
  d.v = lateral / m - s.u * s.yaw_rate;
  d.yaw_rate = (axle.a * f.front - axle.b * f.rear) / p.yaw_inertia;
  return d;
}

/// Longitudinal wheel-frame forces, N.
struct WheelForces {
  double left_front = 0.0;
  double right_front = 0.0;
  double left_rear = 0.0;
  double right_rear = 0.0;
};

struct WheelLoads {
  double left_front = 0.0;
  double right_front = 0.0;
  double left_rear = 0.0;
  double right_rear = 0.0;
};

/// Static axle loads split left/right with a roll-proportional transfer.
inline WheelLoads wheel_loads(const DynamicState& s, const VehicleParams& p, const LoadState& load)
{
  const AxleLoads axle = load_distribution(p, load);
  const double total = axle.front + axle.rear;
  const double shift = p.roll_load_shift * s.roll;
  const double shift_f = shift * axle.front / total;
  const double shift_r = shift * axle.rear / total;
  auto nonneg = [](double n) { return std::max(0.0, n); };
  return {nonneg(axle.front / 2 + shift_f), nonneg(axle.front / 2 - shift_f), nonneg(axle.rear / 2 + shift_r),
          nonneg(axle.rear / 2 - shift_r)};
}

inline constexpr double kRolloverAngle = kPi / 4.0;

/// Four-wheel body dynamics with roll. Rates for pose, u, v, yaw rate and roll
/// are filled in. Throws RolloverFault when |roll| exceeds pi/4.
inline StateDerivative fourwheel_derivative(const DynamicState& s, const VehicleParams& p, const LoadState& load,
                                            double delta_f, const WheelForces& drive)
{
  if (std::abs(s.roll) > kRolloverAngle) {
    throw RolloverFault("rollover: roll angle " + std::to_string(s.roll) + " rad exceeds pi/4");
  }
  if (!(s.u > 0.0)) throw std::invalid_argument("fourwheel_derivative: requires u > 0");

  const AxleLoads axle = load_distribution(p, load);
  const WheelLoads n = wheel_loads(s, p, load);
  const double m = total_mass(p, load);
  const double mu = p.friction;

  const double slip_f = delta_f - (s.v + axle.a * s.yaw_rate) / s.u;
  const double slip_r = -(s.v - axle.b * s.yaw_rate) / s.u;
  const double cf = p.cornering_front / 2.0;
  const double cr = p.cornering_rear / 2.0;

  // Wheel-frame lateral forces, then rotate the front pair into the body frame.
  const double fyw_lf = saturate(cf * slip_f, mu * n.left_front);
  const double fyw_rf = saturate(cf * slip_f, mu * n.right_front);
  const double fy_lr = saturate(cr * slip_r, mu * n.left_rear);
  const double fy_rr = saturate(cr * slip_r, mu * n.right_rear);

  const double c = std::cos(delta_f), sn = std::sin(delta_f);
  const double fx_lf = c * drive.left_front - sn * fyw_lf;
  const double fy_lf = sn * drive.left_front + c * fyw_lf;
  const double fx_rf = c * drive.right_front - sn * fyw_rf;
  const double fy_rf = sn * drive.right_front + c * fyw_rf;
  const double fx_lr = drive.left_rear;
  const double fx_rr = drive.right_rear;

  const double sum_long = fx_lf + fx_rf + fx_lr + fx_rr;
  const double sum_lat = fy_lf + fy_rf + fy_lr + fy_rr;

  // Left wheels sit at +Tc/2 in a y-left body frame, so a forward force on the
  // left side yaws the body clockwise.
  const double yaw_moment = axle.a * (fy_lf + fy_rf) - axle.b * (fy_lr + fy_rr) -
                            p.track_width / 2.0 * (fx_lf - fx_rf + fx_lr - fx_rr);

  const double h = p.cg_height;
  const double roll_acc =
      -(h * sum_lat + (p.roll_stiffness - m * kGravity * h) * s.roll + p.roll_damping * s.roll_rate) / p.roll_inertia;

  StateDerivative d;
  const double cp = std::cos(s.pose.psi), sp = std::sin(s.pose.psi);
  d.pose = {s.u * cp - s.v * sp, s.u * sp + s.v * cp, s.yaw_rate};
  d.u = sum_long / m + s.v * s.yaw_rate;
  d.v = sum_lat / m - s.u * s.yaw_rate - h * roll_acc;
  d.yaw_rate = yaw_moment / p.yaw_inertia;
  d.roll = s.roll_rate;
  d.roll_rate = roll_acc;
  return d;
}

/// Unforced roll dynamics, used while the four-wheel tier is at standstill.
inline double free_roll_acceleration(const DynamicState& s, const VehicleParams& p, const LoadState& load)
{
  const double m = total_mass(p, load);
  return -((p.roll_stiffness - m * kGravity * p.cg_height) * s.roll + p.roll_damping * s.roll_rate) / p.roll_inertia;
}

enum class PlantModel { Kinematic, HalfVehicle, FourWheel };

struct ActuatorCommand {
  double speed = 0.0;  // u_o
  double steer = 0.0;  // delta_o
};

/// A simulated vehicle: one fidelity tier plus steering and drive actuators,
/// advanced by fixed RK4 micro-steps.
class Plant {
 public:
  Plant(VehicleParams params, LoadState load, TyreCompression tyre, PlantModel model, SteerAxle axle,
        DynamicState initial)
      : params_(std::move(params)), load_(load), model_(model), axle_(axle), state_(initial)
  {
    const auto problems = params_.validate();
    if (!problems.empty()) throw std::invalid_argument("vehicle params: " + problems.front());
    axle_loads_ = load_distribution(params_, load_);
    radius_ = effective_wheel_radius(params_, load_, tyre);
    state_.pose.psi = normalize_angle(state_.pose.psi);
  }

  const DynamicState& state() const { return state_; }
  const VehicleParams& params() const { return params_; }
  const LoadState& load() const { return load_; }
  const AxleLoads& axle_loads() const { return axle_loads_; }
  PlantModel model() const { return model_; }
  double effective_radius() const { return radius_; }

  /// Lowest speed at which the dynamic tiers are integrated with step dt. The
  /// slip terms scale like C/(m u) and I/(u); below this speed they would put
  /// RK4 outside its stability region, so the kinematic tier takes over.
  double dynamic_speed_floor(double dt) const
  {
    const double m = total_mass(params_, load_);
    const double a = axle_loads_.a, b = axle_loads_.b;
    const double lateral = (params_.cornering_front + params_.cornering_rear) / m;
    const double yaw = (a * a * params_.cornering_front + b * b * params_.cornering_rear) / params_.yaw_inertia;
    return std::max(kStandstillSpeed, 0.5 * dt * std::max(lateral, yaw));
  }

  /// Advances the plant by one micro-step under a held command.
  void step(const ActuatorCommand& cmd, double dt)
  {
    const double steer_cmd = std::clamp(cmd.steer, -params_.steer_limit, params_.steer_limit);
    if (params_.steer_lag <= 0.0) state_.delta_f = steer_cmd;
    if (params_.speed_lag <= 0.0 && model_ != PlantModel::FourWheel) state_.u = cmd.speed;

    const bool kinematic = model_ == PlantModel::Kinematic || state_.u < dynamic_speed_floor(dt);
    if (kinematic) {
      state_.v = 0.0;
      state_.yaw_rate = state_.u * std::tan(state_.delta_f) / params_.wheelbase;
    }

    auto f = [&](double, const StateVector<kDynamicStateSize>& y) {
      return pack(rates(unpack(y), cmd.speed, steer_cmd, kinematic));
    };
    state_ = unpack(rk4_step(pack(state_), 0.0, dt, f));
    state_.pose.psi = normalize_angle(state_.pose.psi);
    state_.delta_f = std::clamp(state_.delta_f, -params_.steer_limit, params_.steer_limit);
    if (kinematic) state_.yaw_rate = state_.u * std::tan(state_.delta_f) / params_.wheelbase;
  }

 private:
  StateDerivative rates(const DynamicState& s, double speed_cmd, double steer_cmd, bool kinematic) const
  {
    StateDerivative d;
    const double m = total_mass(params_, load_);

    double steer_rate = 0.0;
    if (params_.steer_lag > 0.0) {
      steer_rate = std::clamp((steer_cmd - s.delta_f) / params_.steer_lag, -params_.steer_rate_limit,
                              params_.steer_rate_limit);
    }

    double accel = 0.0;
    WheelForces drive;
    if (params_.speed_lag > 0.0) {
      accel = (speed_cmd - s.u) / params_.speed_lag;
    }
    if (model_ == PlantModel::FourWheel) {
      const double lag = params_.speed_lag > 0.0 ? params_.speed_lag : 0.05;
      double force = m * (speed_cmd - s.u) / lag;
      force = saturate(force, params_.friction * axle_loads_.rear);
      drive.left_rear = drive.right_rear = force / 2.0;
      accel = force / m;
    }

    if (kinematic) {
      const auto k = kinematic_derivative({s.pose}, s.u, s.delta_f, params_.wheelbase);
      d.pose = {k.dx, k.dy, k.dpsi};
      d.u = accel;
      if (model_ == PlantModel::FourWheel) {
        if (std::abs(s.roll) > kRolloverAngle) throw RolloverFault("rollover: roll angle exceeds pi/4");
        d.roll = s.roll_rate;
        d.roll_rate = free_roll_acceleration(s, params_, load_);
      }
    } else if (model_ == PlantModel::HalfVehicle) {
      d = halfvehicle_derivative(s, params_, load_, axle_);
      d.u = accel;
    } else {
      d = fourwheel_derivative(s, params_, load_, s.delta_f, drive);
    }
    d.delta_f = steer_rate;

    const double yaw = kinematic ? s.u * std::tan(s.delta_f) / params_.wheelbase : s.yaw_rate;
    const double half_track = params_.track_width / 2.0;
    d.wheel_travel = {(s.u - yaw * half_track) / radius_, (s.u + yaw * half_track) / radius_};
    return d;
  }

  VehicleParams params_;
  LoadState load_;
  PlantModel model_;
  SteerAxle axle_;
  DynamicState state_;
  AxleLoads axle_loads_;
  double radius_ = 0.0;
};

}  // namespace agrisim
