#pragma once

// EKF pose estimation: arc-motion prediction from wheel speed and yaw rate,
// corrected by door-pole, sidewall and RFID-tag measurements.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "agrisim/world.hpp"

namespace agrisim {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Matrix2 = Eigen::Matrix2d;
using Matrix3 = Eigen::Matrix3d;
using Matrix23 = Eigen::Matrix<double, 2, 3>;

struct Belief {
  Vector3 mean = Vector3::Zero();  // x, y, psi
  Matrix3 cov = Matrix3::Identity();

  Pose2D pose() const { return {mean(0), mean(1), mean(2)}; }
};

/// Yaw rates below this use the straight-line limit of the motion model.
inline constexpr double kStraightYawRate = 1e-6;

struct NoiseConfig {
  // Control noise mapped through the motion model.
  double speed_sigma_fraction = 0.01;  // 1-sigma relative speed error
  double speed_sigma_floor = 0.0;      // m/s
  double yaw_rate_sigma = 0.01;        // rad/s
  // Along-track odometry drift variance per meter travelled, m^2/m.
  double drift_density = 0.0;
  Matrix3 extra = Matrix3::Zero();     // added to Q every step

  Matrix2 pole = (Matrix2() << 0.1 * 0.1, 0.0, 0.0, (kPi / 180.0) * (kPi / 180.0)).finished();
  Matrix2 sidewall = (Matrix2() << 0.005 * 0.005, 0.0, 0.0, (kPi / 180.0) * (kPi / 180.0)).finished();
  Matrix2 rfid = (Matrix2() << 0.05 * 0.05, 0.0, 0.0, 0.05 * 0.05).finished();
};

/// Counts of numeric-guard activations and skipped updates.
struct FilterDiagnostics {
  int guard_activations = 0;
  int skipped_updates = 0;
};

namespace ekf_detail {

/// Symmetrizes and floors eigenvalues at zero. Returns true if the floor fired.
inline bool condition(Matrix3& p)
{
  p = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix3> es(p);
  if (es.eigenvalues().minCoeff() >= 0.0) return false;
  Vector3 ev = es.eigenvalues().cwiseMax(0.0);
  p = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  p = 0.5 * (p + p.transpose());
  return true;
}

inline Belief ekf_update(const Belief& b, const Vector2& innovation, const Matrix23& h, const Matrix2& r,
                         FilterDiagnostics* diag)
{
  const Matrix2 s = h * b.cov * h.transpose() + r;
  const Eigen::Matrix<double, 3, 2> k = b.cov * h.transpose() * s.inverse();
  Belief out;
  out.mean = b.mean + k * innovation;
  out.mean(2) = normalize_angle(out.mean(2));
  const Matrix3 ikh = Matrix3::Identity() - k * h;
  out.cov = ikh * b.cov * ikh.transpose() + k * r * k.transpose();
  if (condition(out.cov) && diag) ++diag->guard_activations;
  return out;
}

}  // namespace ekf_detail

/// Arc-motion model f(x, u_e, psi_dot, T).
inline Vector3 motion_model(const Vector3& x, double speed, double yaw_rate, double dt)
{
  const double psi = x(2);
  Vector3 out = x;
  if (std::abs(yaw_rate) < kStraightYawRate) {
    out(0) += speed * dt * std::cos(psi);
    out(1) += speed * dt * std::sin(psi);
  } else {
    const double k = speed / yaw_rate;
    out(0) += -k * (std::sin(psi) - std::sin(psi + yaw_rate * dt));
    out(1) += k * (std::cos(psi) - std::cos(psi + yaw_rate * dt));
  }
  out(2) = normalize_angle(psi + yaw_rate * dt);
  return out;
}

/// Jacobian of motion_model with respect to the state.
inline Matrix3 motion_jacobian(const Vector3& x, double speed, double yaw_rate, double dt)
{
  const double psi = x(2);
  Matrix3 f = Matrix3::Identity();
  if (std::abs(yaw_rate) < kStraightYawRate) {
    f(0, 2) = -speed * dt * std::sin(psi);
    f(1, 2) = speed * dt * std::cos(psi);
  } else {
    const double k = speed / yaw_rate;
    f(0, 2) = -k * (std::cos(psi) - std::cos(psi + yaw_rate * dt));
    f(1, 2) = -k * (std::sin(psi) - std::sin(psi + yaw_rate * dt));
  }
  return f;
}

/// Jacobian of motion_model with respect to the inputs (speed, yaw rate).
inline Eigen::Matrix<double, 3, 2> motion_input_jacobian(const Vector3& x, double speed, double yaw_rate, double dt)
{
  const double psi = x(2);
  Eigen::Matrix<double, 3, 2> v = Eigen::Matrix<double, 3, 2>::Zero();
  if (std::abs(yaw_rate) < kStraightYawRate) {
    v(0, 0) = dt * std::cos(psi);
    v(1, 0) = dt * std::sin(psi);
    v(0, 1) = -0.5 * speed * dt * dt * std::sin(psi);
    v(1, 1) = 0.5 * speed * dt * dt * std::cos(psi);
  } else {
    const double w = yaw_rate;
    const double s0 = std::sin(psi), s1 = std::sin(psi + w * dt);
    const double c0 = std::cos(psi), c1 = std::cos(psi + w * dt);
    v(0, 0) = -(s0 - s1) / w;
    v(1, 0) = (c0 - c1) / w;
    v(0, 1) = speed * (s0 - s1) / (w * w) + speed * dt * c1 / w;
    v(1, 1) = -speed * (c0 - c1) / (w * w) + speed * dt * s1 / w;
  }
  v(2, 1) = dt;
  return v;
}

/// Per-step process noise for the given inputs.
inline Matrix3 process_noise(const Vector3& x, double speed, double yaw_rate, double dt, const NoiseConfig& noise)
{
  const double su = noise.speed_sigma_fraction * std::abs(speed) + noise.speed_sigma_floor;
  Matrix2 m = Matrix2::Zero();
  m(0, 0) = su * su;
  m(1, 1) = noise.yaw_rate_sigma * noise.yaw_rate_sigma;
  const auto v = motion_input_jacobian(x, speed, yaw_rate, dt);
  Matrix3 q = v * m * v.transpose() + noise.extra;
  if (noise.drift_density > 0.0) {
    const Vector3 h(std::cos(x(2)), std::sin(x(2)), 0.0);
    q += noise.drift_density * std::abs(speed) * dt * h * h.transpose();
  }
  return q;
}

inline Belief predict(const Belief& b, double speed, double yaw_rate, double dt, const Matrix3& q,
                      FilterDiagnostics* diag = nullptr)
{
  if (!(dt > 0.0)) throw std::invalid_argument("predict: dt must be positive");
  const Matrix3 f = motion_jacobian(b.mean, speed, yaw_rate, dt);
  Belief out;
  out.mean = motion_model(b.mean, speed, yaw_rate, dt);
  out.cov = f * b.cov * f.transpose() + q;
  if (ekf_detail::condition(out.cov) && diag) ++diag->guard_activations;
  return out;
}

// --- pole (range, bearing) --------------------------------------------------

inline Vector2 pole_measurement(const Vector3& x, Vec2 landmark)
{
  const double dx = landmark.x - x(0), dy = landmark.y - x(1);
  return {std::sqrt(dx * dx + dy * dy), normalize_angle(std::atan2(dy, dx) - x(2))};
}

inline Matrix23 pole_jacobian(const Vector3& x, Vec2 landmark)
{
  const double dx = landmark.x - x(0), dy = landmark.y - x(1);
  const double q = dx * dx + dy * dy;
  const double r = std::sqrt(q);
  Matrix23 h;
  h << -dx / r, -dy / r, 0.0, dy / q, -dx / q, -1.0;
  return h;
}

/// Minimum predicted range for a pole update; closer landmarks are skipped.
inline constexpr double kMinPoleRange = 1e-6;

inline Belief update_pole(const Belief& b, const Vector2& z, Vec2 landmark, const Matrix2& r,
                          FilterDiagnostics* diag = nullptr)
{
  if (!(z(0) > 0.0)) throw std::invalid_argument("update_pole: measured range must be positive");
  const Vector2 pred = pole_measurement(b.mean, landmark);
  if (pred(0) < kMinPoleRange) {
    if (diag) ++diag->skipped_updates;
    return b;
  }
  Vector2 innov = z - pred;
  innov(1) = normalize_angle(innov(1));
  return ekf_detail::ekf_update(b, innov, pole_jacobian(b.mean, landmark), r, diag);
}

// --- sidewall (signed distance, relative angle) -----------------------------

inline Vector2 sidewall_measurement(const Vector3& x, const WallLine& wall)
{
  if (wall.degenerate()) throw std::invalid_argument("sidewall: degenerate wall");
  const double n = std::hypot(wall.a, wall.b);
  return {(wall.a * x(1) + wall.b * x(0) + wall.c) / n, normalize_angle(std::atan2(wall.a, wall.b) - x(2))};
}

inline Matrix23 sidewall_jacobian(const Vector3&, const WallLine& wall)
{
  const double n = std::hypot(wall.a, wall.b);
  Matrix23 h;
  h << wall.b / n, wall.a / n, 0.0, 0.0, 0.0, -1.0;
  return h;
}

inline Belief update_sidewall(const Belief& b, const Vector2& z, const WallLine& wall, const Matrix2& r,
                              FilterDiagnostics* diag = nullptr)
{
  Vector2 innov = z - sidewall_measurement(b.mean, wall);
  innov(1) = normalize_angle(innov(1));
  return ekf_detail::ekf_update(b, innov, sidewall_jacobian(b.mean, wall), r, diag);
}

// --- RFID tag ---------------------------------------------------------------

/// Verbatim: rotate the absolute tag position by -psi, then subtract the
/// vehicle position. BodyFrame: the tag offset expressed in the vehicle frame.
enum class RfidModel { Verbatim, BodyFrame };

inline Vector2 rfid_measurement(const Vector3& x, Vec2 tag, RfidModel model)
{
  const double c = std::cos(x(2)), s = std::sin(x(2));
  if (model == RfidModel::Verbatim) {
    return {tag.x * c + tag.y * s - x(0), -tag.x * s + tag.y * c - x(1)};
  }
  const double dx = tag.x - x(0), dy = tag.y - x(1);
  return {c * dx + s * dy, -s * dx + c * dy};
}

inline Matrix23 rfid_jacobian(const Vector3& x, Vec2 tag, RfidModel model)
{
  const double c = std::cos(x(2)), s = std::sin(x(2));
  Matrix23 h;
  if (model == RfidModel::Verbatim) {
    h << -1.0, 0.0, -tag.x * s + tag.y * c, 0.0, -1.0, -tag.x * c - tag.y * s;
  } else {
    const double dx = tag.x - x(0), dy = tag.y - x(1);
    h << -c, -s, -s * dx + c * dy, s, -c, -c * dx - s * dy;
  }
  return h;
}

/// Update from a tag read at the zone center: the measured relative offset is zero.
inline Belief update_rfid(const Belief& b, Vec2 tag, const Matrix2& r, RfidModel model = RfidModel::Verbatim,
                          FilterDiagnostics* diag = nullptr)
{
  const Vector2 innov = Vector2::Zero() - rfid_measurement(b.mean, tag, model);
  return ekf_detail::ekf_update(b, innov, rfid_jacobian(b.mean, tag, model), r, diag);
}

/// Looks up a tag by id and applies update_rfid. Unknown ids are rejected.
inline Belief update_rfid(const Belief& b, int tag_id, const LandmarkMap& map, const Matrix2& r,
                          RfidModel model = RfidModel::Verbatim, FilterDiagnostics* diag = nullptr)
{
  const RfidTag* tag = map.find_tag(tag_id);
  if (!tag) throw std::invalid_argument("update_rfid: unknown tag id " + std::to_string(tag_id));
  return update_rfid(b, tag->position, r, model, diag);
}

/// Wheel speed from encoder count deltas over one sample interval, averaged
/// over the encoders given.
inline double speed_estimate(const std::vector<double>& count_deltas, double dt, double assumed_radius,
                             int counts_per_rev)
{
  if (!(dt > 0.0)) throw std::invalid_argument("speed_estimate: dt must be positive");
  if (count_deltas.empty()) return 0.0;
  double sum = 0.0;
  for (double g : count_deltas) sum += g;
  const double mean = sum / static_cast<double>(count_deltas.size());
  return assumed_radius * kTwoPi * mean / (counts_per_rev * dt);
}

inline bool is_symmetric_psd(const Matrix3& p, double sym_tol = 1e-12, double eig_tol = -1e-10)
{
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, p.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (p + p.transpose()));
  return es.eigenvalues().minCoeff() >= eig_tol;
}

}  // namespace agrisim
