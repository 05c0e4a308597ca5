#include <gtest/gtest.h>

#include <random>

#include "agrisim/localization.hpp"

using namespace agrisim;

namespace {

template <class F>
Eigen::MatrixXd numeric_jacobian(F f, const Vector3& x, double h = 1e-6)
{
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd j(y0.size(), 3);
  for (int k = 0; k < 3; ++k) {
    Vector3 xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    Eigen::VectorXd d = f(xp) - f(xm);
    if (d.size() == 3) d(2) = normalize_angle(d(2));
    if (d.size() == 2) d(1) = normalize_angle(d(1));
    j.col(k) = d / (2 * h);
  }
  return j;
}

Vector3 random_state(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> p(-5, 5), a(-3, 3);
  return {p(rng), p(rng), a(rng)};
}

}  // namespace

TEST(Jacobians, MotionMatchesFiniteDifference)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(-2, 2), w(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const Vector3 x = random_state(rng);
    const double u = s(rng), r = i % 5 == 0 ? 0.0 : w(rng);
    const auto num = numeric_jacobian([&](const Vector3& v) -> Eigen::VectorXd { return motion_model(v, u, r, 0.1); }, x);
    EXPECT_LT((num - motion_jacobian(x, u, r, 0.1)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Jacobians, MeasurementsMatchFiniteDifference)
{
  std::mt19937_64 rng(2);
  const WallLine wall{1.0, 0.3, -2.0};
  for (int i = 0; i < 50; ++i) {
    const Vector3 x = random_state(rng);
    const Vec2 lm{x(0) + 2.0 + 0.1 * i, x(1) - 1.0};
    auto hp = [&](const Vector3& v) -> Eigen::VectorXd { return pole_measurement(v, lm); };
    EXPECT_LT((numeric_jacobian(hp, x) - pole_jacobian(x, lm)).cwiseAbs().maxCoeff(), 1e-6);
    auto hw = [&](const Vector3& v) -> Eigen::VectorXd { return sidewall_measurement(v, wall); };
    EXPECT_LT((numeric_jacobian(hw, x) - sidewall_jacobian(x, wall)).cwiseAbs().maxCoeff(), 1e-6);
    for (RfidModel m : {RfidModel::Verbatim, RfidModel::BodyFrame}) {
      auto hr = [&](const Vector3& v) -> Eigen::VectorXd {
        Eigen::VectorXd z = rfid_measurement(v, lm, m);
        return Eigen::Vector3d(z(0), z(1), 0.0);
      };
      Eigen::MatrixXd num = numeric_jacobian(hr, x).topRows(2);
      EXPECT_LT((num - rfid_jacobian(x, lm, m)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Ekf, CovarianceStaysSymmetricPsd)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  Belief b;
  b.cov = Matrix3::Identity() * 0.01;
  NoiseConfig noise;
  FilterDiagnostics diag;
  for (int i = 0; i < 500; ++i) {
    const Matrix3 q = process_noise(b.mean, 1.0, 0.1, 0.02, noise);
    b = predict(b, 1.0, 0.1, 0.02, q, &diag);
    ASSERT_TRUE(is_symmetric_psd(b.cov));
    if (i % 5 == 0) {
      const Vec2 lm{b.mean(0) + 3, b.mean(1) + 1};
      Vector2 z = pole_measurement(b.mean, lm);
      z(0) += 0.05 * n(rng);
      b = update_pole(b, z, lm, noise.pole, &diag);
      ASSERT_TRUE(is_symmetric_psd(b.cov));
    }
    if (i % 7 == 0) {
      b = update_sidewall(b, sidewall_measurement(b.mean, {1, 0, -3}), {1, 0, -3}, noise.sidewall, &diag);
      b = update_rfid(b, Vec2{b.mean(0) + 0.01, b.mean(1)}, noise.rfid, RfidModel::BodyFrame, &diag);
      ASSERT_TRUE(is_symmetric_psd(b.cov));
    }
  }
}

TEST(Ekf, UpdateShrinksUncertainty)
{
  Belief b;
  b.cov = Matrix3::Identity() * 0.1;
  const Vec2 lm{3, 0};
  const Belief a = update_pole(b, pole_measurement(b.mean, lm), lm, NoiseConfig{}.pole);
  EXPECT_LT(a.cov.trace(), b.cov.trace());
  EXPECT_NEAR((a.mean - b.mean).norm(), 0.0, 1e-12);
}

TEST(Ekf, DegenerateInputsHandled)
{
  Belief b;
  FilterDiagnostics d;
  const Belief same = update_pole(b, Vector2(1.0, 0.0), Vec2{0, 0}, NoiseConfig{}.pole, &d);
  EXPECT_EQ(d.skipped_updates, 1);
  EXPECT_EQ(same.mean, b.mean);
  EXPECT_THROW(update_pole(b, Vector2(-1.0, 0.0), Vec2{1, 0}, NoiseConfig{}.pole), std::invalid_argument);
  EXPECT_THROW(predict(b, 1, 0, 0.0, Matrix3::Zero()), std::invalid_argument);
  LandmarkMap map;
  EXPECT_THROW(update_rfid(b, 7, map, NoiseConfig{}.rfid), std::invalid_argument);
}

TEST(Ekf, StraightLimitIsContinuous)
{
  const Vector3 x(1, 2, 0.4);
  const Vector3 a = motion_model(x, 1.0, 0.0, 0.1);
  const Vector3 b = motion_model(x, 1.0, 2e-6, 0.1);
  EXPECT_LT((a - b).norm(), 1e-6);
}

TEST(SpeedEstimate, FromCounts)
{
  EXPECT_NEAR(speed_estimate({1024.0, 1024.0}, 1.0, 0.3, 1024), kTwoPi * 0.3, 1e-12);
  EXPECT_EQ(speed_estimate({}, 1.0, 0.3, 1024), 0.0);
  EXPECT_THROW(speed_estimate({1.0}, 0.0, 0.3, 1024), std::invalid_argument);
}
