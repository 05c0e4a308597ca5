#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "agrisim/plant.hpp"

using namespace agrisim;

namespace {

VehicleParams small_vehicle()
{
  VehicleParams p;
  p.mass = 150;
  p.wheelbase = 1.0;
  p.cg_to_front = 0.5;
  p.yaw_inertia = 400;
  p.cornering_front = p.cornering_rear = 8000;
  p.steer_lag = 0.0;
  p.speed_lag = 0.0;
  return p;
}

}  // namespace

TEST(LoadDistribution, ConservesWeightAndMovesRearwards)
{
  const VehicleParams p = small_vehicle();
  double prev_rear = 0.0;
  for (double shift : {0.0, 0.1, 0.2, 0.3, 0.4}) {
    const LoadState load{200.0, shift};
    const AxleLoads a = load_distribution(p, load);
    EXPECT_NEAR(a.front + a.rear, (p.mass + 200.0) * kGravity, 1e-9);
    EXPECT_NEAR(a.a + a.b, p.wheelbase, 1e-12);
    EXPECT_GT(a.rear, prev_rear);
    prev_rear = a.rear;
  }
  EXPECT_THROW(load_distribution(p, {100.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(load_distribution(p, {-1.0, 0.0}), std::invalid_argument);
}

TEST(TyreCompression, TableInterpolatesAndClamps)
{
  const VehicleParams p = small_vehicle();
  TyreCompression t;
  t.table = {{600.0, 0.02}, {0.0, 0.0}};
  EXPECT_NEAR(t.compression(p, {300.0, 0.0}), 0.01, 1e-15);
  EXPECT_NEAR(t.compression(p, {900.0, 0.0}), 0.02, 1e-15);
  EXPECT_NEAR(effective_wheel_radius(p, {600.0, 0.0}, t), p.wheel_radius - 0.02, 1e-15);
  t.table = {{0.0, 0.5}};
  EXPECT_THROW(effective_wheel_radius(p, {}, t), std::invalid_argument);

  TyreCompression lin;
  lin.mode = CompressionMode::Linear;
  lin.gain = 1e-5;
  EXPECT_NEAR(lin.compression(p, {}), 1e-5 * load_distribution(p, {}).rear, 1e-15);
}

TEST(Kinematic, CircleClosedForm)
{
  VehicleParams p = small_vehicle();
  const double delta = 0.3, u = 1.0;
  Plant plant(p, {}, {}, PlantModel::Kinematic, SteerAxle::Front, DynamicState{{0, 0, 0}, u, 0, 0, 0, 0, delta, {0, 0}});
  const double dt = 0.001;
  const int n = 5000;
  for (int i = 0; i < n; ++i) plant.step({u, delta}, dt);
  const double r = p.wheelbase / std::tan(delta);
  const double th = u * n * dt / r;
  EXPECT_NEAR(plant.state().pose.x, r * std::sin(th), 1e-9);
  EXPECT_NEAR(plant.state().pose.y, r * (1 - std::cos(th)), 1e-9);
  EXPECT_NEAR(plant.state().pose.psi, normalize_angle(th), 1e-9);
}

TEST(Kinematic, SpeedMagnitudeMatchesCommand)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), d(-1.0, 1.0), psi(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const double speed = u(rng);
    const auto r = kinematic_derivative({{0, 0, psi(rng)}}, speed, d(rng), 1.2);
    EXPECT_NEAR(std::hypot(r.dx, r.dy), std::abs(speed), 1e-12);
  }
  EXPECT_THROW(kinematic_derivative({}, 1.0, kPi / 2, 1.0), std::invalid_argument);
  EXPECT_THROW(kinematic_derivative({}, 1.0, 0.1, 0.0), std::invalid_argument);
}

TEST(HalfVehicle, TyreForcesSaturateAtFriction)
{
  const VehicleParams p = small_vehicle();
  const LoadState load{150.0, 0.2};
  const AxleLoads axle = load_distribution(p, load);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(-3.0, 3.0), r(-3.0, 3.0), d(-0.6, 0.6);
  for (int i = 0; i < 500; ++i) {
    DynamicState s;
    s.u = 0.5;
    s.v = v(rng);
    s.yaw_rate = r(rng);
    s.delta_f = d(rng);
    const auto f = halfvehicle_tyre_forces(s, p, axle, SteerAxle::Front);
    EXPECT_LE(std::abs(f.front), p.friction * axle.front + 1e-9);
    EXPECT_LE(std::abs(f.rear), p.friction * axle.rear + 1e-9);
  }
}

TEST(HalfVehicle, StraightRunStaysStraight)
{
  Plant plant(small_vehicle(), {150.0, 0.0}, {}, PlantModel::HalfVehicle, SteerAxle::Front,
              DynamicState{{0, 0, 0}, 1.5, 0, 0, 0, 0, 0, {0, 0}});
  for (int i = 0; i < 2000; ++i) plant.step({1.5, 0.0}, 0.001);
  EXPECT_NEAR(plant.state().pose.y, 0.0, 1e-12);
  EXPECT_NEAR(plant.state().pose.x, 3.0, 1e-9);
}

TEST(HalfVehicle, SteadyTurnApproachesLinearYawGain)
{
  VehicleParams p = small_vehicle();
  const double u = 1.0, delta = 0.05;
  Plant plant(p, {150.0, 0.0}, {}, PlantModel::HalfVehicle, SteerAxle::Front,
              DynamicState{{0, 0, 0}, u, 0, 0, 0, 0, delta, {0, 0}});
  for (int i = 0; i < 10000; ++i) plant.step({u, delta}, 0.001);
  // Linear bicycle model, balanced axles (a = b, Cf = Cr): neutral steer.
  EXPECT_NEAR(plant.state().yaw_rate, u * delta / p.wheelbase, 1e-3);
}

TEST(FourWheel, RollDecaysWithoutLateralForce)
{
  VehicleParams p = small_vehicle();
  p.roll_stiffness = 20000;
  p.roll_damping = 2000;
  DynamicState s{{0, 0, 0}, 1.0, 0, 0, 0.1, 0, 0, {0, 0}};
  Plant plant(p, {}, {}, PlantModel::FourWheel, SteerAxle::Front, s);
  double peak_late = 0.0;
  for (int i = 0; i < 5000; ++i) {
    plant.step({1.0, 0.0}, 0.001);
    if (i > 4000) peak_late = std::max(peak_late, std::abs(plant.state().roll));
  }
  EXPECT_LT(peak_late, 1e-3);
}

TEST(FourWheel, RolloverFaultBeyondQuarterPi)
{
  DynamicState s;
  s.u = 1.0;
  s.roll = kRolloverAngle + 0.01;
  EXPECT_THROW(fourwheel_derivative(s, small_vehicle(), {}, 0.0, {}), RolloverFault);
}

TEST(FourWheel, DifferentialDriveYawsTowardsSlowerSide)
{
  DynamicState s;
  s.u = 1.0;
  WheelForces w;
  w.right_rear = 100.0;
  const auto d = fourwheel_derivative(s, small_vehicle(), {}, 0.0, w);
  EXPECT_GT(d.yaw_rate, 0.0);
}

TEST(Plant, SteerRateAndLimitRespected)
{
  VehicleParams p = small_vehicle();
  p.steer_lag = 0.01;
  Plant plant(p, {}, {}, PlantModel::Kinematic, SteerAxle::Front, DynamicState{{0, 0, 0}, 1.0, 0, 0, 0, 0, 0, {0, 0}});
  double prev = 0.0;
  for (int i = 0; i < 3000; ++i) {
    plant.step({1.0, 5.0}, 0.001);
    const double d = plant.state().delta_f;
    EXPECT_LE(d - prev, p.steer_rate_limit * 0.001 + 1e-12);
    EXPECT_LE(d, p.steer_limit + 1e-12);
    prev = d;
  }
  EXPECT_NEAR(prev, p.steer_limit, 1e-9);
}

TEST(Plant, EncoderTravelFollowsEffectiveRadius)
{
  TyreCompression t;
  t.table = {{0.0, 0.0}, {600.0, 0.02}};
  Plant plant(small_vehicle(), {300.0, 0.0}, t, PlantModel::Kinematic, SteerAxle::Front,
              DynamicState{{0, 0, 0}, 1.0, 0, 0, 0, 0, 0, {0, 0}});
  for (int i = 0; i < 1000; ++i) plant.step({1.0, 0.0}, 0.001);
  EXPECT_NEAR(plant.effective_radius(), 0.29, 1e-12);
  EXPECT_NEAR(plant.state().wheel_travel[0] * 0.29, 1.0, 1e-9);
}
