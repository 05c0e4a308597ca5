#include <gtest/gtest.h>

#include "agrisim/cosim.hpp"
#include "agrisim/report.hpp"
#include "agrisim/scenario_io.hpp"

using namespace agrisim;

namespace {

Scenario scenario(const char* name) { return load_scenario(std::string(AGRISIM_SCENARIO_DIR) + "/" + name).scenario; }

}  // namespace

TEST(Cosim, DeterministicForSeed)
{
  const Scenario sc = scenario("feeding.scn");
  const Trace a = run(sc), b = run(sc);
  EXPECT_EQ(trace_csv(a), trace_csv(b));
  Scenario other = sc;
  other.cosim.seed = sc.cosim.seed + 1;
  EXPECT_NE(trace_csv(run(other)), trace_csv(a));
}

TEST(Cosim, KinematicDemoCompletes)
{
  const Trace t = run(scenario("kinematic_demo.scn"));
  EXPECT_EQ(t.summary.termination, Termination::Completed);
  EXPECT_NEAR(t.summary.max_xte, 0.2, 1e-9);
  EXPECT_LT(t.rows.back().xte, 0.05);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_NEAR(t.rows[i].t - t.rows[i - 1].t, 0.02, 1e-9);
}

TEST(Cosim, MicroStepRefinementConverges)
{
  Scenario sc = scenario("kinematic_demo.scn");
  const Trace a = run(sc);
  sc.cosim.ct_step /= 2.0;
  const Trace b = run(sc);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  const auto& ra = a.rows.back();
  const auto& rb = b.rows.back();
  EXPECT_LT(std::hypot(ra.x_true - rb.x_true, ra.y_true - rb.y_true), 1e-5);
  EXPECT_LT(std::abs(normalize_angle(ra.psi_true - rb.psi_true)), 1e-5);
}

TEST(Cosim, DurationCapAndFault)
{
  Scenario sc = scenario("kinematic_demo.scn");
  sc.cosim.duration_cap = 1.0;
  const Trace capped = run(sc);
  EXPECT_EQ(capped.summary.termination, Termination::DurationCap);
  EXPECT_NEAR(capped.summary.duration, 1.0, 1e-9);

  const Trace rolled = run(scenario("rollover.scn"));
  EXPECT_EQ(rolled.summary.termination, Termination::Fault);
  EXPECT_NE(rolled.summary.fault.find("rollover"), std::string::npos);
}

TEST(Cosim, ConfigErrorsRejected)
{
  Scenario sc = scenario("kinematic_demo.scn");
  sc.cosim.ct_step = 0.003;
  EXPECT_THROW(run(sc), ConfigError);
  sc = scenario("kinematic_demo.scn");
  sc.cruise_speed = 9.0;
  EXPECT_THROW(run(sc), ConfigError);
}

TEST(Cosim, FeedingRunPlacesEveryPortion)
{
  const Trace t = run(scenario("feeding.scn"));
  EXPECT_EQ(t.summary.termination, Termination::Completed);
  EXPECT_EQ(t.summary.b_tot, 20u);
  EXPECT_EQ(t.summary.b_suc, 20u);
  EXPECT_EQ(t.summary.covariance_violations, 0);
  for (const auto& d : t.summary.dispenses) EXPECT_EQ(d.hit, std::abs(d.actual - d.planned) <= 0.08);
}

TEST(FeedCost, Values)
{
  EXPECT_NEAR(feed_cost(18, 20), -16.2, 1e-12);
  EXPECT_EQ(feed_cost(0, 5), 0.0);
  EXPECT_EQ(feed_cost(5, 5), -5.0);
  EXPECT_THROW(feed_cost(0, 0), std::invalid_argument);
  EXPECT_THROW(feed_cost(3, 2), std::invalid_argument);
}

TEST(Evaluate, MaxXteCriterion)
{
  Trace t;
  t.rows.resize(1);
  t.summary.max_xte = 0.2;
  EXPECT_TRUE(evaluate(t, MaxXte{0.3}).viable);
  EXPECT_FALSE(evaluate(t, MaxXte{0.1}).viable);
  t.summary.termination = Termination::Fault;
  EXPECT_FALSE(evaluate(t, MaxXte{0.3}).viable);
  EXPECT_FALSE(evaluate(Trace{}, MaxXte{0.3}).viable);
}

TEST(AssumedRadius, Methods)
{
  Scenario sc = scenario("feeding.scn");
  Rng rng(1);
  sc.localization.radius_method = RadiusMethod::Static;
  const double r0 = sc.vehicle.wheel_radius;
  EXPECT_NEAR(assumed_radius(sc, 0.0, rng), r0 - 0.01, 1e-12);
  sc.localization.radius_method = RadiusMethod::Estimator;
  EXPECT_NEAR(assumed_radius(sc, 0.29, rng), 0.285, 1e-12);
  sc.localization.radius_method = RadiusMethod::Fixed;
  EXPECT_EQ(assumed_radius(sc, 0.29, rng), sc.localization.fixed_radius);
}
