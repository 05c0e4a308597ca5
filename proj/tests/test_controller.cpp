#include <gtest/gtest.h>

#include "agrisim/controller.hpp"

using namespace agrisim;

TEST(RouteManager, NextWaypointContract)
{
  RouteManager m({{0, 0}, {1, 0}, {2, 0}});
  EXPECT_EQ(m.next_waypoint(), (Vec2{0, 0}));
  EXPECT_EQ(*m.next(), (Vec2{1, 0}));
  EXPECT_EQ(m.next_waypoint(), (Vec2{1, 0}));
  EXPECT_EQ(m.remaining(), 1u);
  EXPECT_THROW(m.next_waypoint(), RouteExhausted);
  RouteManager empty;
  EXPECT_THROW(empty.next_waypoint(), RouteExhausted);
}

TEST(Steering, SignsTowardTheRoute)
{
  TrackerConfig cfg;
  // Vehicle left of an eastbound line steers right, and vice versa.
  EXPECT_LT(steer_method2({0, 0.5, 0}, {-1, 0}, {5, 0}, cfg), 0.0);
  EXPECT_GT(steer_method2({0, -0.5, 0}, {-1, 0}, {5, 0}, cfg), 0.0);
  EXPECT_LT(steer_method3({0, 0.5, 0}, {-1, 0}, {5, 0}, cfg), 0.0);
  EXPECT_GT(steer_method3({0, -0.5, 0}, {-1, 0}, {5, 0}, cfg), 0.0);
  EXPECT_GT(steer_method1({0, 0, 0}, {1, 1}, cfg), 0.0);
  EXPECT_DOUBLE_EQ(steer_method1({0, 0, 0}, {-1, -0.01}, cfg), -cfg.max_steer);
  EXPECT_NEAR(steer_method3({0, 0, 0}, {-1, 0}, {5, 0}, cfg), 0.0, 1e-15);
}

TEST(Steering, CarrotClampedToSegment)
{
  const Vec2 c = carrot_point({1.9, 0.3}, {0, 0}, {2, 0}, 1.0);
  EXPECT_EQ(c, (Vec2{2, 0}));
  EXPECT_THROW(carrot_point({0, 0}, {1, 1}, {1, 1}, 1.0), std::invalid_argument);
}

TEST(PathTracker, FinishesAtRouteEnd)
{
  TrackerConfig cfg;
  cfg.look_ahead = 0.5;
  PathTracker t({{0, 0}, {2, 0}, {4, 0}}, cfg);
  t.steer({0, 0, 0});
  EXPECT_FALSE(t.finished());
  t.steer({1.6, 0, 0});
  EXPECT_EQ(*t.manager().next(), (Vec2{4, 0}));
  t.steer({3.6, 0, 0});
  EXPECT_TRUE(t.finished());
}

TEST(Feed, PhaseSequenceAndDispensing)
{
  FeedPlan plan;
  plan.placements = {{1.0, 150}, {1.3, 150}, {1.6, 150}};
  plan.entry_position = 0.0;
  plan.deploy_time = 2.0;
  FeedState st;

  auto out = feed_step({-0.5, 0, 0}, plan, st, 0.0, 1.0);
  EXPECT_EQ(st.phase, FeedPhase::Transit);
  EXPECT_DOUBLE_EQ(out.speed, plan.speed_cap);

  out = feed_step({0.0, 0, 0}, plan, st, 1.0, 1.0);
  EXPECT_EQ(st.phase, FeedPhase::StopDeploy);
  EXPECT_EQ(out.speed, 0.0);
  out = feed_step({0.0, 0, 0}, plan, st, 2.5, 1.0);
  EXPECT_EQ(out.speed, 0.0);
  out = feed_step({0.0, 0, 0}, plan, st, 3.0, 1.0);
  EXPECT_EQ(st.phase, FeedPhase::Feeding);

  out = feed_step({0.99, 0, 0}, plan, st, 4.0, 1.0);
  EXPECT_FALSE(out.dispense);
  out = feed_step({1.01, 0, 0}, plan, st, 5.0, 1.0);
  ASSERT_TRUE(out.dispense);
  EXPECT_EQ(out.dispense->index, 0u);
  // Jumping past the tolerance of placement 1 skips it and dispenses 2.
  out = feed_step({1.61, 0, 0}, plan, st, 6.0, 1.0);
  ASSERT_TRUE(out.dispense);
  EXPECT_EQ(out.dispense->index, 2u);
  EXPECT_EQ(st.skipped, std::vector<std::size_t>{1});
  EXPECT_EQ(st.phase, FeedPhase::Done);
  EXPECT_EQ(out.speed, 0.0);
}

TEST(Feed, PlanValidation)
{
  FeedPlan plan;
  plan.placements = {{1.0, 50}, {0.5, 150}};
  EXPECT_EQ(plan.validate().size(), 2u);
}
