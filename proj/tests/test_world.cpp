#include <gtest/gtest.h>

#include <random>

#include "agrisim/world.hpp"

using namespace agrisim;

TEST(NormalizeAngle, RangeAndBoundary)
{
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(3.0 * kPi), kPi);
  EXPECT_NEAR(normalize_angle(2.5 * kPi), 0.5 * kPi, 1e-12);
  EXPECT_THROW(normalize_angle(std::nan("")), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double n = normalize_angle(a);
    EXPECT_GT(n, -kPi);
    EXPECT_LE(n, kPi);
    EXPECT_NEAR(std::remainder(a - n, kTwoPi), 0.0, 1e-9);
  }
}

TEST(RouteSegment, QuarterArcGeometry)
{
  const auto arc = RouteSegment::arc({0, 0}, {1, 1}, 1.0, TurnDirection::Ccw);
  EXPECT_NEAR(arc.center().x, 0.0, 1e-12);
  EXPECT_NEAR(arc.center().y, 1.0, 1e-12);
  EXPECT_NEAR(arc.sweep(), kPi / 2.0, 1e-12);
  EXPECT_NEAR(arc.length(), kPi / 2.0, 1e-12);
  const Vec2 mid = arc.point_at(arc.length() / 2.0);
  EXPECT_NEAR(mid.x, std::sin(kPi / 4.0), 1e-12);
  EXPECT_NEAR(mid.y, 1.0 - std::cos(kPi / 4.0), 1e-12);

  const auto cw = RouteSegment::arc({0, 0}, {1, -1}, 1.0, TurnDirection::Cw);
  EXPECT_NEAR(cw.center().y, -1.0, 1e-12);
}

TEST(Route, DensifyKeepsEndpointsAndSpacing)
{
  Route r({RouteSegment::line({0, 0}, {4, 0}), RouteSegment::arc({4, 0}, {5, 1}, 1.0, TurnDirection::Ccw),
           RouteSegment::line({5, 1}, {5, 4})});
  const auto pts = r.densify(0.3);
  EXPECT_EQ(pts.front(), (Vec2{0, 0}));
  EXPECT_EQ(pts.back(), (Vec2{5, 4}));
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LE(distance(pts[i - 1], pts[i]), 0.3 + 1e-9);
  for (const auto& p : pts) EXPECT_LT(xte({p.x, p.y, 0.0}, r), 1e-9);
  EXPECT_THROW(r.densify(0.0), std::invalid_argument);
}

TEST(Route, Validation)
{
  EXPECT_FALSE(validate_route(Route{}).empty());
  EXPECT_TRUE(validate_route(Route::from_waypoints({{0, 0}, {1, 0}, {1, 1}})).empty());

  const auto gap = validate_route(Route({RouteSegment::line({0, 0}, {1, 0}), RouteSegment::line({1.1, 0}, {2, 0})}));
  ASSERT_EQ(gap.size(), 1u);
  EXPECT_EQ(gap[0].rule, "continuity");

  const auto circle = validate_route(Route({RouteSegment::arc({0, 0}, {3, 0}, 1.0, TurnDirection::Ccw)}));
  ASSERT_EQ(circle.size(), 1u);
  EXPECT_EQ(circle[0].rule, "arc-circle");

  const auto zero = validate_route(Route({RouteSegment::line({1, 1}, {1, 1})}));
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0].rule, "line-length");
}

namespace {

// Dense sampling oracle for the distance to a route.
double brute_xte(Vec2 p, const Route& r)
{
  double best = 1e300;
  for (const auto& s : r.segments()) {
    const int n = 20000;
    for (int i = 0; i <= n; ++i) best = std::min(best, distance(p, s.point_at(s.length() * i / n)));
  }
  return best;
}

Route mixed_route()
{
  return Route({RouteSegment::line({0, 0}, {3, 0}), RouteSegment::arc({3, 0}, {5, 2}, 2.0, TurnDirection::Ccw),
                RouteSegment::line({5, 2}, {5, 5}), RouteSegment::arc({5, 5}, {6, 6}, 1.0, TurnDirection::Cw)});
}

}  // namespace

TEST(Xte, MatchesDenseSampling)
{
  const Route r = mixed_route();
  ASSERT_TRUE(validate_route(r).empty());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-2.0, 8.0), uy(-2.0, 8.0);
  for (int i = 0; i < 60; ++i) {
    const Vec2 p{ux(rng), uy(rng)};
    EXPECT_NEAR(xte({p.x, p.y, 0.3}, r), brute_xte(p, r), 1e-3);
  }
}

TEST(Xte, InvariantUnderRigidTransform)
{
  const Route r = mixed_route();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 7.0), ang(-kPi, kPi);
  for (int k = 0; k < 10; ++k) {
    const RigidTransform t{ang(rng), {u(rng), u(rng)}};
    const Route tr = t.apply(r);
    for (int i = 0; i < 20; ++i) {
      const Pose2D p{u(rng), u(rng), ang(rng)};
      EXPECT_NEAR(xte(t.apply(p), tr), xte(p, r), 1e-9);
    }
  }
}

TEST(LandmarkMap, Validation)
{
  LandmarkMap m;
  m.sidewall = WallLine{0, 0, 1};
  m.rfid_tags = {{1, {0, 0}}, {1, {1, 0}}};
  m.tag_spacing = 25.0;
  m.feed_zones = {{{0, 0}, 0.0}};
  EXPECT_EQ(m.validate().size(), 4u);
  EXPECT_NE(m.find_tag(1), nullptr);
  EXPECT_EQ(m.find_tag(2), nullptr);
}
