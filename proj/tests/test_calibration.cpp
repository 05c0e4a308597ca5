#include <gtest/gtest.h>

#include <random>

#include "agrisim/calibration.hpp"

using namespace agrisim;

namespace {

ReaderGeometry geometry_of(const PassSetup& s)
{
  return {s.front.mount_offset - s.rear.mount_offset, s.front.semi_major, s.rear.semi_major};
}

// Grid plus local refinement over R for the 1-D least-squares objective.
double brute_force_radius(const TagPassRecord& rec, int g_o)
{
  auto cost = [&](double r) {
    double c = 0.0;
    for (const auto& iv : rec.intervals) {
      if (!iv.complete) continue;
      const double e = iv.distance - kTwoPi * r * iv.counts / g_o;
      c += e * e;
    }
    return c;
  };
  double lo = 0.05, hi = 1.0;
  for (int round = 0; round < 12; ++round) {
    double best = lo, bc = cost(lo);
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
      const double r = lo + (hi - lo) * i / n;
      if (cost(r) < bc) {
        bc = cost(r);
        best = r;
      }
    }
    const double w = (hi - lo) / n;
    lo = best - w;
    hi = best + w;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(ReaderGeometry, ReferenceDistances)
{
  const ReaderGeometry g{1.0, 0.1, 0.05};
  EXPECT_NEAR(g.reference(IntervalKind::InIn), 1.05, 1e-15);
  EXPECT_NEAR(g.reference(IntervalKind::OutOut), 0.95, 1e-15);
  EXPECT_NEAR(g.reference(IntervalKind::InOut), 1.15, 1e-15);
  EXPECT_NEAR(g.reference(IntervalKind::OutIn), 0.85, 1e-15);
  EXPECT_NEAR(g.reference(IntervalKind::InIn, false), 0.95, 1e-15);
}

TEST(Calibration, NoiseFreeRecoveryIsExact)
{
  PassSetup s;
  s.true_radius = 0.287;
  s.quantized = false;
  s.exact_edges = true;
  const auto pass = simulate_tag_pass(s, [](double) { return 0.4; });
  const auto a = assemble_pass(pass.events, pass.encoder_log, geometry_of(s));
  ASSERT_TRUE(a.record);
  EXPECT_TRUE(a.record->front_seen && a.record->rear_seen);
  EXPECT_TRUE(a.diagnostics.empty());
  EXPECT_NEAR(ls_radius(*a.record, s.counts_per_rev), s.true_radius, 1e-9);
  EXPECT_NEAR(tag_speed(*a.record), 0.4, 1e-9);
}

TEST(Calibration, LeastSquaresMatchesBruteForce)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> r(0.25, 0.32), v(0.2, 1.0);
  for (int i = 0; i < 10; ++i) {
    PassSetup s;
    s.true_radius = r(rng);
    const double speed = v(rng);
    const auto pass = simulate_tag_pass(s, [&](double t) { return speed * (1.0 + 0.2 * std::sin(t)); });
    const auto a = assemble_pass(pass.events, pass.encoder_log, geometry_of(s));
    ASSERT_TRUE(a.record);
    EXPECT_NEAR(ls_radius(*a.record, s.counts_per_rev), brute_force_radius(*a.record, s.counts_per_rev), 1e-6);
  }
}

TEST(Calibration, ReversePassUsesRearAsLeadingReader)
{
  PassSetup s;
  s.start = 2.0;
  s.stop = -2.0;
  s.front.semi_major = 0.12;
  s.quantized = false;
  s.exact_edges = true;
  const auto pass = simulate_tag_pass(s, [](double) { return -0.3; });
  const auto a = assemble_pass(pass.events, pass.encoder_log, geometry_of(s));
  ASSERT_TRUE(a.record);
  EXPECT_FALSE(a.record->forward);
  EXPECT_NEAR(ls_radius(*a.record, s.counts_per_rev), s.true_radius, 1e-9);
}

TEST(Calibration, PolledEdgesLagByAtMostOnePoll)
{
  PassSetup s;
  s.quantized = false;
  s.front.semi_major = 0.12;
  const auto polled = simulate_tag_pass(s, [](double) { return 0.3; });
  s.exact_edges = true;
  const auto exact = simulate_tag_pass(s, [](double) { return 0.3; });
  ASSERT_EQ(polled.events.size(), 4u);
  ASSERT_EQ(exact.events.size(), 4u);
  EXPECT_TRUE(event_stream_well_formed(exact.events));
  for (const auto& e : exact.events) {
    const auto it = std::find_if(polled.events.begin(), polled.events.end(), [&](const TagEvent& p) {
      return p.reader == e.reader && p.edge == e.edge;
    });
    ASSERT_NE(it, polled.events.end());
    EXPECT_GE(it->time, e.time - 1e-12);
    EXPECT_LE(it->time - e.time, s.front.poll_period + 1e-12);
  }
}

TEST(Calibration, MissingReaderDiagnosed)
{
  PassSetup s;
  s.lateral_offset = 0.2;  // outside both zones
  const auto pass = simulate_tag_pass(s, [](double) { return 0.5; });
  const auto a = assemble_pass(pass.events, pass.encoder_log, geometry_of(s));
  EXPECT_FALSE(a.record);
  EXPECT_FALSE(a.diagnostics.empty());
  TagPassRecord empty;
  EXPECT_THROW(ls_radius(empty, 1024), EstimatorUnavailable);
  EXPECT_THROW(tag_speed(empty), EstimatorUnavailable);
}

TEST(RadiusKalman, ConvergesToTrueRadius)
{
  PassSetup s;
  s.true_radius = 0.29;
  RadiusKalman kf(0.3, 1e-4);
  for (int k = 0; k < 20; ++k) {
    const auto pass = simulate_tag_pass(s, [](double) { return 0.5; });
    const auto a = assemble_pass(pass.events, pass.encoder_log, geometry_of(s));
    kf.add_pass(*a.record, s.counts_per_rev);
  }
  EXPECT_NEAR(kf.estimate(), 0.29, 2e-3);
  EXPECT_LT(kf.variance(), 1e-4);
}

TEST(ReaderHealth, Rules)
{
  std::vector<PassObservation> h{{1, true, false, {}}, {2, true, false, {}}, {3, true, false, {}}};
  auto d = reader_health(h);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].issue, HealthIssue::ReaderFaulty);
  EXPECT_EQ(*d[0].reader, ReaderPosition::Rear);

  h = {{5, false, false, {}}, {5, false, false, {}}};
  d = reader_health(h);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].issue, HealthIssue::ReplaceTag);

  h = {{6, true, true, 0.2}, {6, true, true, 0.15}};
  d = reader_health(h);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].issue, HealthIssue::TagMisplaced);

  h = {{7, true, true, 0.01}, {8, true, true, {}}};
  EXPECT_TRUE(reader_health(h).empty());
}
