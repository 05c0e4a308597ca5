#include <gtest/gtest.h>

#include "agrisim/sensors.hpp"

using namespace agrisim;

TEST(Encoder, FloorQuantization)
{
  EXPECT_EQ(encoder_sample(kTwoPi, 1024), 1024.0);
  EXPECT_EQ(encoder_sample(kTwoPi * 0.99999, 1024), 1023.0);
  EXPECT_EQ(encoder_sample(-0.001, 1024), -1.0);
  EXPECT_NEAR(encoder_sample(1.0, 1024, false), 1024.0 / kTwoPi, 1e-12);
  EXPECT_THROW(encoder_sample(1.0, 0), std::invalid_argument);
}

TEST(Vision, FieldOfViewAndRange)
{
  LandmarkMap map;
  map.poles = {{3, 0}, {0, 3}, {10, 0}, {2, 1}};
  VisionModel v;
  Rng rng(1);
  const auto obs = vision_poles({0, 0, 0}, map, v, rng);
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_EQ(obs[0].landmark, 0u);
  EXPECT_NEAR(obs[0].range, 3.0, 1e-12);
  EXPECT_EQ(obs[1].landmark, 3u);
  EXPECT_NEAR(obs[1].bearing, std::atan2(1.0, 2.0), 1e-12);
}

TEST(Vision, SidewallSignedDistance)
{
  VisionModel v;
  Rng rng(1);
  const WallLine wall{1, 0, -1};  // y = 1
  const auto o = vision_sidewall({0, 0, 0}, wall, v, rng);
  EXPECT_NEAR(o.distance, -1.0, 1e-12);
  EXPECT_NEAR(o.angle, kPi / 2.0, 1e-12);
  EXPECT_THROW(vision_sidewall({}, WallLine{}, v, rng), std::invalid_argument);
}

TEST(Rfid, ZoneIsVehicleAlignedEllipse)
{
  RfidReaderModel m{ReaderPosition::Front, 0.5, 0.1, 0.05, 0.01};
  EXPECT_TRUE(in_detection_zone({0, 0, 0}, m, {0.59, 0.0}));
  EXPECT_FALSE(in_detection_zone({0, 0, 0}, m, {0.61, 0.0}));
  EXPECT_FALSE(in_detection_zone({0, 0, 0}, m, {0.5, 0.06}));
  EXPECT_TRUE(in_detection_zone({0, 0, kPi / 2}, m, {0.0, 0.59}));
  EXPECT_TRUE(in_detection_zone({0, 0, kPi / 2}, m, {0.04, 0.5}));
}

TEST(Rfid, EventsAlternatePerTagAndReader)
{
  LandmarkMap map;
  map.rfid_tags = {{1, {1.0, 0.0}}, {2, {2.0, 0.02}}};
  std::vector<TimedPose> fwd;
  for (int k = 0; k <= 400; ++k) fwd.push_back({k * 0.01, {-0.5 + 0.01 * k, 0.0, 0.0}});
  for (int k = 0; k <= 400; ++k) fwd.push_back({4.01 + k * 0.01, {3.5 - 0.01 * k, 0.0, 0.0}});
  std::vector<TagEvent> all;
  for (const auto& m : {RfidReaderModel{ReaderPosition::Front, 0.5, 0.1, 0.05, 0.01},
                        RfidReaderModel{ReaderPosition::Rear, -0.5, 0.1, 0.05, 0.01}}) {
    const auto ev = rfid_scan(fwd, map, m);
    EXPECT_EQ(ev.size(), 8u);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const TagEvent& a, const TagEvent& b) { return a.time < b.time; });
  EXPECT_TRUE(event_stream_well_formed(all));

  std::vector<TagEvent> bad{{1, ReaderPosition::Front, TagEdge::Out, 0.0}};
  EXPECT_FALSE(event_stream_well_formed(bad));
  bad = {{1, ReaderPosition::Front, TagEdge::In, 1.0}, {1, ReaderPosition::Front, TagEdge::Out, 0.5}};
  EXPECT_FALSE(event_stream_well_formed(bad));
}

TEST(Rng, SameSeedSameNoise)
{
  Rng a(42), b(42);
  ImuModel imu{0.01, 0.0};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(imu_sample(0.1, imu, a), imu_sample(0.1, imu, b));
}
