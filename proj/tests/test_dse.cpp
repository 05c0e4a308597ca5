#include <gtest/gtest.h>

#include <random>
#include <set>

#include "agrisim/dse.hpp"

using namespace agrisim;

TEST(DesignSpace, SizeAndLexicographicPoints)
{
  DesignSpace s;
  s.axes = {{"speed", ContinuousRange{1.0, 2.0, 0.5}}, {"cg_shift", DiscreteSet{{0.0, 0.1}}},
            {"radius_method", ModeSet{{"static", "estimator"}}}};
  ASSERT_EQ(s.size(), 12u);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::string key;
    for (const auto& [n, v] : s.point(i)) key += format_value(v) + ",";
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 12u);
  const auto p = s.point(5);
  EXPECT_EQ(std::get<double>(p[0].second), 1.5);
  EXPECT_EQ(std::get<double>(p[1].second), 0.0);
  EXPECT_EQ(std::get<std::string>(p[2].second), "estimator");

  DesignSpace bad;
  bad.axes = {{"a", ContinuousRange{1.0, 1.0, 0.1}}, {"a", DiscreteSet{}}};
  EXPECT_EQ(bad.validate().size(), 3u);
}

TEST(PointSeed, DistinctAndStable)
{
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(point_seed(7, i));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(point_seed(7, 3), point_seed(7, 3));
  EXPECT_NE(point_seed(7, 3), point_seed(8, 3));
}

TEST(Sweep, WorkerCountDoesNotChangeResults)
{
  DesignSpace s;
  s.axes = {{"x", ContinuousRange{0.0, 1.0, 0.05}}};
  PointEvaluator eval = [](const Assignment& a, std::uint64_t seed) {
    Evaluation e;
    e.cost = std::get<double>(a[0].second) + static_cast<double>(seed % 1000) * 1e-6;
    e.viable = e.cost < 0.5;
    return e;
  };
  const auto a = sweep(s, eval, 1, 3), b = sweep(s, eval, 4, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cost, b[i].cost);
    EXPECT_EQ(a[i].seed, b[i].seed);
  }
}

TEST(Sweep, ExceptionsBecomeFailures)
{
  DesignSpace s;
  s.axes = {{"x", DiscreteSet{{1.0, 2.0}}}};
  const auto r = sweep(s, [](const Assignment& a, std::uint64_t) -> Evaluation {
    if (std::get<double>(a[0].second) > 1.5) throw std::runtime_error("boom");
    Evaluation e;
    e.viable = true;
    return e;
  }, 2, 1);
  EXPECT_TRUE(r[0].viable);
  EXPECT_FALSE(r[1].viable);
  EXPECT_EQ(r[1].failure, "error: boom");
}

TEST(Boundary, ClassificationAndViolations)
{
  std::vector<CandidateResult> rs;
  auto add = [&](double speed, double cg, bool ok) {
    CandidateResult r;
    r.assignment = {{"speed", speed}, {"cg_shift", cg}};
    r.viable = ok;
    rs.push_back(r);
  };
  add(1.0, 0.0, true);
  add(1.5, 0.0, true);
  add(2.0, 0.0, false);
  add(1.0, 0.1, true);
  add(1.5, 0.1, false);
  add(2.0, 0.1, true);
  const auto g = classify_boundary(rs);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(*g[0].max_viable_speed, 1.5);
  EXPECT_TRUE(g[0].violations.empty());
  EXPECT_EQ(g[1].violations, std::vector<double>{2.0});

  const auto r = refinement_range(g, {1.0, 2.0, 0.5}, 0.25, 0.05);
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->lo, 1.25);
  EXPECT_DOUBLE_EQ(r->hi, 2.0);
}

TEST(Golden, QuadraticWithinBound)
{
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(0.5, 19.5);
  for (int i = 0; i < 50; ++i) {
    const double x0 = c(rng);
    const auto r = golden_section([&](double x) { return (x - x0) * (x - x0); }, 0.3, 20.0, 0.01);
    EXPECT_LE(std::abs(r.x - x0), 0.01);
    EXPECT_LE(r.evaluations, golden_evaluation_bound(19.7, 0.01));
    EXPECT_FALSE(r.unimodality_warning);
    for (std::size_t k = 1; k < r.widths.size(); ++k) EXPECT_LT(r.widths[k], r.widths[k - 1]);
  }
}

TEST(Golden, FallbackOnMultimodal)
{
  // Tied plateau probes send the bracket to the plateau's right edge, past a
  // deeper well on the left.
  auto f = [](double x) { return x >= 2.0 && x <= 4.0 ? -3.0 : (x <= 13.3 ? -1.0 : 0.0); };
  const auto r = golden_section(f, 0.3, 20.0, 0.01);
  EXPECT_TRUE(r.unimodality_warning);
  EXPECT_GT(r.fallback_evaluations, 0);
  EXPECT_EQ(r.cost, -3.0);
  EXPECT_FALSE(golden_section(f, 0.3, 20.0, 0.01, 0).fallback_evaluations > 0);
  EXPECT_THROW(golden_section(f, 1.0, 1.0, 0.1), std::invalid_argument);
}

TEST(Golden, StaircasePrefersRightOnTies)
{
  auto f = [](double d) { return -std::floor(d / 0.3); };
  const auto r = golden_section(f, 0.3, 20.0, 0.01);
  EXPECT_GT(r.x, 19.7);
}

TEST(MinMeanMax, Expansion)
{
  const MinMeanMaxSet set;
  EXPECT_EQ(environment_points(set, ExpansionMode::OneFactorAtATime).size(), 11u);
  EXPECT_EQ(environment_points(set, ExpansionMode::FullFactorial).size(), 243u);
  const auto configs = system_configs();
  EXPECT_EQ(configs.size(), 9u);
  const auto cells = expand_min_mean_max(set, configs, ExpansionMode::OneFactorAtATime);
  EXPECT_EQ(cells.size(), 99u);
  EXPECT_EQ(cells.front().assignment.size(), 7u);
  const auto first = environment_points(set, ExpansionMode::OneFactorAtATime).front();
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(std::get<double>(first[i].second), set.factors[i].mean);
}

TEST(Quantile, LinearInterpolation)
{
  EXPECT_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_EQ(quantile({7}, 0.9), 7.0);
  const auto b = boxplot_stats({5, 1, 9, 3});
  EXPECT_EQ(b.whisker_lo, 1.0);
  EXPECT_EQ(b.whisker_hi, 9.0);
  EXPECT_EQ(b.median, 4.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}
