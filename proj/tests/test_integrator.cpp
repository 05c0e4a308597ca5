#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "agrisim/integrator.hpp"

using namespace agrisim;

TEST(Rk4, ExactForCubicInTime)
{
  // y' = 3t^2 + 2t + 1 integrates exactly.
  auto f = [](double t, const StateVector<1>&) { return StateVector<1>{3 * t * t + 2 * t + 1}; };
  StateVector<1> y{0.0};
  double t = 0.0;
  for (int i = 0; i < 7; ++i) {
    y = rk4_step(y, t, 0.3, f);
    t += 0.3;
  }
  EXPECT_NEAR(y[0], t * t * t + t * t + t, 1e-12);
}

TEST(Rk4, ExactForLinearSystemTaylorTerms)
{
  // One step on y' = y reproduces the 4th-order Taylor polynomial.
  auto f = [](double, const StateVector<1>& y) { return y; };
  const double h = 0.1;
  const auto y = rk4_step(StateVector<1>{1.0}, 0.0, h, f);
  EXPECT_NEAR(y[0], 1 + h + h * h / 2 + h * h * h / 6 + h * h * h * h / 24, 1e-15);
}

TEST(Rk4, FourthOrderConvergence)
{
  auto f = [](double, const StateVector<2>& y) { return StateVector<2>{y[1], -y[0]}; };
  auto err = [&](double dt) {
    StateVector<2> y{1.0, 0.0};
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) y = rk4_step(y, i * dt, dt, f);
    return std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
  };
  const double e1 = err(0.04), e2 = err(0.02);
  EXPECT_GT(std::log2(e1 / e2), 3.8);
}

TEST(Rk4, RejectsNonFiniteAndBadStep)
{
  auto bad = [](double, const StateVector<1>&) { return StateVector<1>{std::numeric_limits<double>::infinity()}; };
  EXPECT_THROW(rk4_step(StateVector<1>{0.0}, 0.0, 0.1, bad), NonFiniteState);
  auto ok = [](double, const StateVector<1>& y) { return y; };
  EXPECT_THROW(rk4_step(StateVector<1>{0.0}, 0.0, 0.0, ok), std::invalid_argument);
}
