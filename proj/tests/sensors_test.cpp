#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "tirepde/sensors.hpp"

using namespace tirepde;

TEST(Sensors, DefaultsAndValidation) {
  const SensorSpec s;
  EXPECT_DOUBLE_EQ(s.yaw_rate.stddev, 0.01);
  EXPECT_DOUBLE_EQ(s.yaw_rate.period, 0.005);
  EXPECT_DOUBLE_EQ(s.lateral_accel.stddev, 0.5);
  EXPECT_DOUBLE_EQ(s.lateral_accel.period, 0.01);
  EXPECT_EQ(period_in_steps(0.005, 1e-6, "x"), 5000);
  EXPECT_THROW(period_in_steps(1.5e-6, 1e-6, "x"), ConfigError);
  EXPECT_THROW(period_in_steps(0.0, 1e-6, "x"), ConfigError);
  SensorSpec bad;
  bad.yaw_rate.stddev = -1.0;
  EXPECT_THROW(validate(bad, 1e-6), ConfigError);
}

TEST(Sensors, SampleAndHold) {
  SensorSpec s;
  s.yaw_rate = {0.0, 3e-3};
  s.lateral_accel = {0.0, 5e-3};
  SensorModel model(s, 1e-3);
  for (int n = 0; n < 20; ++n) {
    const Eigen::Vector2d y = model.sample(n, Eigen::Vector2d(n, -n));
    EXPECT_EQ(y(0), 3 * (n / 3));
    EXPECT_EQ(y(1), -5 * (n / 5));
  }
}

TEST(Sensors, IdealIsTransparent) {
  SensorModel model(SensorSpec::ideal(1e-6), 1e-6);
  for (int n = 0; n < 5; ++n) {
    const Eigen::Vector2d clean(std::sin(n), std::cos(n));
    EXPECT_EQ(model.sample(n, clean), clean);
  }
}

TEST(Sensors, NoiseStatistics) {
  // Sample mean and variance against the configured distribution: bounds at
  // about 5 standard errors for n = 20000 draws.
  SensorSpec s;
  s.yaw_rate.period = s.lateral_accel.period = 1.0;
  SensorModel model(s, 1.0);
  const int n = 20000;
  double sum[2] = {0, 0}, sq[2] = {0, 0}, cross = 0;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector2d y = model.sample(k, Eigen::Vector2d(1.0, 2.0)) - Eigen::Vector2d(1.0, 2.0);
    for (int c = 0; c < 2; ++c) {
      sum[c] += y(c);
      sq[c] += y(c) * y(c);
    }
    cross += y(0) * y(1);
  }
  const double sd[2] = {0.01, 0.5};
  for (int c = 0; c < 2; ++c) {
    EXPECT_LT(std::abs(sum[c] / n), 5.0 * sd[c] / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(sq[c] / n), sd[c], 5.0 * sd[c] / std::sqrt(2.0 * n));
  }
  EXPECT_LT(std::abs(cross / n) / (sd[0] * sd[1]), 5.0 / std::sqrt(n));
}

TEST(Sensors, SeedDeterminesStream) {
  const auto run = [](std::uint64_t seed) {
    SensorSpec s;
    s.seed = seed;
    std::vector<Eigen::Vector2d> clean(20000, Eigen::Vector2d::Zero());
    return sample_and_corrupt(clean, s, 1e-3);
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(2);
  ASSERT_EQ(a.size(), 20000u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  // Held between samples: yaw rate every 5 steps, lateral acceleration every 10.
  EXPECT_EQ(a[5](0), a[9](0));
  EXPECT_NE(a[9](0), a[10](0));
  EXPECT_EQ(a[10](1), a[19](1));
}
