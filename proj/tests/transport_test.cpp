#include <cmath>

#include <gtest/gtest.h>

#include "tirepde/frequency.hpp"
#include "tirepde/transport.hpp"

using namespace tirepde;

namespace {

const SystemMatrices& mats() {
  static const SystemMatrices m = build_matrices(VehicleParams{});
  return m;
}

}  // namespace

TEST(Grid, CflLimitIsEnforced) {
  GridSpec g;
  g.cells = 50;
  g.dt = 4e-5;  // CFL exactly 1
  EXPECT_NEAR(cfl_number(g, mats()), 1.0, 1e-12);
  EXPECT_NO_THROW(validate(g, mats()));
  g.dt = 5e-5;
  EXPECT_THROW(validate(g, mats()), ConfigError);
  g = {};
  g.cells = 1;
  EXPECT_THROW(validate(g, mats()), ConfigError);
}

TEST(Steering, DegreesAndRearFlag) {
  SteeringSpec s;
  s.rear = {1.0, 0.0, 0.0};
  const Eigen::Vector2d front_only = s.at(0.0, 0);
  EXPECT_NEAR(front_only(0), M_PI / 180.0, 1e-15);
  EXPECT_EQ(front_only(1), 0.0);
  EXPECT_NEAR(s.at(0.0, 1)(1), M_PI / 180.0, 1e-15);
  EXPECT_NEAR(s.at(M_PI / 20.0, 0)(0), 3.0 * M_PI / 180.0, 1e-14);
}

TEST(Transport, BoundaryConditionHeld) {
  PlantState x{{0.03, -0.25}, constant_profile(50, {0.0033, 0.0033})};
  EXPECT_TRUE(project_boundary(x.z));
  EXPECT_FALSE(project_boundary(x.z));
  for (int n = 0; n < 100; ++n) advance(x, {0.01, 0.0}, 1e-6, mats());
  EXPECT_EQ(x.z(0, 0), 0.0);
  EXPECT_EQ(x.z(1, 0), 0.0);
  EXPECT_EQ(plant_rhs(x, {0.01, 0.0}, mats()).z.col(0).norm(), 0.0);
}

TEST(Transport, UnitCflShiftsExactly) {
  // With lambda dt / dxi = 1 the upwind step is an exact shift.
  VehicleParams p;
  p.phi_1 = p.phi_2 = 1.0;  // no boundary feedback
  const SystemMatrices m = build_matrices(p);
  Profile z = zero_profile(10);
  for (int j = 1; j <= 10; ++j) z(0, j) = z(1, j) = j;
  const double dt = 0.1 / m.lambda(0);
  advance_transport(z, Eigen::Vector2d::Zero(), dt, m);
  for (int j = 1; j <= 10; ++j) EXPECT_DOUBLE_EQ(z(0, j), j - 1.0);
}

TEST(Transport, EulerStepMatchesRhs) {
  PlantState x{{0.03, -0.25}, constant_profile(20, {0.0033, -0.001})};
  project_boundary(x.z);
  const Eigen::Vector2d delta(0.02, 0.0);
  const double dt = 1e-6;
  const PlantState d = plant_rhs(x, delta, mats());
  const PlantState next = step(x, delta, dt, mats());
  EXPECT_LT((next.X - (x.X + dt * d.X)).norm(), 1e-15);
  EXPECT_LT((next.z - (x.z + dt * d.z)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(OpenLoop, ConstantSteeringReachesSteadyState) {
  // Steady state of the coupled system: z = Lambda^{-1} c xi with
  // c = (I - K2 Lambda^{-1})^{-1} (A2 X + B delta) and A1 X + G K1 \int z = 0.
  const SystemMatrices& m = mats();
  const Eigen::Vector2d delta(M_PI / 180.0, 0.0);
  const Eigen::Matrix2d Li = m.Lambda.inverse();
  const Eigen::Matrix2d M = (Eigen::Matrix2d::Identity() - m.K2 * Li).inverse();
  const Eigen::Matrix2d S = 0.5 * m.G * m.K1 * Li * M;
  const Eigen::Vector2d X_ss = -(m.A1 + S * m.A2).inverse() * (S * m.B * delta);

  GridSpec g;
  g.cells = 50;
  g.dt = 4e-5;
  g.horizon = 40.0;
  SteeringSpec s;
  s.front = {1.0, 0.0, 0.0};
  OpenLoopOptions opt;
  opt.log.log_period = 1.0;
  const SimTrace tr = simulate_open_loop({Eigen::Vector2d::Zero(), zero_profile(50)}, s, g, m, opt);
  ASSERT_FALSE(tr.aborted_at);
  const Eigen::Vector2d X = tr.rows.back().X;
  EXPECT_LT((X - X_ss).norm() / X_ss.norm(), 1e-3) << X.transpose() << " vs " << X_ss.transpose();
}

TEST(OpenLoop, RestStaysAtRest) {
  GridSpec g;
  g.horizon = 0.01;
  const SimTrace tr = simulate_open_loop({Eigen::Vector2d::Zero(), zero_profile(50)},
                                         SteeringSpec::none(), g, mats());
  for (const auto& r : tr.rows) EXPECT_EQ(r.plant_norm, 0.0);
  EXPECT_TRUE(std::isnan(tr.rows.back().err_total));
}

TEST(OpenLoop, LogAndSnapshotCadence) {
  GridSpec g;
  g.horizon = 0.02;
  OpenLoopOptions opt;
  opt.log.log_period = 1e-3;
  opt.log.snapshot_period = 5e-3;
  const SimTrace tr = simulate_open_loop({Eigen::Vector2d(0.03, -0.25), zero_profile(50)},
                                         SteeringSpec{}, g, mats(), opt);
  EXPECT_EQ(tr.rows.size(), 21u);
  EXPECT_EQ(tr.snapshots.size(), 5u);
  EXPECT_NEAR(tr.rows.back().t, 0.02, 1e-12);
  EXPECT_NEAR(tr.rows[0].plant_norm, std::hypot(0.03, 0.25), 1e-15);
}

TEST(OpenLoop, NonFiniteStateAborts) {
  GridSpec g;
  g.horizon = 0.01;
  PlantState x{{std::nan(""), 0.0}, zero_profile(50)};
  OpenLoopOptions opt;
  opt.log.finite_check_every = 10;
  const SimTrace tr = simulate_open_loop(x, SteeringSpec{}, g, mats(), opt);
  ASSERT_TRUE(tr.aborted_at.has_value());
  EXPECT_LE(*tr.aborted_at, 1e-5);
}

TEST(TransportDecay, GeometricPerTransitTime) {
  // Each transit of the patch (1 / lambda = 2 ms) multiplies the boundary
  // feedback by psi = 0.08, so the decay is far faster than 1e-3 in 50 ms.
  GridSpec g;
  g.horizon = 0.05;
  const auto hist = transport_decay_history(constant_profile(50, {0.0033, 0.0033}), g, mats());
  EXPECT_NEAR(hist.front().second, 0.0033 * std::sqrt(2.0 * (1.0 - 0.5 / 50.0)), 1e-6);
  EXPECT_LT(hist.back().second / hist.front().second, 1e-3);
  for (std::size_t i = 1; i < hist.size(); ++i) {
    EXPECT_LE(hist[i].second, hist[i - 1].second * (1.0 + 1e-12));
  }
}
