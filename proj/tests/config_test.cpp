#include <gtest/gtest.h>

#include "tirepde/config.hpp"

using namespace tirepde;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const ScenarioConfig c = parse_config_text("# nothing\n\n");
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.mode, RunMode::closed_loop);
  EXPECT_EQ(c.grid.cells, 50);
  EXPECT_DOUBLE_EQ(c.grid.dt, 1e-6);
  EXPECT_DOUBLE_EQ(c.initial_X(1), -0.25);
  EXPECT_DOUBLE_EQ(c.observer.gamma, 500.0);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(cells_of(c.plant_ic().z), 50);
  EXPECT_EQ(c.observer_ic().X_hat, Eigen::Vector2d::Zero());
}

TEST(Config, ParsesEveryKind) {
  const ScenarioConfig c = parse_config_text(
      "schema_version = 1\n"
      "mode = freq-analysis   # trailing comment\n"
      "vehicle.v_x = 65\n"
      "vehicle.chi = 1\n"
      "grid.cells = 100\n"
      "grid.dt = 5e-7\n"
      "steering.unit = rad\n"
      "sensors.enabled = false\n"
      "observer.path = kernel\n"
      "observer.filter_file = /tmp/f.txt\n"
      "seed = 42\n");
  EXPECT_EQ(c.mode, RunMode::freq_analysis);
  EXPECT_DOUBLE_EQ(c.vehicle.v_x, 65.0);
  EXPECT_EQ(c.vehicle.chi, 1);
  EXPECT_EQ(c.grid.cells, 100);
  EXPECT_EQ(c.steering.unit, AngleUnit::radians);
  EXPECT_FALSE(c.sensor_spec().has_value());
  EXPECT_EQ(c.observer.path, InjectionPath::kernel);
  EXPECT_EQ(c.filter_file, "/tmp/f.txt");
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, DiagnosticsCarryLineNumbers) {
  EXPECT_NE(error_of([] { parse_config_text("grid.cells = 10\nbogus = 1\n", "a.cfg"); })
                .find("a.cfg:2: unknown key 'bogus'"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config_text("\n\ngrid.dt = fast\n", "a.cfg"); }).find("a.cfg:3"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config_text("seed = 1\nseed = 2\n"); }).find("duplicate key"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config_text("seed =\n"); }).find("empty value"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config_text("just text\n"); }).find("key = value"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_config_text("grid.cells = 3.5\n"); }).find("integer"),
            std::string::npos);
}

TEST(Config, InvariantsChecked) {
  ScenarioConfig c;
  c.grid.dt = 1e-4;  // CFL 2.5
  EXPECT_NE(error_of([&] { validate(c); }).find("CFL"), std::string::npos);
  c = {};
  c.schema_version = 2;
  EXPECT_NE(error_of([&] { validate(c); }).find("schema_version"), std::string::npos);
  c = {};
  c.sensors.yaw_rate.period = 1.5e-6;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.vehicle.phi_1 = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.omega_min = 10.0;
  c.omega_max = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.observer.path = InjectionPath::kernel;
  c.observer.kernel.dt_kernel = 2.5e-6;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, OverridesAndPrecedence) {
  ScenarioConfig c = parse_config_text("observer.eta = 3\nseed = 5\n");
  apply_override(c, "observer.eta = 10");
  apply_override(c, "grid.horizon=0.5");
  EXPECT_DOUBLE_EQ(c.observer.eta, 10.0);
  EXPECT_DOUBLE_EQ(c.grid.horizon, 0.5);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_NE(error_of([&] { apply_override(c, "observer.eta"); }).find("--set"), std::string::npos);
  EXPECT_NE(error_of([&] { apply_override(c, "nope=1"); }).find("--set: unknown key"),
            std::string::npos);
}

TEST(Config, DescribeRoundTrips) {
  ScenarioConfig c;
  c.mode = RunMode::certify_poles;
  c.vehicle.v_x = 61.5;
  c.steering.rear = {0.5, 1.0, 3.0};
  c.sensors_enabled = false;
  c.observer.path = InjectionPath::kernel;
  c.seed = 9;
  const std::string text = describe(c);
  const ScenarioConfig back = parse_config_text(text);
  EXPECT_EQ(describe(back), text);
}

TEST(Config, EveryKeyIsSettable) {
  const auto keys = config_keys();
  EXPECT_GE(keys.size(), 50u);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  const std::string text = describe(ScenarioConfig{});
  for (const auto& k : keys) {
    if (k == "observer.filter_file") continue;  // empty by default, so not listed
    EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
  }
}
