#pragma once

// Scenario configuration: a flat `key = value` text format.
//
//   # comment
//   schema_version = 1
//   mode = closed-loop
//   vehicle.v_x = 50
//
// Every key is optional; an empty file yields the default scenario. Unknown
// keys, malformed values and violated invariants are reported with the line
// they come from.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tirepde/errors.hpp"
#include "tirepde/lambert_w.hpp"
#include "tirepde/model.hpp"
#include "tirepde/observer.hpp"
#include "tirepde/sensors.hpp"
#include "tirepde/transport.hpp"

namespace tirepde {

inline constexpr int kSchemaVersion = 1;

enum class RunMode { open_loop, closed_loop, freq_analysis, certify_poles, acceptance };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::open_loop: return "open-loop";
    case RunMode::closed_loop: return "closed-loop";
    case RunMode::freq_analysis: return "freq-analysis";
    case RunMode::certify_poles: return "certify-poles";
    case RunMode::acceptance: return "acceptance";
  }
  return "?";
}

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  RunMode mode = RunMode::closed_loop;
  VehicleParams vehicle;
  GridSpec grid;
  SteeringSpec steering;

  Eigen::Vector2d initial_X{0.03, -0.25};
  Eigen::Vector2d initial_z{0.0033, 0.0033};  ///< constant profile
  Eigen::Vector2d observer_initial_X = Eigen::Vector2d::Zero();

  bool sensors_enabled = true;
  SensorSpec sensors;  ///< sensors.seed mirrors `seed`
  std::uint64_t seed = 1;

  InjectionSpec observer;
  std::string filter_file;  ///< load a saved rational filter instead of fitting

  std::string output_dir = "out";
  LogOptions log{1e-3, 0.01, 1000};

  double omega_min = 1e-2;
  double omega_max = 1e5;
  int omega_points = 2000;

  int k_max = 50;
  int spot_checks = 1000;

  PlantState plant_ic() const {
    return {initial_X, constant_profile(grid.cells, initial_z)};
  }
  ObserverState observer_ic() const {
    return {observer_initial_X, zero_profile(grid.cells)};
  }
  std::optional<SensorSpec> sensor_spec() const {
    if (!sensors_enabled) return std::nullopt;
    SensorSpec s = sensors;
    s.seed = seed;
    return s;
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& v) {
  Int out = 0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

template <class F>
Setter num(F f) {
  return [f](ScenarioConfig& c, const std::string& v) { f(c) = to_double(v); };
}

template <class F>
Setter integer(F f) {
  return [f](ScenarioConfig& c, const std::string& v) {
    auto& ref = f(c);
    ref = to_int<std::remove_reference_t<decltype(ref)>>(v);
  };
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["schema_version"] = integer([](ScenarioConfig& c) -> int& { return c.schema_version; });
    t["mode"] = [](ScenarioConfig& c, const std::string& v) {
      for (RunMode m : {RunMode::open_loop, RunMode::closed_loop, RunMode::freq_analysis,
                        RunMode::certify_poles, RunMode::acceptance}) {
        if (v == to_string(m)) {
          c.mode = m;
          return;
        }
      }
      throw ConfigError("mode must be one of open-loop, closed-loop, freq-analysis, "
                        "certify-poles, acceptance; got '" + v + "'");
    };
    t["seed"] = integer([](ScenarioConfig& c) -> std::uint64_t& { return c.seed; });

    t["vehicle.v_x"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.v_x; });
    t["vehicle.m"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.m; });
    t["vehicle.I_z"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.I_z; });
    t["vehicle.l_1"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.l_1; });
    t["vehicle.l_2"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.l_2; });
    t["vehicle.F_z1"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.F_z1; });
    t["vehicle.F_z2"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.F_z2; });
    t["vehicle.L_1"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.L_1; });
    t["vehicle.L_2"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.L_2; });
    t["vehicle.sigma_1"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.sigma_1; });
    t["vehicle.sigma_2"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.sigma_2; });
    t["vehicle.phi_1"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.phi_1; });
    t["vehicle.phi_2"] = num([](ScenarioConfig& c) -> double& { return c.vehicle.phi_2; });
    t["vehicle.chi"] = integer([](ScenarioConfig& c) -> int& { return c.vehicle.chi; });

    t["grid.cells"] = integer([](ScenarioConfig& c) -> int& { return c.grid.cells; });
    t["grid.dt"] = num([](ScenarioConfig& c) -> double& { return c.grid.dt; });
    t["grid.horizon"] = num([](ScenarioConfig& c) -> double& { return c.grid.horizon; });

    t["steering.unit"] = [](ScenarioConfig& c, const std::string& v) {
      if (v == "deg" || v == "degrees") {
        c.steering.unit = AngleUnit::degrees;
      } else if (v == "rad" || v == "radians") {
        c.steering.unit = AngleUnit::radians;
      } else {
        throw ConfigError("steering.unit must be deg or rad; got '" + v + "'");
      }
    };
    t["steering.front.offset"] = num([](ScenarioConfig& c) -> double& { return c.steering.front.offset; });
    t["steering.front.amplitude"] = num([](ScenarioConfig& c) -> double& { return c.steering.front.amplitude; });
    t["steering.front.omega"] = num([](ScenarioConfig& c) -> double& { return c.steering.front.omega; });
    t["steering.rear.offset"] = num([](ScenarioConfig& c) -> double& { return c.steering.rear.offset; });
    t["steering.rear.amplitude"] = num([](ScenarioConfig& c) -> double& { return c.steering.rear.amplitude; });
    t["steering.rear.omega"] = num([](ScenarioConfig& c) -> double& { return c.steering.rear.omega; });

    t["initial.v_y"] = num([](ScenarioConfig& c) -> double& { return c.initial_X(0); });
    t["initial.r"] = num([](ScenarioConfig& c) -> double& { return c.initial_X(1); });
    t["initial.z1"] = num([](ScenarioConfig& c) -> double& { return c.initial_z(0); });
    t["initial.z2"] = num([](ScenarioConfig& c) -> double& { return c.initial_z(1); });

    t["sensors.enabled"] = [](ScenarioConfig& c, const std::string& v) {
      c.sensors_enabled = to_bool(v);
    };
    t["sensors.yaw_rate_std"] = num([](ScenarioConfig& c) -> double& { return c.sensors.yaw_rate.stddev; });
    t["sensors.yaw_rate_period"] = num([](ScenarioConfig& c) -> double& { return c.sensors.yaw_rate.period; });
    t["sensors.lateral_accel_std"] = num([](ScenarioConfig& c) -> double& { return c.sensors.lateral_accel.stddev; });
    t["sensors.lateral_accel_period"] = num([](ScenarioConfig& c) -> double& { return c.sensors.lateral_accel.period; });

    t["observer.gamma"] = num([](ScenarioConfig& c) -> double& { return c.observer.gamma; });
    t["observer.eta"] = num([](ScenarioConfig& c) -> double& { return c.observer.eta; });
    t["observer.filter_order"] = integer([](ScenarioConfig& c) -> int& { return c.observer.filter_order; });
    t["observer.path"] = [](ScenarioConfig& c, const std::string& v) {
      if (v == "rational") {
        c.observer.path = InjectionPath::rational;
      } else if (v == "kernel") {
        c.observer.path = InjectionPath::kernel;
      } else {
        throw ConfigError("observer.path must be rational or kernel; got '" + v + "'");
      }
    };
    t["observer.fit_order_max"] = integer([](ScenarioConfig& c) -> int& { return c.observer.fit.order_max; });
    t["observer.fit_tol"] = num([](ScenarioConfig& c) -> double& { return c.observer.fit.tol; });
    t["observer.filter_file"] = [](ScenarioConfig& c, const std::string& v) { c.filter_file = v; };
    t["observer.kernel_dt"] = num([](ScenarioConfig& c) -> double& { return c.observer.kernel.dt_kernel; });
    t["observer.kernel_horizon"] = num([](ScenarioConfig& c) -> double& { return c.observer.kernel.T_h; });
    t["observer.initial_v_y"] = num([](ScenarioConfig& c) -> double& { return c.observer_initial_X(0); });
    t["observer.initial_r"] = num([](ScenarioConfig& c) -> double& { return c.observer_initial_X(1); });

    t["output.dir"] = [](ScenarioConfig& c, const std::string& v) { c.output_dir = v; };
    t["output.log_period"] = num([](ScenarioConfig& c) -> double& { return c.log.log_period; });
    t["output.snapshot_period"] = num([](ScenarioConfig& c) -> double& { return c.log.snapshot_period; });

    t["analysis.omega_min"] = num([](ScenarioConfig& c) -> double& { return c.omega_min; });
    t["analysis.omega_max"] = num([](ScenarioConfig& c) -> double& { return c.omega_max; });
    t["analysis.points"] = integer([](ScenarioConfig& c) -> int& { return c.omega_points; });

    t["certify.k_max"] = integer([](ScenarioConfig& c) -> int& { return c.k_max; });
    t["certify.spot_checks"] = integer([](ScenarioConfig& c) -> int& { return c.spot_checks; });
    return t;
  }();
  return table;
}

}  // namespace config_detail

/// All recognised keys, sorted.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : config_detail::setters()) keys.push_back(k);
  return keys;
}

/// Sets one key. `where` prefixes any diagnostic (e.g. "cfg.txt:12").
inline void set_config_value(ScenarioConfig& cfg, const std::string& key,
                             const std::string& value, const std::string& where) {
  const auto& table = config_detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + key + ": " + e.what());
  }
}

/// `key=value` as given to --set.
inline void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set " + assignment + ": expected key=value");
  }
  set_config_value(cfg, config_detail::trim(assignment.substr(0, eq)),
                   config_detail::trim(assignment.substr(eq + 1)), "--set");
}

/// Checks every invariant; the first violation is thrown as a ConfigError.
inline void validate(const ScenarioConfig& c) {
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(c.schema_version) +
                      " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  validate(c.vehicle);
  const SystemMatrices mats = build_matrices(c.vehicle);
  validate(c.grid, mats);
  for (double v : {c.steering.front.offset, c.steering.front.amplitude, c.steering.front.omega,
                   c.steering.rear.offset, c.steering.rear.amplitude, c.steering.rear.omega,
                   c.initial_X(0), c.initial_X(1), c.initial_z(0), c.initial_z(1),
                   c.observer_initial_X(0), c.observer_initial_X(1)}) {
    if (!std::isfinite(v)) throw ConfigError("steering and initial values must be finite");
  }
  if (c.sensors_enabled) validate(c.sensor_spec().value(), c.grid.dt);
  validate(c.observer);
  if (c.observer.path == InjectionPath::kernel) {
    const double r = c.observer.kernel.dt_kernel / c.grid.dt;
    if (!(r >= 1.0) || std::abs(r - std::round(r)) > 1e-9 * r) {
      throw ConfigError("observer.kernel_dt must be an integer multiple of grid.dt");
    }
  }
  if (!(c.log.log_period > 0.0)) throw ConfigError("output.log_period must be > 0");
  if (!(c.log.snapshot_period >= 0.0)) throw ConfigError("output.snapshot_period must be >= 0");
  if (!(c.omega_min > 0.0 && c.omega_max > c.omega_min) || c.omega_points < 2) {
    throw ConfigError("analysis: need 0 < omega_min < omega_max and points >= 2");
  }
  if (c.k_max < 0) throw ConfigError("certify.k_max must be >= 0");
  if (c.spot_checks < 0) throw ConfigError("certify.spot_checks must be >= 0");
  if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

/// Parses config text; `origin` names the source in diagnostics. The result
/// is not validated, so callers can apply overrides first.
inline ScenarioConfig parse_config_text(const std::string& text,
                                        const std::string& origin = "<config>",
                                        ScenarioConfig cfg = {}) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = config_detail::trim(line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = config_detail::trim(body.substr(0, eq));
    const std::string value = config_detail::trim(body.substr(eq + 1));
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(prev->second) + ")");
    }
    seen[key] = line_no;
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    set_config_value(cfg, key, value, where);
  }
  return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

/// Reads and validates a scenario file.
inline ScenarioConfig parse_config(const std::string& path) {
  ScenarioConfig cfg = parse_config_file(path);
  validate(cfg);
  return cfg;
}

/// Effective configuration as `key = value` lines (for run summaries).
inline std::string describe(const ScenarioConfig& c) {
  std::ostringstream os;
  os.precision(10);
  const VehicleParams& v = c.vehicle;
  os << "schema_version = " << c.schema_version << "\n"
     << "mode = " << to_string(c.mode) << "\n"
     << "seed = " << c.seed << "\n"
     << "vehicle.v_x = " << v.v_x << "\nvehicle.m = " << v.m << "\nvehicle.I_z = " << v.I_z
     << "\nvehicle.l_1 = " << v.l_1 << "\nvehicle.l_2 = " << v.l_2
     << "\nvehicle.F_z1 = " << v.F_z1 << "\nvehicle.F_z2 = " << v.F_z2
     << "\nvehicle.L_1 = " << v.L_1 << "\nvehicle.L_2 = " << v.L_2
     << "\nvehicle.sigma_1 = " << v.sigma_1 << "\nvehicle.sigma_2 = " << v.sigma_2
     << "\nvehicle.phi_1 = " << v.phi_1 << "\nvehicle.phi_2 = " << v.phi_2
     << "\nvehicle.chi = " << v.chi << "\n"
     << "grid.cells = " << c.grid.cells << "\ngrid.dt = " << c.grid.dt
     << "\ngrid.horizon = " << c.grid.horizon << "\n"
     << "steering.unit = " << (c.steering.unit == AngleUnit::degrees ? "deg" : "rad") << "\n"
     << "steering.front.offset = " << c.steering.front.offset
     << "\nsteering.front.amplitude = " << c.steering.front.amplitude
     << "\nsteering.front.omega = " << c.steering.front.omega
     << "\nsteering.rear.offset = " << c.steering.rear.offset
     << "\nsteering.rear.amplitude = " << c.steering.rear.amplitude
     << "\nsteering.rear.omega = " << c.steering.rear.omega << "\n"
     << "initial.v_y = " << c.initial_X(0) << "\ninitial.r = " << c.initial_X(1)
     << "\ninitial.z1 = " << c.initial_z(0) << "\ninitial.z2 = " << c.initial_z(1) << "\n"
     << "sensors.enabled = " << (c.sensors_enabled ? "true" : "false")
     << "\nsensors.yaw_rate_std = " << c.sensors.yaw_rate.stddev
     << "\nsensors.yaw_rate_period = " << c.sensors.yaw_rate.period
     << "\nsensors.lateral_accel_std = " << c.sensors.lateral_accel.stddev
     << "\nsensors.lateral_accel_period = " << c.sensors.lateral_accel.period << "\n"
     << "observer.gamma = " << c.observer.gamma << "\nobserver.eta = " << c.observer.eta
     << "\nobserver.filter_order = " << c.observer.filter_order
     << "\nobserver.path = " << to_string(c.observer.path)
     << "\nobserver.fit_order_max = " << c.observer.fit.order_max
     << "\nobserver.fit_tol = " << c.observer.fit.tol
     << "\nobserver.kernel_dt = " << c.observer.kernel.dt_kernel
     << "\nobserver.kernel_horizon = " << c.observer.kernel.T_h
     << "\nobserver.initial_v_y = " << c.observer_initial_X(0)
     << "\nobserver.initial_r = " << c.observer_initial_X(1) << "\n";
  if (!c.filter_file.empty()) os << "observer.filter_file = " << c.filter_file << "\n";
  os << "output.dir = " << c.output_dir << "\noutput.log_period = " << c.log.log_period
     << "\noutput.snapshot_period = " << c.log.snapshot_period << "\n"
     << "analysis.omega_min = " << c.omega_min << "\nanalysis.omega_max = " << c.omega_max
     << "\nanalysis.points = " << c.omega_points << "\n"
     << "certify.k_max = " << c.k_max << "\ncertify.spot_checks = " << c.spot_checks << "\n";
  return os.str();
}

}  // namespace tirepde
