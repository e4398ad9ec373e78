#pragma once

/**
 * @file transport.hpp
 * @brief Method-of-lines discretization of the coupled ODE-PDE plant.
 *
 * First-order upwind differences in xi (characteristics travel from xi = 0
 * towards xi = 1 because Lambda > 0) and explicit Euler in time. The scheme
 * is stable for CFL = max_i(lambda_i) dt / dxi <= 1, which is checked when
 * a GridSpec is validated rather than at every step.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"
#include "tirepde/model.hpp"
#include "tirepde/sensors.hpp"
#include "tirepde/trace.hpp"

namespace tirepde {

struct GridSpec {
  int cells = 50;        ///< N, so dxi = 1 / N
  double dt = 1e-6;      ///< time step [s]
  double horizon = 2.0;  ///< T [s]

  double dxi() const { return 1.0 / cells; }
  std::int64_t steps() const {
    return static_cast<std::int64_t>(std::llround(horizon / dt));
  }
};

inline double cfl_number(const GridSpec& grid, const SystemMatrices& mats) {
  return std::max(mats.lambda(0), mats.lambda(1)) * grid.dt / grid.dxi();
}

inline void validate(const GridSpec& grid, const SystemMatrices& mats) {
  if (grid.cells < 2) throw ConfigError("grid.cells must be >= 2");
  if (!(grid.dt > 0.0)) throw ConfigError("grid.dt must be > 0");
  if (!(grid.horizon > grid.dt)) throw ConfigError("grid.horizon must exceed grid.dt");
  const double cfl = cfl_number(grid, mats);
  if (cfl > 1.0) {
    std::ostringstream os;
    os << "CFL number " << cfl << " exceeds 1 (max lambda "
       << std::max(mats.lambda(0), mats.lambda(1)) << " 1/s, dt " << grid.dt
       << " s, dxi " << grid.dxi() << "); reduce grid.dt";
    throw ConfigError(os.str());
  }
}

enum class AngleUnit { radians, degrees };

/// offset + amplitude * sin(omega t), in SteeringSpec::unit.
struct SteeringChannel {
  double offset = 0.0;
  double amplitude = 0.0;
  double omega = 0.0;  ///< [rad/s]

  double at(double t) const { return offset + amplitude * std::sin(omega * t); }
};

struct SteeringSpec {
  SteeringChannel front{1.0, 2.0, 10.0};
  SteeringChannel rear{};
  AngleUnit unit = AngleUnit::degrees;

  static SteeringSpec none() { return {{}, {}, AngleUnit::radians}; }

  /// Steering angles [rad]; the rear channel is zero without rear actuation.
  Eigen::Vector2d at(double t, int chi) const {
    const double scale =
        unit == AngleUnit::degrees ? std::numbers::pi / 180.0 : 1.0;
    return {scale * front.at(t), chi == 0 ? 0.0 : scale * rear.at(t)};
  }
};

/// Time derivative of the plant. Node 0 of the returned profile is zero so
/// the boundary condition z(0, t) = 0 is preserved.
inline PlantState plant_rhs(const PlantState& state, const Eigen::Vector2d& delta,
                            const SystemMatrices& mats) {
  const int n = cells_of(state.z);
  const double inv_dxi = n;
  PlantState d;
  d.X = mats.A1 * state.X + mats.G * apply_K1(state.z, mats);
  const Eigen::Vector2d source =
      apply_K2(state.z, mats) + mats.A2 * state.X + mats.B * delta;
  d.z = Profile::Zero(2, n + 1);
  for (int j = 1; j <= n; ++j) {
    d.z.col(j) = -(mats.Lambda.diagonal().array() *
                   (state.z.col(j) - state.z.col(j - 1)).array() * inv_dxi)
                      .matrix() +
                 source;
  }
  return d;
}

/// One explicit Euler step of the transport equation with a spatially uniform
/// source, in place. Sweeping from the outlet keeps z_{j-1} at its old value.
inline void advance_transport(Profile& z, const Eigen::Vector2d& source, double dt,
                              const SystemMatrices& mats) {
  const int n = cells_of(z);
  const double inv_dxi = n;
  const double l0 = mats.lambda(0);
  const double l1 = mats.lambda(1);
  for (int j = n; j >= 1; --j) {
    z(0, j) += dt * (-l0 * (z(0, j) - z(0, j - 1)) * inv_dxi + source(0));
    z(1, j) += dt * (-l1 * (z(1, j) - z(1, j - 1)) * inv_dxi + source(1));
  }
  z.col(0).setZero();
}

/// In-place explicit Euler step of the full plant.
inline void advance(PlantState& state, const Eigen::Vector2d& delta, double dt,
                    const SystemMatrices& mats) {
  const Eigen::Vector2d dX = mats.A1 * state.X + mats.G * apply_K1(state.z, mats);
  const Eigen::Vector2d source =
      apply_K2(state.z, mats) + mats.A2 * state.X + mats.B * delta;
  advance_transport(state.z, source, dt, mats);
  state.X += dt * dX;
}

/// Pure form of `advance`.
inline PlantState step(const PlantState& state, const Eigen::Vector2d& delta,
                       double dt, const SystemMatrices& mats) {
  PlantState next = state;
  advance(next, delta, dt, mats);
  return next;
}

/// sqrt(||X||_2^2 + ||z||_{L^2}^2).
inline double state_norm(const PlantState& state) {
  const double zl2 = l2_norm(state.z);
  return std::sqrt(state.X.squaredNorm() + zl2 * zl2);
}

/// Zeroes z(0) when an initial condition violates the boundary condition.
/// Returns true when the profile had to be changed.
inline bool project_boundary(Profile& z) {
  const bool violated = z.col(0).cwiseAbs().maxCoeff() != 0.0;
  z.col(0).setZero();
  return violated;
}

inline bool all_finite(const PlantState& s) {
  return s.X.allFinite() && s.z.allFinite();
}

struct LogOptions {
  double log_period = 1e-3;       ///< trace row spacing [s]
  double snapshot_period = 0.0;   ///< profile snapshot spacing [s], 0 = off
  std::int64_t finite_check_every = 1000;
};

inline std::int64_t every_steps(double period, double dt) {
  if (!(period > 0.0)) return 0;
  return std::max<std::int64_t>(1, std::llround(period / dt));
}

struct OpenLoopOptions {
  LogOptions log;
  std::optional<SensorSpec> sensors;  ///< clean outputs are logged when absent
};

/// Open-loop trajectory from `ic`. A non-finite state stops the run and is
/// reported through SimTrace::aborted_at instead of an exception.
inline SimTrace simulate_open_loop(const PlantState& ic, const SteeringSpec& steering,
                                   const GridSpec& grid, const SystemMatrices& mats,
                                   const OpenLoopOptions& options = {}) {
  validate(grid, mats);
  if (cells_of(ic.z) != grid.cells) {
    throw ConfigError("initial profile does not match grid.cells");
  }
  SimTrace trace;
  trace.note("mode", "open-loop");
  PlantState state = ic;
  if (project_boundary(state.z)) {
    trace.warnings.push_back(
        "initial profile violated z(0)=0; node 0 was set to zero");
  }

  std::optional<SensorModel> sensors;
  if (options.sensors) sensors.emplace(*options.sensors, grid.dt);

  const std::int64_t steps = grid.steps();
  const std::int64_t log_every = every_steps(options.log.log_period, grid.dt);
  const std::int64_t snap_every = every_steps(options.log.snapshot_period, grid.dt);
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * grid.dt;
    const Eigen::Vector2d delta = steering.at(t, mats.params.chi);
    const bool log_now = log_every > 0 && (n % log_every == 0 || n == steps);
    Eigen::Vector2d y_meas;
    if (sensors) {
      y_meas = sensors->sample(n, measurement(state, mats));
    } else if (log_now) {
      y_meas = measurement(state, mats);
    }
    if (n % options.log.finite_check_every == 0 || n == steps) {
      if (!all_finite(state)) {
        trace.aborted_at = t;
        trace.abort_reason = "non-finite plant state";
        break;
      }
    }
    if (log_now) {
      TraceRow row;
      row.t = t;
      row.X = state.X;
      row.beta = sideslip(state.X, mats.params);
      row.forces = axle_forces(state.z, mats);
      row.delta = delta;
      row.y_meas = y_meas;
      row.plant_norm = state_norm(state);
      trace.rows.push_back(row);
    }
    if (snap_every > 0 && n % snap_every == 0) {
      trace.snapshots.push_back({t, state.z, Profile()});
    }
    if (n == steps) break;
    advance(state, delta, grid.dt, mats);
  }
  return trace;
}

/// L^2 history of the PDE subsystem alone: X held at zero, no steering.
inline std::vector<std::pair<double, double>> transport_decay_history(
    Profile z, const GridSpec& grid, const SystemMatrices& mats,
    double log_period = 1e-4) {
  validate(grid, mats);
  project_boundary(z);
  std::vector<std::pair<double, double>> history;
  const std::int64_t steps = grid.steps();
  const std::int64_t log_every = every_steps(log_period, grid.dt);
  for (std::int64_t n = 0; n <= steps; ++n) {
    if (n % log_every == 0 || n == steps) {
      history.emplace_back(static_cast<double>(n) * grid.dt, l2_norm(z));
    }
    if (n == steps) break;
    advance_transport(z, apply_K2(z, mats), grid.dt, mats);
  }
  return history;
}

}  // namespace tirepde
