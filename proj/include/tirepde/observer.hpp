#pragma once

/**
 * @file observer.hpp
 * @brief Inverse-dynamics observer: plant copy, static output injection
 * L Y~_1 and the convolution (H * Y~)(t) with the gain
 *
 *   H(s) = -w(s) [eta I + G H1(s)] C^{-1}(s),   w(s) = gamma / (s + gamma).
 *
 * The convolution is realized either by a stable rational fit of H(i omega)
 * or by direct quadrature against a sampled impulse response.
 */

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"
#include "tirepde/frequency.hpp"
#include "tirepde/kernel.hpp"
#include "tirepde/model.hpp"
#include "tirepde/sensors.hpp"
#include "tirepde/trace.hpp"
#include "tirepde/transport.hpp"
#include "tirepde/vector_fit.hpp"

namespace tirepde {

enum class InjectionPath { rational, kernel };

inline const char* to_string(InjectionPath p) {
  return p == InjectionPath::rational ? "rational" : "kernel";
}

/// Time-domain realization of Y~ -> (H * Y~). Call `apply` once per step
/// with the current output error; it returns the operator output at the
/// current time and advances the internal state by one step.
class InjectionOperator {
 public:
  /// No injection at all (output identically zero).
  static InjectionOperator none() { return InjectionOperator(); }

  /// Each mode is integrated exactly under a zero-order hold of its input,
  /// x+ = e^{p dt} x + (e^{p dt} - 1)/p u, which is stable for any Re p < 0.
  static InjectionOperator rational(const RationalFilter& f, double dt) {
    if (f.rows() != 2 || f.cols() != 2) {
      throw std::invalid_argument("injection filter must be 2x2");
    }
    if (!f.stable()) throw NumericalError("injection filter has an unstable pole");
    InjectionOperator op;
    op.path_ = InjectionPath::rational;
    op.D_ = f.D;
    for (const auto& m : f.modes) {
      Mode mode;
      mode.decay = std::exp(m.pole * dt);
      mode.gain = expm1(m.pole * dt) / m.pole;
      mode.residue = (m.paired ? 2.0 : 1.0) * m.residue;
      op.modes_.push_back(mode);
    }
    return op;
  }

  /// Trapezoid quadrature over the kernel window at the kernel rate; the
  /// convolution output is held between kernel ticks, the feedthrough is not.
  static InjectionOperator kernel(const ImpulseResponseKernel& k, double dt) {
    if (k.rows() != 2 || k.cols() != 2) {
      throw std::invalid_argument("injection kernel must be 2x2");
    }
    const double ratio = k.dt / dt;
    const auto r = static_cast<std::int64_t>(std::llround(ratio));
    if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * ratio) {
      throw ConfigError("kernel sample period must be an integer multiple of dt");
    }
    InjectionOperator op;
    op.path_ = InjectionPath::kernel;
    op.D_ = k.D;
    op.kernel_dt_ = k.dt;
    op.ratio_ = r;
    op.taps_.reserve(k.samples.size());
    for (const auto& s : k.samples) op.taps_.push_back(s);
    op.history_.assign(k.samples.size(), Eigen::Vector2d::Zero());
    return op;
  }

  std::optional<InjectionPath> path() const { return path_; }

  Eigen::Vector2d apply(const Eigen::Vector2d& y_tilde) {
    if (!path_) return Eigen::Vector2d::Zero();
    Eigen::Vector2d out = D_ * y_tilde;
    if (*path_ == InjectionPath::rational) {
      const Eigen::Vector2cd u = y_tilde.cast<cdouble>();
      for (auto& m : modes_) {
        out += (m.residue * m.state).real();
        m.state = m.decay * m.state + m.gain * u;
      }
    } else {
      if (step_ % ratio_ == 0) tick(y_tilde);
      out += held_;
    }
    ++step_;
    return out;
  }

  bool finite() const {
    for (const auto& m : modes_) {
      if (!m.state.allFinite()) return false;
    }
    return held_.allFinite();
  }

  void reset() {
    for (auto& m : modes_) m.state.setZero();
    for (auto& h : history_) h.setZero();
    held_.setZero();
    step_ = 0;
    filled_ = 0;
    head_ = 0;
  }

 private:
  struct Mode {
    cdouble decay;
    cdouble gain;
    Eigen::Matrix2cd residue;
    Eigen::Vector2cd state = Eigen::Vector2cd::Zero();
  };

  void tick(const Eigen::Vector2d& y) {
    const std::size_t L = taps_.size();
    head_ = (head_ + L - 1) % L;  // history_[head_] is the newest sample
    history_[head_] = y;
    filled_ = std::min(filled_ + 1, L);
    const std::size_t m = filled_ - 1;  // quadrature intervals available
    held_.setZero();
    if (m == 0) return;
    for (std::size_t j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 : 1.0;
      held_ += w * (taps_[j] * history_[(head_ + j) % L]);
    }
    held_ *= kernel_dt_;
  }

  std::optional<InjectionPath> path_;
  Eigen::Matrix2d D_ = Eigen::Matrix2d::Zero();
  std::vector<Mode> modes_;
  std::vector<Eigen::Matrix2d> taps_;
  std::vector<Eigen::Vector2d> history_;
  double kernel_dt_ = 0.0;
  std::int64_t ratio_ = 1;
  std::int64_t step_ = 0;
  std::size_t filled_ = 0;
  std::size_t head_ = 0;
  Eigen::Vector2d held_ = Eigen::Vector2d::Zero();
};

struct InjectionSpec {
  double gamma = 500.0;
  double eta = 1.0;
  int filter_order = 1;  ///< order of w(s); only the first-order filter exists
  InjectionPath path = InjectionPath::rational;
  FitOptions fit;
  KernelOptions kernel;
};

inline void validate(const InjectionSpec& spec) {
  if (!(spec.gamma > 0.0)) throw ConfigError("observer.gamma must be > 0");
  if (!(spec.eta > 0.0)) throw ConfigError("observer.eta must be > 0");
  if (spec.filter_order != 1) {
    throw ConfigError("observer.filter_order: only the first-order filter is implemented");
  }
  if (!(spec.fit.tol > 0.0)) throw ConfigError("observer.fit_tol must be > 0");
  if (spec.fit.order_max < spec.fit.order_min) {
    throw ConfigError("observer.fit_order_max must be >= the minimum order (4)");
  }
}

struct SynthesizedInjection {
  InjectionOperator op;
  std::optional<FitResult> fit;
  std::optional<ImpulseResponseKernel> kernel;
};

inline SynthesizedInjection synthesize_injection(const InjectionSpec& spec,
                                                 const SystemMatrices& mats, double dt) {
  validate(spec);
  SynthesizedInjection out;
  if (spec.path == InjectionPath::rational) {
    FitOptions fit = spec.fit;
    fit.dt = dt;
    out.fit = fit_injection_filter(
        injection_gain_response(default_grid(), spec.gamma, spec.eta, mats), fit);
    out.op = InjectionOperator::rational(out.fit->filter, dt);
  } else {
    out.kernel = kernel_from_function(injection_gain_function(spec.gamma, spec.eta, mats),
                                      spec.kernel);
    out.op = InjectionOperator::kernel(*out.kernel, dt);
  }
  return out;
}

struct ObserverState {
  Eigen::Vector2d X_hat = Eigen::Vector2d::Zero();
  Profile z_hat;
};

struct ObserverSignals {
  Eigen::Vector2d y_hat;
  Eigen::Vector2d y_tilde;
  Eigen::Vector2d injection;  ///< (H * Y~) at the current time
};

/// One explicit step of the observer, in place.
inline ObserverSignals observer_step(ObserverState& obs, const Eigen::Vector2d& y_meas,
                                     const Eigen::Vector2d& delta, double dt,
                                     const SystemMatrices& mats,
                                     InjectionOperator& injection) {
  ObserverSignals sig;
  const Eigen::Vector2d k1z = apply_K1(obs.z_hat, mats);
  sig.y_hat = {mats.C1.dot(obs.X_hat), mats.C2.dot(k1z)};
  sig.y_tilde = y_meas - sig.y_hat;
  sig.injection = injection.apply(sig.y_tilde);
  const Eigen::Vector2d dX = mats.A1 * obs.X_hat + mats.G * k1z -
                             mats.L_gain * sig.y_tilde(0) - sig.injection;
  const Eigen::Vector2d source =
      apply_K2(obs.z_hat, mats) + mats.A2 * obs.X_hat + mats.B * delta;
  advance_transport(obs.z_hat, source, dt, mats);
  obs.X_hat += dt * dX;
  return sig;
}

/// Error dynamics integrated directly: X~' = G (K1 z~) + (H * Y~), with
/// Y~ = [C1 X~, C2 (K1 z~)] and z~ driven by K2 z~(1) + A2 X~.
inline void error_step(PlantState& err, double dt, const SystemMatrices& mats,
                       InjectionOperator& injection) {
  const Eigen::Vector2d k1z = apply_K1(err.z, mats);
  const Eigen::Vector2d y_tilde{mats.C1.dot(err.X), mats.C2.dot(k1z)};
  const Eigen::Vector2d dX = mats.G * k1z + injection.apply(y_tilde);
  advance_transport(err.z, apply_K2(err.z, mats) + mats.A2 * err.X, dt, mats);
  err.X += dt * dX;
}

inline PlantState difference(const PlantState& plant, const ObserverState& obs) {
  return {plant.X - obs.X_hat, plant.z - obs.z_hat};
}

struct ClosedLoopSetup {
  PlantState plant_ic;
  ObserverState observer_ic;  ///< z_hat empty means the zero state
  SteeringSpec steering;
  GridSpec grid;
  std::optional<SensorSpec> sensors;  ///< ideal sampling at dt when absent
  LogOptions log;
};

/// Co-simulates plant, sensors and observer on the common clock.
inline SimTrace simulate_closed(const ClosedLoopSetup& setup, const SystemMatrices& mats,
                                InjectionOperator injection) {
  validate(setup.grid, mats);
  const GridSpec& grid = setup.grid;
  if (cells_of(setup.plant_ic.z) != grid.cells) {
    throw ConfigError("initial profile does not match grid.cells");
  }
  SimTrace trace;
  trace.note("mode", "closed-loop");
  PlantState plant = setup.plant_ic;
  if (project_boundary(plant.z)) {
    trace.warnings.push_back("plant initial profile violated z(0)=0; node 0 was set to zero");
  }
  ObserverState obs = setup.observer_ic;
  if (obs.z_hat.size() == 0) obs.z_hat = zero_profile(grid.cells);
  if (cells_of(obs.z_hat) != grid.cells) {
    throw ConfigError("observer initial profile does not match grid.cells");
  }
  if (project_boundary(obs.z_hat)) {
    trace.warnings.push_back("observer initial profile violated z(0)=0; node 0 was set to zero");
  }
  SensorModel sensors(setup.sensors.value_or(SensorSpec::ideal(grid.dt)), grid.dt);

  const std::int64_t steps = grid.steps();
  const std::int64_t log_every = every_steps(setup.log.log_period, grid.dt);
  const std::int64_t snap_every = every_steps(setup.log.snapshot_period, grid.dt);
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * grid.dt;
    const Eigen::Vector2d delta = setup.steering.at(t, mats.params.chi);
    const Eigen::Vector2d y_meas = sensors.sample(n, measurement(plant, mats));
    if (n % setup.log.finite_check_every == 0 || n == steps) {
      if (!all_finite(plant) || !obs.X_hat.allFinite() || !obs.z_hat.allFinite() ||
          !injection.finite()) {
        trace.aborted_at = t;
        trace.abort_reason = "non-finite plant or observer state";
        break;
      }
    }
    const bool log_now = log_every > 0 && (n % log_every == 0 || n == steps);
    if (log_now) {
      const PlantState err = difference(plant, obs);
      TraceRow row;
      row.t = t;
      row.X = plant.X;
      row.beta = sideslip(plant.X, mats.params);
      row.forces = axle_forces(plant.z, mats);
      row.delta = delta;
      row.y_meas = y_meas;
      row.X_hat = obs.X_hat;
      row.beta_hat = sideslip(obs.X_hat, mats.params);
      row.err_X = err.X.norm();
      row.err_z = l2_norm(err.z);
      row.err_total = std::sqrt(row.err_X * row.err_X + row.err_z * row.err_z);
      row.plant_norm = state_norm(plant);
      row.observer_norm = state_norm({obs.X_hat, obs.z_hat});
      trace.rows.push_back(row);
    }
    if (snap_every > 0 && n % snap_every == 0) {
      trace.snapshots.push_back({t, plant.z, plant.z - obs.z_hat});
    }
    if (n == steps) break;
    observer_step(obs, y_meas, delta, grid.dt, mats, injection);
    advance(plant, delta, grid.dt, mats);
  }
  return trace;
}

/// Error trajectory of the direct error-dynamics simulation; only the
/// error columns and t of each row are meaningful.
inline SimTrace simulate_error_dynamics(const PlantState& err0, const GridSpec& grid,
                                        const SystemMatrices& mats,
                                        InjectionOperator injection,
                                        const LogOptions& log = {}) {
  validate(grid, mats);
  SimTrace trace;
  trace.note("mode", "error-dynamics");
  PlantState err = err0;
  if (project_boundary(err.z)) {
    trace.warnings.push_back("error initial profile violated z(0)=0; node 0 was set to zero");
  }
  const std::int64_t steps = grid.steps();
  const std::int64_t log_every = every_steps(log.log_period, grid.dt);
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * grid.dt;
    if (n % log.finite_check_every == 0 || n == steps) {
      if (!all_finite(err) || !injection.finite()) {
        trace.aborted_at = t;
        trace.abort_reason = "non-finite error state";
        break;
      }
    }
    if (log_every > 0 && (n % log_every == 0 || n == steps)) {
      TraceRow row;
      row.t = t;
      row.err_X = err.X.norm();
      row.err_z = l2_norm(err.z);
      row.err_total = std::sqrt(row.err_X * row.err_X + row.err_z * row.err_z);
      trace.rows.push_back(row);
    }
    if (n == steps) break;
    error_step(err, grid.dt, mats, injection);
  }
  return trace;
}

}  // namespace tirepde
