#pragma once

// Sampled, noisy yaw-rate and lateral-acceleration sensors.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"

namespace tirepde {

struct SensorChannelSpec {
  double stddev = 0.0;  ///< additive Gaussian noise, SI units of the channel
  double period = 0.0;  ///< sample period [s]
};

struct SensorSpec {
  SensorChannelSpec yaw_rate{0.01, 0.005};      ///< Y1 [rad/s]
  SensorChannelSpec lateral_accel{0.5, 0.01};   ///< Y2 [m/s^2]
  std::uint64_t seed = 1;

  /// Noise-free sensors sampled at every simulation step.
  static SensorSpec ideal(double dt) { return {{0.0, dt}, {0.0, dt}, 0}; }
};

/// Number of simulation steps in one sample period; throws unless the period
/// is a positive integer multiple of dt.
inline std::int64_t period_in_steps(double period, double dt, const char* name) {
  const double ratio = period / dt;
  const double rounded = std::round(ratio);
  if (!(period > 0.0) || rounded < 1.0 ||
      std::abs(ratio - rounded) > 1e-6 * rounded) {
    std::ostringstream os;
    os << "sensor " << name << " period " << period
       << " s is not a positive integer multiple of dt = " << dt << " s";
    throw ConfigError(os.str());
  }
  return static_cast<std::int64_t>(rounded);
}

inline void validate(const SensorSpec& spec, double dt) {
  if (!(spec.yaw_rate.stddev >= 0.0) || !(spec.lateral_accel.stddev >= 0.0)) {
    throw ConfigError("sensor noise standard deviation must be >= 0");
  }
  period_in_steps(spec.yaw_rate.period, dt, "yaw_rate");
  period_in_steps(spec.lateral_accel.period, dt, "lateral_accel");
}

/// Streaming sample-and-hold sensor pair. Each channel owns an independent
/// generator derived from (seed, channel), so runs are reproducible and
/// parallel runs with different seeds never share a stream.
class SensorModel {
 public:
  SensorModel(const SensorSpec& spec, double dt)
      : spec_(spec),
        period_steps_{period_in_steps(spec.yaw_rate.period, dt, "yaw_rate"),
                      period_in_steps(spec.lateral_accel.period, dt,
                                      "lateral_accel")},
        engines_{make_engine(spec.seed, 0), make_engine(spec.seed, 1)} {
    validate(spec, dt);
  }

  /// Measured output at simulation step `step` (t = step * dt). Steps must be
  /// visited in increasing order.
  Eigen::Vector2d sample(std::int64_t step, const Eigen::Vector2d& clean) {
    const double stddev[2] = {spec_.yaw_rate.stddev, spec_.lateral_accel.stddev};
    for (int c = 0; c < 2; ++c) {
      if (step % period_steps_[c] == 0 || !initialized_) {
        double noise = 0.0;
        if (stddev[c] > 0.0) noise = stddev[c] * normals_[c](engines_[c]);
        held_(c) = clean(c) + noise;
      }
    }
    initialized_ = true;
    return held_;
  }

  const SensorSpec& spec() const { return spec_; }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t channel) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32), channel,
                      0x5e115u};
    return std::mt19937_64(seq);
  }

  SensorSpec spec_;
  std::int64_t period_steps_[2];
  std::mt19937_64 engines_[2];
  // One distribution per channel: normal_distribution caches a spare draw.
  std::normal_distribution<double> normals_[2];
  Eigen::Vector2d held_ = Eigen::Vector2d::Zero();
  bool initialized_ = false;
};

/// Batch form: `clean[n]` is the clean output at t = n * dt.
inline std::vector<Eigen::Vector2d> sample_and_corrupt(
    std::span<const Eigen::Vector2d> clean, const SensorSpec& spec, double dt) {
  SensorModel model(spec, dt);
  std::vector<Eigen::Vector2d> out;
  out.reserve(clean.size());
  for (std::size_t n = 0; n < clean.size(); ++n) {
    out.push_back(model.sample(static_cast<std::int64_t>(n), clean[n]));
  }
  return out;
}

}  // namespace tirepde
